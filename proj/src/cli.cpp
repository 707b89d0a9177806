#include "stackrnn/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "stackrnn/controller.hpp"
#include "stackrnn/corpus.hpp"
#include "stackrnn/error.hpp"
#include "stackrnn/parsing.hpp"
#include "stackrnn/training.hpp"

namespace stackrnn::cli {

namespace {

struct ModelOptions {
  std::string preset = "u1";
  std::size_t embedding_dim = 50;
  std::size_t hidden_dim = 100;
  std::size_t stack_dim = 16;
  std::size_t k = 4;
  bool tie_embeddings = false;
};

struct Options {
  std::uint64_t seed = 1;

  // data
  std::string train;
  std::string valid;
  std::string corpus;
  std::string data;
  std::string lexicon;
  std::string sentences;
  std::string candidate;
  std::string gold;
  double holdout = 0.1;
  std::size_t min_count = 1;

  // outputs
  std::string checkpoint;
  std::string output;
  std::string metrics;
  std::string vocab_out;

  ModelOptions model;
  training::TrainConfig train_config;

  // gen-synthetic
  std::size_t n = 1000;
  std::size_t max_attractors = 2;
  std::string lm_out;
  std::string cls_out;
  std::string lexicon_out;

  // trace / parse
  bool distributions = false;
  bool decapitalize = false;
  std::string aggregate_by;
  std::string aggregate_output;
  std::size_t bins = 20;
  std::string style = "round";
  std::string direction = "right";
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw data_error("cannot write " + path);
  f << content;
  if (!f) throw data_error("failed writing " + path);
}

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw usage_error(std::string("missing required option ") + flag);
  std::ifstream f(path);
  if (!f) throw data_error(std::string(flag) + ": cannot open " + path);
}

ControllerConfig model_config(const ModelOptions& m, std::size_t vocab_size, OutputMode mode) {
  ControllerConfig c = preset(m.preset);
  c.vocab_size = vocab_size;
  c.embedding_dim = m.embedding_dim;
  c.hidden_dim = m.hidden_dim;
  c.stack_dim = m.stack_dim;
  c.k = m.k;
  c.tie_embeddings = m.tie_embeddings;
  c.output_mode = mode;
  return c;
}

template <class T>
std::pair<std::vector<T>, std::vector<T>> split_holdout(std::vector<T> all, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw usage_error("--holdout must be in [0, 1)");
  const auto held = static_cast<std::size_t>(std::floor(static_cast<double>(all.size()) * fraction));
  if (held == 0 || held >= all.size()) return {std::move(all), {}};
  std::vector<T> valid(all.end() - static_cast<long>(held), all.end());
  all.resize(all.size() - held);
  return {std::move(all), std::move(valid)};
}

struct LoadedModel {
  StackRnn model;
  corpus::Vocabulary vocab;
};

LoadedModel load_model(const std::string& path) {
  require_file(path, "--checkpoint");
  Checkpoint cp = load_checkpoint(path);
  corpus::Vocabulary vocab = corpus::Vocabulary::from_tokens(cp.vocabulary);
  if (vocab.size() != cp.config.vocab_size) throw data_error("checkpoint vocabulary size mismatch");
  return {StackRnn(cp.config, std::move(cp.parameters)), std::move(vocab)};
}

void log_epoch(std::ostream& err, const training::EpochRecord& r) {
  err << "epoch " << r.epoch << " steps " << r.steps << " train_loss " << r.train_loss << " valid_loss "
      << r.valid_loss << " valid_metric " << r.valid_metric << (r.improved ? " *" : "") << '\n';
}

int cmd_gen_synthetic(const Options& o, std::ostream& out) {
  const auto s = corpus::gen_synthetic_agreement(o.seed, o.n, o.max_attractors);
  if (o.lm_out.empty() && o.cls_out.empty()) {
    for (const auto& l : s.lm_lines) out << l << '\n';
  }
  if (!o.lm_out.empty()) corpus::write_lines(o.lm_out, s.lm_lines);
  if (!o.cls_out.empty()) corpus::write_cls_rows(o.cls_out, s.examples);
  if (!o.lexicon_out.empty()) s.lexicon.save(o.lexicon_out);
  return exit_ok;
}

int cmd_train_lm(const Options& o, std::ostream& out, std::ostream& err) {
  require_file(o.train, "--train");
  if (o.checkpoint.empty()) throw usage_error("missing required option --checkpoint");
  if (!o.valid.empty()) require_file(o.valid, "--valid");
  const auto lines = corpus::read_lines(o.train);
  auto [train_lines, valid_lines] =
      o.valid.empty() ? split_holdout(lines, o.holdout) : std::make_pair(lines, corpus::read_lines(o.valid));
  const corpus::Vocabulary vocab = corpus::Vocabulary::build(train_lines, o.min_count);
  const auto train = corpus::encode_lm_corpus(train_lines, vocab);
  const auto valid = corpus::encode_lm_corpus(valid_lines, vocab);

  StackRnn model(model_config(o.model, vocab.size(), OutputMode::lm_softmax), o.seed);
  training::TrainConfig tc = o.train_config;
  tc.seed = o.seed;
  const auto log = training::train_lm(model, train, valid, tc, [&](const auto& r) { log_epoch(err, r); });

  save_checkpoint(o.checkpoint, model, vocab.tokens());
  if (!o.vocab_out.empty()) vocab.save(o.vocab_out);
  std::ostringstream csv;
  training::write_log_csv(csv, log);
  if (!o.metrics.empty()) emit(o.metrics, csv.str(), out);
  return exit_ok;
}

int cmd_train_cls(const Options& o, std::ostream& out, std::ostream& err) {
  require_file(o.train, "--train");
  if (o.checkpoint.empty()) throw usage_error("missing required option --checkpoint");
  if (!o.valid.empty()) require_file(o.valid, "--valid");
  const auto rows = corpus::load_cls_rows(o.train);
  auto [train_rows, valid_rows] =
      o.valid.empty() ? split_holdout(rows, o.holdout) : std::make_pair(rows, corpus::load_cls_rows(o.valid));
  std::vector<std::string> prefixes;
  for (const auto& r : train_rows) prefixes.push_back(r.prefix);
  const corpus::Vocabulary vocab = corpus::Vocabulary::build(prefixes, o.min_count);
  const auto train = corpus::encode_cls_rows(train_rows, vocab);
  const auto valid = corpus::encode_cls_rows(valid_rows, vocab);

  StackRnn model(model_config(o.model, vocab.size(), OutputMode::binary_class), o.seed);
  training::TrainConfig tc = o.train_config;
  tc.seed = o.seed;
  const auto log = training::train_classifier(model, train, valid, tc, [&](const auto& r) { log_epoch(err, r); });
  if (log.early_stopped) err << "early stopping; best epoch " << log.best_epoch << '\n';

  save_checkpoint(o.checkpoint, model, vocab.tokens());
  if (!o.vocab_out.empty()) vocab.save(o.vocab_out);
  std::ostringstream csv;
  training::write_log_csv(csv, log);
  if (!o.metrics.empty()) emit(o.metrics, csv.str(), out);
  return exit_ok;
}

int cmd_eval_ppl(const Options& o, std::ostream& out) {
  const auto m = load_model(o.checkpoint);
  require_file(o.corpus, "--corpus");
  if (m.model.config().output_mode != OutputMode::lm_softmax) throw usage_error("eval-ppl needs a language model");
  const auto data = corpus::load_lm_corpus(o.corpus, m.vocab);
  const auto report = training::eval_perplexity(m.model, data);
  std::ostringstream csv;
  training::write_perplexity_csv(csv, report);
  emit(o.output, csv.str(), out);
  return exit_ok;
}

int cmd_eval_agreement(const Options& o, std::ostream& out) {
  const auto m = load_model(o.checkpoint);
  require_file(o.data, "--data");
  require_file(o.lexicon, "--lexicon");
  if (m.model.config().output_mode != OutputMode::lm_softmax) {
    throw usage_error("eval-agreement needs a language model");
  }
  const auto data = corpus::load_cls_dataset(o.data, m.vocab);
  const auto lex = corpus::InflectionLexicon::load(o.lexicon);
  const auto report = training::eval_agreement_lm(training::lm_scorer(m.model), data, lex, m.vocab);
  std::ostringstream csv;
  training::write_accuracy_csv(csv, report);
  emit(o.output, csv.str(), out);
  return exit_ok;
}

int cmd_eval_cls(const Options& o, std::ostream& out) {
  const auto m = load_model(o.checkpoint);
  require_file(o.data, "--data");
  const auto data = corpus::load_cls_dataset(o.data, m.vocab);
  const auto report = training::eval_classifier(m.model, data);
  std::ostringstream csv;
  training::write_accuracy_csv(csv, report);
  emit(o.output, csv.str(), out);
  return exit_ok;
}

struct TracedSentence {
  std::vector<std::string> words;
  std::vector<StepTrace> traces;
};

std::vector<TracedSentence> trace_sentences(const LoadedModel& m, const Options& o) {
  require_file(o.sentences, "--sentences");
  std::vector<TracedSentence> out;
  for (const auto& raw : corpus::read_lines(o.sentences)) {
    const std::string line = o.decapitalize ? corpus::decapitalize_first(raw) : raw;
    auto words = corpus::tokenize(line);
    if (words.empty()) continue;
    std::vector<TokenId> inputs{corpus::eos_id};
    for (const auto& w : words) inputs.push_back(m.vocab.id(w));
    ad::Graph g(&m.model.parameters());
    auto run = m.model.run(g, inputs);
    run.traces.erase(run.traces.begin());
    out.push_back({std::move(words), std::move(run.traces)});
  }
  return out;
}

std::string trace_csv(const std::vector<TracedSentence>& sentences, bool distributions, std::size_t k) {
  std::ostringstream csv;
  csv << std::setprecision(17) << "token,push,pop,read,total_strength,sentence_id";
  if (distributions) {
    for (const char* head : {"push", "pop", "read"}) {
      for (std::size_t i = 0; i <= k; ++i) csv << ',' << head << "_p" << i;
    }
  }
  csv << '\n';
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& ts = sentences[s];
    for (std::size_t t = 0; t < ts.words.size(); ++t) {
      const StepTrace& tr = ts.traces[t];
      csv << csv_field(ts.words[t]) << ',' << tr.push << ',' << tr.pop << ',' << tr.read << ',' << tr.total_strength
          << ',' << s;
      if (distributions) {
        for (const auto* dist : {&tr.push_distribution, &tr.pop_distribution, &tr.read_distribution}) {
          for (std::size_t i = 0; i <= k; ++i) {
            csv << ',';
            if (i < dist->size()) csv << (*dist)[i];
          }
        }
      }
      csv << '\n';
    }
  }
  return csv.str();
}

std::string aggregate_csv(const std::vector<TracedSentence>& sentences, const std::string& tokenfile,
                          std::size_t bins, double upper) {
  if (bins == 0) throw usage_error("--bins must be positive");
  std::map<std::string, std::string> word_class;
  const auto lines = corpus::read_lines(tokenfile);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto tab = lines[n].find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == lines[n].size()) {
      throw data_error(tokenfile + ": line " + std::to_string(n + 1) + ": expected word \\t class");
    }
    word_class[lines[n].substr(0, tab)] = lines[n].substr(tab + 1);
  }
  // class -> instruction -> counts
  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> hist;
  auto add = [&](const std::string& cls, const char* instr, double v) {
    auto& h = hist[cls][instr];
    if (h.empty()) h.assign(bins, 0);
    auto b = static_cast<std::size_t>(std::floor(v / upper * static_cast<double>(bins)));
    ++h[std::min(b, bins - 1)];
  };
  for (const auto& s : sentences) {
    for (std::size_t t = 0; t < s.words.size(); ++t) {
      std::vector<std::string> classes{"all"};
      auto it = word_class.find(s.words[t]);
      if (it != word_class.end()) classes.push_back(it->second);
      for (const auto& c : classes) {
        add(c, "push", s.traces[t].push);
        add(c, "pop", s.traces[t].pop);
      }
    }
  }
  std::ostringstream csv;
  csv << std::setprecision(17) << "class,instruction,bin_lo,bin_hi,count\n";
  for (const auto& [cls, by_instr] : hist) {
    for (const auto& [instr, counts] : by_instr) {
      for (std::size_t b = 0; b < bins; ++b) {
        const double lo = upper * static_cast<double>(b) / static_cast<double>(bins);
        const double hi = upper * static_cast<double>(b + 1) / static_cast<double>(bins);
        csv << csv_field(cls) << ',' << instr << ',' << lo << ',' << hi << ',' << counts[b] << '\n';
      }
    }
  }
  return csv.str();
}

int cmd_trace(const Options& o, std::ostream& out) {
  const auto m = load_model(o.checkpoint);
  if (!o.aggregate_by.empty()) require_file(o.aggregate_by, "--aggregate-by");
  const auto sentences = trace_sentences(m, o);
  emit(o.output, trace_csv(sentences, o.distributions, m.model.config().k), out);
  if (!o.aggregate_by.empty()) {
    const double upper = static_cast<double>(m.model.config().k);
    const std::string agg = aggregate_csv(sentences, o.aggregate_by, o.bins, upper);
    emit(o.aggregate_output, agg, out);
  }
  return exit_ok;
}

parsing::BracketStyle bracket_style(const std::string& s) {
  if (s == "round") return parsing::BracketStyle::round;
  if (s == "square") return parsing::BracketStyle::square;
  throw usage_error("--style must be round or square");
}

int cmd_parse(const Options& o, std::ostream& out) {
  const auto m = load_model(o.checkpoint);
  const auto style = bracket_style(o.style);
  const auto sentences = trace_sentences(m, o);
  std::string text;
  for (const auto& s : sentences) {
    const auto d = parsing::distances_from_trace(s.traces, m.model.config().preset);
    text += parsing::to_brackets(parsing::make_tree(s.words, d), s.words, style);
    text.push_back('\n');
  }
  emit(o.output, text, out);
  return exit_ok;
}

int cmd_branching(const Options& o, std::ostream& out) {
  require_file(o.sentences, "--sentences");
  const auto style = bracket_style(o.style);
  if (o.direction != "right" && o.direction != "left") throw usage_error("--direction must be right or left");
  std::string text;
  for (const auto& raw : corpus::read_lines(o.sentences)) {
    const std::string line = o.decapitalize ? corpus::decapitalize_first(raw) : raw;
    const auto words = corpus::tokenize(line);
    if (words.empty()) continue;
    const auto tree =
        o.direction == "right" ? parsing::right_branching(words.size()) : parsing::left_branching(words.size());
    text += parsing::to_brackets(tree, words, style);
    text.push_back('\n');
  }
  emit(o.output, text, out);
  return exit_ok;
}

std::vector<parsing::BracketedTree> read_trees(const std::string& path) {
  std::vector<parsing::BracketedTree> out;
  const auto lines = corpus::read_lines(path);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (corpus::tokenize(lines[n]).empty()) continue;
    try {
      out.push_back(parsing::from_brackets(lines[n]));
    } catch (const Error& e) {
      throw data_error(path + ": line " + std::to_string(n + 1) + ": " + e.what());
    }
  }
  return out;
}

int cmd_score_f1(const Options& o, std::ostream& out) {
  require_file(o.candidate, "--candidate");
  require_file(o.gold, "--gold");
  const auto cand = read_trees(o.candidate);
  const auto gold = read_trees(o.gold);
  if (cand.size() != gold.size()) {
    throw data_error("candidate file has " + std::to_string(cand.size()) + " trees, gold has " +
                     std::to_string(gold.size()));
  }
  if (cand.empty()) throw data_error("no trees to score");
  std::vector<parsing::ParseNode> c;
  std::vector<parsing::ParseNode> g;
  std::ostringstream csv;
  csv << std::setprecision(17) << "sentence_id,precision,recall,f1\n";
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (cand[i].words.size() != gold[i].words.size()) {
      throw data_error("sentence " + std::to_string(i) + ": candidate has " + std::to_string(cand[i].words.size()) +
                       " leaves, gold has " + std::to_string(gold[i].words.size()));
    }
    const auto s = parsing::unlabeled_f1(cand[i].tree, gold[i].tree);
    csv << i << ',' << s.precision << ',' << s.recall << ',' << s.f1 << '\n';
    c.push_back(cand[i].tree);
    g.push_back(gold[i].tree);
  }
  emit(o.output, csv.str(), out);
  std::ostringstream summary;
  summary << std::setprecision(17) << "macro_f1," << parsing::corpus_f1(c, g, parsing::F1Mode::macro) << '\n'
          << "micro_f1," << parsing::corpus_f1(c, g, parsing::F1Mode::micro) << '\n';
  if (o.output.empty() || o.output == "-") {
    out << summary.str();
  } else {
    emit(o.metrics.empty() ? "-" : o.metrics, "metric,value\n" + summary.str(), out);
  }
  return exit_ok;
}

void add_model_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--preset", o.model.preset, "u1, d1, u-exp-d-sig or lstm-baseline")->capture_default_str();
  cmd->add_option("--embedding-dim", o.model.embedding_dim)->capture_default_str();
  cmd->add_option("--hidden-dim", o.model.hidden_dim)->capture_default_str();
  cmd->add_option("--stack-dim", o.model.stack_dim)->capture_default_str();
  cmd->add_option("--k", o.model.k, "maximum instruction strength")->capture_default_str();
  cmd->add_flag("--tie-embeddings", o.model.tie_embeddings);
}

void add_train_options(CLI::App* cmd, Options& o) {
  auto& t = o.train_config;
  cmd->add_option("--train", o.train, "training data")->required();
  cmd->add_option("--valid", o.valid, "validation data (default: hold out the tail of --train)");
  cmd->add_option("--holdout", o.holdout, "fraction held out when --valid is absent")->capture_default_str();
  cmd->add_option("--checkpoint", o.checkpoint, "checkpoint to write")->required();
  cmd->add_option("--metrics", o.metrics, "loss curve CSV");
  cmd->add_option("--vocab-out", o.vocab_out);
  cmd->add_option("--min-count", o.min_count)->capture_default_str();
  cmd->add_option("--lr", t.learning_rate)->capture_default_str();
  cmd->add_option("--batch-size", t.batch_size)->capture_default_str();
  cmd->add_option("--max-steps", t.max_steps, "0 = unlimited")->capture_default_str();
  cmd->add_option("--clip-norm", t.clip_norm)->capture_default_str();
  cmd->add_option("--patience", t.patience)->capture_default_str();
  add_model_options(cmd, o);
}

int dispatch(CLI::App& app, const Options& o, std::ostream& out, std::ostream& err) {
  if (app.got_subcommand("gen-synthetic")) return cmd_gen_synthetic(o, out);
  if (app.got_subcommand("train-lm")) return cmd_train_lm(o, out, err);
  if (app.got_subcommand("train-cls")) return cmd_train_cls(o, out, err);
  if (app.got_subcommand("eval-ppl")) return cmd_eval_ppl(o, out);
  if (app.got_subcommand("eval-agreement")) return cmd_eval_agreement(o, out);
  if (app.got_subcommand("eval-cls")) return cmd_eval_cls(o, out);
  if (app.got_subcommand("trace")) return cmd_trace(o, out);
  if (app.got_subcommand("parse")) return cmd_parse(o, out);
  if (app.got_subcommand("branching")) return cmd_branching(o, out);
  if (app.got_subcommand("score-f1")) return cmd_score_f1(o, out);
  throw usage_error("no subcommand given");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Stack-augmented RNN language models, agreement classifiers and unsupervised parsing"};
  app.set_config("--config", "", "TOML/INI file with option defaults; flags on the command line win");
  app.add_option("--seed", o.seed, "random seed")->envname("STACKRNN_SEED")->capture_default_str();
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-synthetic", "generate the synthetic agreement corpus");
  gen->add_option("--n", o.n)->capture_default_str();
  gen->add_option("--max-attractors", o.max_attractors)->capture_default_str();
  gen->add_option("--lm-out", o.lm_out, "sentences, one per line");
  gen->add_option("--cls-out", o.cls_out, "classification TSV");
  gen->add_option("--lexicon-out", o.lexicon_out, "verb inflection TSV");

  auto* train_lm = app.add_subcommand("train-lm", "train a language model");
  o.train_config.epochs = 5;
  train_lm->add_option("--epochs", o.train_config.epochs)->capture_default_str();
  add_train_options(train_lm, o);

  auto* train_cls = app.add_subcommand("train-cls", "train a number-agreement classifier with early stopping");
  train_cls->add_option("--epochs", o.train_config.epochs, "epoch budget (default 20)");
  add_train_options(train_cls, o);

  auto* eval_ppl = app.add_subcommand("eval-ppl", "perplexity of a language model");
  eval_ppl->add_option("--checkpoint", o.checkpoint)->required();
  eval_ppl->add_option("--corpus", o.corpus)->required();
  eval_ppl->add_option("--output", o.output, "report CSV (default stdout)");

  auto* eval_agree = app.add_subcommand("eval-agreement", "agreement accuracy of a language model");
  eval_agree->add_option("--checkpoint", o.checkpoint)->required();
  eval_agree->add_option("--data", o.data, "classification TSV with verb column")->required();
  eval_agree->add_option("--lexicon", o.lexicon)->required();
  eval_agree->add_option("--output", o.output);

  auto* eval_cls = app.add_subcommand("eval-cls", "accuracy of a classifier by attractor count");
  eval_cls->add_option("--checkpoint", o.checkpoint)->required();
  eval_cls->add_option("--data", o.data)->required();
  eval_cls->add_option("--output", o.output);

  auto* trace = app.add_subcommand("trace", "per-token stack instruction strengths");
  trace->add_option("--checkpoint", o.checkpoint)->required();
  trace->add_option("--sentences", o.sentences)->required();
  trace->add_option("--output", o.output);
  trace->add_flag("--distributions", o.distributions, "append instruction distributions");
  trace->add_flag("--decapitalize", o.decapitalize);
  trace->add_option("--aggregate-by", o.aggregate_by, "word \\t class TSV for strength histograms");
  trace->add_option("--aggregate-output", o.aggregate_output, "histogram CSV (default stdout)");
  trace->add_option("--bins", o.bins)->capture_default_str();

  auto* parse = app.add_subcommand("parse", "unsupervised binary parses from stack strengths");
  parse->add_option("--checkpoint", o.checkpoint)->required();
  parse->add_option("--sentences", o.sentences)->required();
  parse->add_option("--output", o.output);
  parse->add_option("--style", o.style, "round or square brackets")->capture_default_str();
  parse->add_flag("--decapitalize", o.decapitalize);

  auto* branching = app.add_subcommand("branching", "right- or left-branching baseline trees");
  branching->add_option("--sentences", o.sentences)->required();
  branching->add_option("--direction", o.direction)->capture_default_str();
  branching->add_option("--output", o.output);
  branching->add_option("--style", o.style)->capture_default_str();
  branching->add_flag("--decapitalize", o.decapitalize);

  auto* score = app.add_subcommand("score-f1", "unlabeled bracketing F1");
  score->add_option("--candidate", o.candidate)->required();
  score->add_option("--gold", o.gold)->required();
  score->add_option("--output", o.output, "per-sentence CSV (default stdout)");
  score->add_option("--metrics", o.metrics, "macro/micro summary CSV (default stdout)");

  std::vector<const char*> argv{"stackrnn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream cli_out;
    std::ostringstream cli_err;
    const int code = app.exit(e, cli_out, cli_err);
    out << cli_out.str();
    err << cli_err.str();
    return code == 0 ? exit_ok : exit_usage;
  }

  if (train_cls->parsed() && train_cls->count("--epochs") == 0) o.train_config.epochs = 20;

  try {
    return dispatch(app, o, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::usage: return exit_usage;
      case ErrorKind::numeric: return exit_numeric;
      case ErrorKind::data:
      case ErrorKind::shape: return exit_data;
    }
    return exit_data;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_data;
  }
}

}  // namespace stackrnn::cli
