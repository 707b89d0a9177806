#include "stackrnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "stackrnn/error.hpp"

namespace stackrnn::training {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw usage_error("learning rate must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw usage_error("adam betas must be in [0, 1)");
  if (!(epsilon > 0.0)) throw usage_error("adam epsilon must be positive");
  if (epochs == 0) throw usage_error("epochs must be positive");
  if (batch_size == 0) throw usage_error("batch size must be positive");
  if (!(clip_norm > 0.0)) throw usage_error("clip norm must be positive");
}

Adam::Adam(const ad::ParameterSet& params, const TrainConfig& config)
    : learning_rate_(config.learning_rate),
      beta1_(config.beta1),
      beta2_(config.beta2),
      epsilon_(config.epsilon),
      m_(params),
      v_(params) {}

void Adam::step(ad::ParameterSet& params, const ad::Gradients& grads) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  for (ad::ParamId p = 0; p < params.size(); ++p) {
    auto w = params.value(p).data();
    auto g = grads[p];
    auto m = m_[p];
    auto v = v_[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= learning_rate_ * m_hat / (std::sqrt(v_hat) + epsilon_);
    }
  }
}

double clip_global_norm(ad::Gradients& grads, double max_norm) {
  const double norm = grads.global_norm();
  if (norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

ad::Var lm_loss(const StackRnn& model, ad::Graph& g, std::span<const TokenId> sentence) {
  if (sentence.empty()) throw usage_error("lm_loss: empty sentence");
  std::vector<TokenId> inputs;
  inputs.reserve(sentence.size());
  inputs.push_back(corpus::eos_id);
  inputs.insert(inputs.end(), sentence.begin(), sentence.end() - 1);
  const SequenceOutput run = model.run(g, inputs);
  ad::Var total;
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    ad::Var nll = g.cross_entropy(model.logits(g, run.outputs[t]), sentence[t]);
    total = total.valid() ? g.add(total, nll) : nll;
  }
  return g.scale(total, 1.0 / static_cast<double>(sentence.size()));
}

ad::Var classification_loss(const StackRnn& model, ad::Graph& g, const corpus::ClassificationExample& example) {
  if (example.prefix.empty()) throw usage_error("classification_loss: empty prefix");
  const SequenceOutput run = model.run(g, example.prefix);
  const std::size_t target = example.label == corpus::Number::singular ? 0 : 1;
  return g.cross_entropy(model.logits(g, run.outputs.back()), target);
}

double perplexity(double total_nll, std::size_t n_tokens) {
  if (n_tokens == 0) throw usage_error("perplexity: no tokens");
  return std::exp(total_nll / static_cast<double>(n_tokens));
}

SentenceScore score_sentence(const StackRnn& model, std::span<const TokenId> sentence) {
  ad::Graph g(&model.parameters());
  const double mean = g.scalar(lm_loss(model, g, sentence));
  return {mean * static_cast<double>(sentence.size()), sentence.size()};
}

namespace {

// Runs body(i) for i in [0, n), on an OpenMP team when requested. The first
// exception thrown by any iteration is rethrown on the calling thread.
template <class Body>
void for_each_index(std::size_t n, Parallelism parallelism, Body body) {
  std::exception_ptr failure;
  const auto count = static_cast<long>(n);
  const bool parallel = parallelism == Parallelism::openmp && n > 1;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(stackrnn_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::string trace_dump(const std::vector<StepTrace>& traces) {
  std::ostringstream out;
  out << std::setprecision(17) << "token,push,pop,read,total_strength\n";
  for (const auto& t : traces) {
    out << t.token << ',' << t.push << ',' << t.pop << ',' << t.read << ',' << t.total_strength << '\n';
  }
  return out.str();
}

[[noreturn]] void numeric_failure(const StackRnn& model, std::size_t step, std::span<const TokenId> tokens) {
  // Step by step so that a forward pass which itself breaks still leaves the
  // trace up to the failing token.
  ad::Graph g(&model.parameters());
  std::vector<StepTrace> traces;
  std::string note;
  try {
    ControllerState state = model.initial_state(g);
    for (TokenId t : tokens) {
      StepOutput s = model.step(g, state, t);
      traces.push_back(std::move(s.trace));
      state = std::move(s.state);
    }
  } catch (const Error& e) {
    note = "forward pass failed after " + std::to_string(traces.size()) + " tokens: " + e.what() + "\n";
  }
  throw Error(ErrorKind::numeric, "non-finite loss at step " + std::to_string(step) + "; trace of offending input:\n" +
                                      trace_dump(traces) + note);
}

bool loss_is_finite(const ExampleLoss& loss_of, const StackRnn& model, std::size_t idx) {
  try {
    ad::Graph g(&model.parameters());
    return std::isfinite(g.scalar(loss_of(g, idx)));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::numeric) throw;
    return false;
  }
}

std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) std::shuffle(order.begin(), order.end(), rng);
  return order;
}

struct StepResult {
  double loss;
  std::size_t offending;
  bool finite;
};

StepResult train_step(StackRnn& model, Adam& adam, std::span<const std::size_t> batch, const ExampleLoss& loss_of,
                      ad::Gradients& grads, const TrainConfig& config) {
  double loss = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  try {
    loss = batch_gradients(model, batch, loss_of, grads, Parallelism::openmp);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::numeric) throw;
    failed = true;
  }
  if (failed || !std::isfinite(loss) || !grads.all_finite()) {
    // Locate the first offending example for the diagnostic.
    for (std::size_t idx : batch) {
      if (!loss_is_finite(loss_of, model, idx)) return {loss, idx, false};
    }
    return {loss, batch.front(), false};
  }
  clip_global_norm(grads, config.clip_norm);
  adam.step(model.parameters(), grads);
  return {loss, 0, true};
}

}  // namespace

double batch_gradients(const StackRnn& model, std::span<const std::size_t> examples, const ExampleLoss& loss_of,
                       ad::Gradients& grads, Parallelism parallelism) {
  if (examples.empty()) throw usage_error("batch_gradients: empty batch");
  const auto& params = model.parameters();
  std::vector<double> losses(examples.size(), 0.0);
  if (examples.size() == 1) {
    grads.zero();
    ad::Graph g(&params);
    ad::Var loss = loss_of(g, examples[0]);
    losses[0] = g.scalar(loss);
    g.backward(loss, grads);
    return losses[0];
  }
  std::vector<ad::Gradients> slots(examples.size(), ad::Gradients(params));
  for_each_index(examples.size(), parallelism, [&](std::size_t i) {
    ad::Graph g(&params);
    ad::Var loss = loss_of(g, examples[i]);
    losses[i] = g.scalar(loss);
    g.backward(loss, slots[i]);
  });
  grads.zero();
  double total = 0.0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    grads.add(slots[i]);
    total += losses[i];
  }
  const double inv = 1.0 / static_cast<double>(examples.size());
  grads.scale(inv);
  return total * inv;
}

void write_log_csv(std::ostream& out, const TrainLog& log) {
  out << std::setprecision(17) << "epoch,steps,train_loss,valid_loss,valid_metric,improved\n";
  for (const auto& e : log.epochs) {
    out << e.epoch << ',' << e.steps << ',' << e.train_loss << ',' << e.valid_loss << ',' << e.valid_metric << ','
        << (e.improved ? 1 : 0) << '\n';
  }
}

TrainLog train_lm(StackRnn& model, std::span<const std::vector<TokenId>> train,
                  std::span<const std::vector<TokenId>> valid, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train.empty()) throw data_error("train_lm: empty training corpus");
  std::mt19937_64 rng(config.seed);
  Adam adam(model.parameters(), config);
  ad::Gradients grads(model.parameters());
  const ExampleLoss loss_of = [&](ad::Graph& g, std::size_t i) { return lm_loss(model, g, train[i]); };

  TrainLog log;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = epoch_order(train.size(), config.shuffle, rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    bool budget_hit = false;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      const StepResult r = train_step(model, adam, batch, loss_of, grads, config);
      if (!r.finite) numeric_failure(model, log.steps + 1, [&] {
        std::vector<TokenId> in{corpus::eos_id};
        in.insert(in.end(), train[r.offending].begin(), train[r.offending].end() - 1);
        return in;
      }());
      loss_sum += r.loss;
      ++batches;
      ++log.steps;
      if (config.max_steps != 0 && log.steps >= config.max_steps) {
        budget_hit = true;
        break;
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = log.steps;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    if (!valid.empty()) {
      const EvalReport ev = eval_perplexity(model, valid);
      rec.valid_loss = ev.total_nll / static_cast<double>(ev.tokens);
      rec.valid_metric = ev.perplexity;
    }
    rec.improved = true;
    log.best_epoch = epoch;
    log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (budget_hit) break;
  }
  return log;
}

TrainLog train_classifier(StackRnn& model, std::span<const corpus::ClassificationExample> train,
                          std::span<const corpus::ClassificationExample> valid, const TrainConfig& config,
                          const EpochCallback& on_epoch) {
  config.validate();
  if (train.empty()) throw data_error("train_classifier: empty training set");
  if (model.config().output_mode != OutputMode::binary_class) {
    throw usage_error("train_classifier: model is not a classifier");
  }
  std::mt19937_64 rng(config.seed);
  Adam adam(model.parameters(), config);
  ad::Gradients grads(model.parameters());
  const ExampleLoss loss_of = [&](ad::Graph& g, std::size_t i) { return classification_loss(model, g, train[i]); };

  TrainLog log;
  double best = std::numeric_limits<double>::infinity();
  ad::ParameterSet best_params = model.parameters();
  std::size_t bad_epochs = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = epoch_order(train.size(), config.shuffle, rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    bool budget_hit = false;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      const StepResult r = train_step(model, adam, batch, loss_of, grads, config);
      if (!r.finite) numeric_failure(model, log.steps + 1, train[r.offending].prefix);
      loss_sum += r.loss;
      ++batches;
      ++log.steps;
      if (config.max_steps != 0 && log.steps >= config.max_steps) {
        budget_hit = true;
        break;
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = log.steps;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    const auto& held_out = valid.empty() ? train : valid;
    rec.valid_loss = classifier_loss(model, held_out);
    rec.valid_metric = eval_classifier(model, held_out).overall.accuracy();
    if (!std::isfinite(rec.valid_loss)) throw Error(ErrorKind::numeric, "non-finite validation loss");
    if (rec.valid_loss < best) {
      best = rec.valid_loss;
      best_params = model.parameters();
      log.best_epoch = epoch;
      rec.improved = true;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
    }
    log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (budget_hit) break;
    if (!rec.improved && bad_epochs > config.patience) {
      log.early_stopped = true;
      break;
    }
  }
  model.parameters() = std::move(best_params);
  return log;
}

void write_accuracy_csv(std::ostream& out, const EvalReport& report) {
  out << std::setprecision(17) << "bucket,count,correct,accuracy\n";
  out << "overall," << report.overall.count << ',' << report.overall.correct << ',' << report.overall.accuracy()
      << '\n';
  for (std::size_t b = 0; b < report.by_attractors.size(); ++b) {
    const Bucket& k = report.by_attractors[b];
    out << b << ',' << k.count << ',' << k.correct << ',' << k.accuracy() << '\n';
  }
  out << "skipped," << report.skipped << ",0,0\n";
}

void write_perplexity_csv(std::ostream& out, const EvalReport& report) {
  out << std::setprecision(17) << "metric,value\n";
  out << "perplexity," << report.perplexity << '\n';
  out << "total_nll," << report.total_nll << '\n';
  out << "tokens," << report.tokens << '\n';
}

EvalReport eval_perplexity(const StackRnn& model, std::span<const std::vector<TokenId>> corpus,
                           Parallelism parallelism) {
  if (corpus.empty()) throw data_error("eval_perplexity: empty corpus");
  std::vector<SentenceScore> scores(corpus.size());
  for_each_index(corpus.size(), parallelism, [&](std::size_t i) { scores[i] = score_sentence(model, corpus[i]); });
  EvalReport r;
  for (const auto& s : scores) {
    r.total_nll += s.nll;
    r.tokens += s.tokens;
  }
  r.perplexity = perplexity(r.total_nll, r.tokens);
  return r;
}

namespace {
void tally(EvalReport& r, std::size_t attractors, bool correct) {
  ++r.overall.count;
  r.overall.correct += correct ? 1 : 0;
  if (attractors <= max_attractor_bucket) {
    ++r.by_attractors[attractors].count;
    r.by_attractors[attractors].correct += correct ? 1 : 0;
  }
}
}  // namespace

ClassPredictor classifier_predictor(const StackRnn& model) {
  return [&model](const corpus::ClassificationExample& ex) {
    ad::Graph g(&model.parameters());
    const SequenceOutput run = model.run(g, ex.prefix);
    auto l = g.value(model.logits(g, run.outputs.back()));
    return l[1] > l[0] ? corpus::Number::plural : corpus::Number::singular;
  };
}

EvalReport eval_classifier(const ClassPredictor& predict, std::span<const corpus::ClassificationExample> dataset,
                           Parallelism parallelism) {
  std::vector<char> correct(dataset.size(), 0);
  for_each_index(dataset.size(), parallelism,
                 [&](std::size_t i) { correct[i] = predict(dataset[i]) == dataset[i].label ? 1 : 0; });
  EvalReport r;
  for (std::size_t i = 0; i < dataset.size(); ++i) tally(r, dataset[i].n_attractors, correct[i] != 0);
  return r;
}

EvalReport eval_classifier(const StackRnn& model, std::span<const corpus::ClassificationExample> dataset,
                           Parallelism parallelism) {
  if (model.config().output_mode != OutputMode::binary_class) {
    throw usage_error("eval_classifier: model is not a classifier");
  }
  return eval_classifier(classifier_predictor(model), dataset, parallelism);
}

double classifier_loss(const StackRnn& model, std::span<const corpus::ClassificationExample> dataset,
                       Parallelism parallelism) {
  if (dataset.empty()) throw data_error("classifier_loss: empty dataset");
  std::vector<double> losses(dataset.size());
  for_each_index(dataset.size(), parallelism, [&](std::size_t i) {
    ad::Graph g(&model.parameters());
    losses[i] = g.scalar(classification_loss(model, g, dataset[i]));
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(dataset.size());
}

NextTokenScorer lm_scorer(const StackRnn& model) {
  return [&model](std::span<const TokenId> prefix) {
    std::vector<TokenId> inputs{corpus::eos_id};
    inputs.insert(inputs.end(), prefix.begin(), prefix.end());
    ad::Graph g(&model.parameters());
    const SequenceOutput run = model.run(g, inputs);
    auto l = g.value(model.logits(g, run.outputs.back()));
    return std::vector<double>(l.begin(), l.end());
  };
}

EvalReport eval_agreement_lm(const NextTokenScorer& scorer, std::span<const corpus::ClassificationExample> examples,
                             const corpus::InflectionLexicon& lexicon, const corpus::Vocabulary& vocab,
                             Parallelism parallelism) {
  // 0 = skipped, 1 = wrong, 2 = right
  std::vector<char> outcome(examples.size(), 0);
  for_each_index(examples.size(), parallelism, [&](std::size_t i) {
    const auto& ex = examples[i];
    const auto other = lexicon.opposite(ex.verb);
    if (ex.verb.empty() || !other || !vocab.contains(ex.verb) || !vocab.contains(*other)) return;
    const auto scores = scorer(ex.prefix);
    outcome[i] = scores[vocab.id(ex.verb)] > scores[vocab.id(*other)] ? 2 : 1;
  });
  EvalReport r;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (outcome[i] == 0) {
      ++r.skipped;
      continue;
    }
    tally(r, examples[i].n_attractors, outcome[i] == 2);
  }
  return r;
}

}  // namespace stackrnn::training
