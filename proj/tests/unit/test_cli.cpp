#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "stackrnn/cli.hpp"
#include "stackrnn/controller.hpp"
#include "stackrnn/corpus.hpp"
#include "stackrnn/parsing.hpp"
#include "support.hpp"

using namespace stackrnn;
using test_support::read_text;
using test_support::TempDir;
using test_support::write_text;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> model_flags() {
  return {"--embedding-dim", "6", "--hidden-dim", "10", "--stack-dim", "4"};
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(invoke({}).code == cli::exit_usage);
  CHECK(invoke({"nonsense"}).code == cli::exit_usage);
  CHECK(invoke({"eval-ppl"}).code == cli::exit_usage);
  CHECK(invoke({"--help"}).code == cli::exit_ok);
}

TEST_CASE("end-to-end pipeline through the command line") {
  TempDir dir("cli");
  const auto f = [&](const char* name) { return dir.file(name); };
  REQUIRE(invoke({"--seed", "3", "gen-synthetic", "--n", "40", "--lm-out", f("lm.txt"), "--cls-out", f("cls.tsv"),
                  "--lexicon-out", f("lex.tsv")})
              .code == 0);
  CHECK(lines_of(read_text(f("lm.txt"))).size() == 40);

  const auto train = invoke(cat({"--seed", "3", "train-lm", "--train", f("lm.txt"), "--checkpoint", f("lm.ckpt"),
                                 "--epochs", "1", "--metrics", f("log.csv")},
                                model_flags()));
  REQUIRE(train.code == 0);
  CHECK(read_text(f("log.csv")).rfind("epoch,steps,train_loss,valid_loss,valid_metric,improved\n", 0) == 0);

  SUBCASE("evaluations") {
    const auto ppl = invoke({"eval-ppl", "--checkpoint", f("lm.ckpt"), "--corpus", f("lm.txt")});
    CHECK(ppl.code == 0);
    CHECK(ppl.out.rfind("metric,value\nperplexity,", 0) == 0);
    const auto agr = invoke({"eval-agreement", "--checkpoint", f("lm.ckpt"), "--data", f("cls.tsv"), "--lexicon", f("lex.tsv")});
    CHECK(agr.code == 0);
    CHECK(lines_of(agr.out).size() == 9);
    CHECK(lines_of(agr.out)[1].rfind("overall,40,", 0) == 0);
    // eval-ppl on a classifier-less path: wrong model kind is a usage error.
    CHECK(invoke({"eval-cls", "--checkpoint", f("lm.ckpt"), "--data", f("cls.tsv")}).code != 0);
  }

  SUBCASE("trace rows and totals") {
    write_text(f("s.txt"), "The cat sees the dog\n\nthe cats sleep\n");
    const auto tr = invoke({"trace", "--checkpoint", f("lm.ckpt"), "--sentences", f("s.txt"), "--decapitalize", "--distributions"});
    REQUIRE(tr.code == 0);
    const auto rows = lines_of(tr.out);
    CHECK(rows[0].rfind("token,push,pop,read,total_strength,sentence_id,push_p0", 0) == 0);
    CHECK(rows.size() == 1 + 5 + 3);
    CHECK(rows[1].rfind("the,", 0) == 0);
    // Totals follow the pop/push algebra: t_k = t_{k-1} - min(pop, t_{k-1}) + push.
    // The first row already includes the leading EOS step, so it seeds the check.
    double total = 0.0;
    for (std::size_t i = 1; i <= 5; ++i) {
      std::istringstream row(rows[i]);
      std::string tok, push, pop, read, tot;
      std::getline(row, tok, ',');
      std::getline(row, push, ',');
      std::getline(row, pop, ',');
      std::getline(row, read, ',');
      std::getline(row, tot, ',');
      CHECK(std::stod(tot) >= 0.0);
      if (i > 1) {
        total = total - std::min(std::stod(pop), total) + std::stod(push);
        CHECK(std::stod(tot) == doctest::Approx(total).epsilon(1e-12));
      }
      total = std::stod(tot);
    }

    write_text(f("classes.tsv"), "cat\tnoun\ndog\tnoun\nsees\tverb\n");
    const auto agg = invoke({"trace", "--checkpoint", f("lm.ckpt"), "--sentences", f("s.txt"), "--aggregate-by",
                             f("classes.tsv"), "--bins", "4", "--output", f("trace.csv"), "--aggregate-output", f("agg.csv")});
    REQUIRE(agg.code == 0);
    const auto hist = lines_of(read_text(f("agg.csv")));
    CHECK(hist[0] == "class,instruction,bin_lo,bin_hi,count");
    std::size_t nouns = 0;
    for (const auto& l : hist) {
      if (l.rfind("noun,push,", 0) == 0) nouns += std::stoul(l.substr(l.rfind(',') + 1));
    }
    CHECK(nouns == 2);
  }

  SUBCASE("parse equals trace, distances and make_tree composed") {
    write_text(f("s.txt"), "the cat near the dogs sees the bird\nthe boats\nthe girl runs\n");
    const auto parsed = invoke({"parse", "--checkpoint", f("lm.ckpt"), "--sentences", f("s.txt")});
    REQUIRE(parsed.code == 0);

    const Checkpoint cp = load_checkpoint(f("lm.ckpt"));
    const StackRnn model(cp.config, cp.parameters);
    const auto vocab = corpus::Vocabulary::from_tokens(cp.vocabulary);
    std::string expected;
    for (const auto& line : corpus::read_lines(f("s.txt"))) {
      const auto words = corpus::tokenize(line);
      std::vector<TokenId> ids{corpus::eos_id};
      for (const auto& w : words) ids.push_back(vocab.id(w));
      ad::Graph g(&model.parameters());
      auto traces = model.run(g, ids).traces;
      traces.erase(traces.begin());
      const auto d = parsing::distances_from_trace(traces, "u1");
      expected += parsing::to_brackets(parsing::make_tree(words, d), words) + "\n";
    }
    CHECK(parsed.out == expected);
  }

  SUBCASE("same seed, same bytes") {
    REQUIRE(invoke(cat({"--seed", "3", "train-lm", "--train", f("lm.txt"), "--checkpoint", f("lm2.ckpt"), "--epochs",
                        "1", "--metrics", f("log2.csv")},
                       model_flags()))
                .code == 0);
    CHECK(read_text(f("lm.ckpt")) == read_text(f("lm2.ckpt")));
    CHECK(read_text(f("log.csv")) == read_text(f("log2.csv")));
  }
}

TEST_CASE("classifier commands") {
  TempDir dir("cli_cls");
  const auto f = [&](const char* name) { return dir.file(name); };
  REQUIRE(invoke({"gen-synthetic", "--n", "30", "--cls-out", f("cls.tsv")}).code == 0);
  REQUIRE(invoke(cat({"train-cls", "--preset", "lstm-baseline", "--train", f("cls.tsv"), "--checkpoint", f("c.ckpt"),
                      "--epochs", "2"},
                     model_flags()))
              .code == 0);
  const auto ev = invoke({"eval-cls", "--checkpoint", f("c.ckpt"), "--data", f("cls.tsv")});
  CHECK(ev.code == 0);
  CHECK(lines_of(ev.out)[1].rfind("overall,30,", 0) == 0);
  CHECK(invoke({"trace", "--checkpoint", f("c.ckpt"), "--sentences", f("cls.tsv")}).code == 0);
}

TEST_CASE("score-f1 and branching") {
  TempDir dir("cli_f1");
  const auto f = [&](const char* name) { return dir.file(name); };
  write_text(f("s.txt"), "a b c d\nThe x y\n");
  REQUIRE(invoke({"branching", "--sentences", f("s.txt"), "--output", f("right.txt")}).code == 0);
  CHECK(read_text(f("right.txt")) == "(a (b (c d)))\n(The (x y))\n");
  REQUIRE(invoke({"branching", "--sentences", f("s.txt"), "--direction", "left", "--decapitalize", "--style",
                  "square", "--output", f("left.txt")})
              .code == 0);
  CHECK(read_text(f("left.txt")) == "[[[a b] c] d]\n[[the x] y]\n");

  const auto same = invoke({"score-f1", "--candidate", f("right.txt"), "--gold", f("right.txt")});
  CHECK(same.code == 0);
  CHECK(same.out.find("macro_f1,1\n") != std::string::npos);
  CHECK(lines_of(same.out)[0] == "sentence_id,precision,recall,f1");

  write_text(f("gold.txt"), "((a b) (c d))\n((the x) y)\n");
  const auto r = invoke({"score-f1", "--candidate", f("right.txt"), "--gold", f("gold.txt")});
  CHECK(r.code == 0);
  CHECK(lines_of(r.out)[1] == "0,0.5,0.5,0.5");
  CHECK(lines_of(r.out)[2] == "1,0,0,0");
  CHECK(r.out.find("macro_f1,0.25\n") != std::string::npos);
  CHECK(r.out.find("micro_f1,0.33333333333333331\n") != std::string::npos);

  write_text(f("short.txt"), "(a (b (c d)))\n");
  CHECK(invoke({"score-f1", "--candidate", f("right.txt"), "--gold", f("short.txt")}).code == cli::exit_data);
  write_text(f("bad.txt"), "(a (b c\n(x y)\n");
  CHECK(invoke({"score-f1", "--candidate", f("bad.txt"), "--gold", f("right.txt")}).code == cli::exit_data);
  CHECK(invoke({"score-f1", "--candidate", f("missing.txt"), "--gold", f("right.txt")}).code == cli::exit_data);
}

TEST_CASE("config file supplies defaults and flags win") {
  TempDir dir("cli_cfg");
  const auto f = [&](const char* name) { return dir.file(name); };
  write_text(f("cfg.ini"), "seed=9\n[gen-synthetic]\nn=7\nmax-attractors=1\n");
  const auto a = invoke({"--config", f("cfg.ini"), "gen-synthetic"});
  REQUIRE(a.code == 0);
  CHECK(lines_of(a.out).size() == 7);
  const auto b = invoke({"--config", f("cfg.ini"), "gen-synthetic", "--n", "3"});
  CHECK(lines_of(b.out).size() == 3);
  const auto c = invoke({"--seed", "9", "gen-synthetic", "--n", "7", "--max-attractors", "1"});
  CHECK(c.out == a.out);
}

TEST_CASE("seed can come from the environment") {
  ::setenv("STACKRNN_SEED", "12", 1);
  const auto env = invoke({"gen-synthetic", "--n", "5"});
  ::unsetenv("STACKRNN_SEED");
  const auto flag = invoke({"--seed", "12", "gen-synthetic", "--n", "5"});
  const auto dflt = invoke({"gen-synthetic", "--n", "5"});
  CHECK(env.out == flag.out);
  CHECK(env.out != dflt.out);
}

TEST_CASE("numeric failures exit with 4") {
  TempDir dir("cli_nan");
  const auto f = [&](const char* name) { return dir.file(name); };
  write_text(f("lm.txt"), std::string("the cat sleeps\n") + "the dogs run\n");
  // An enormous learning rate drives the expectation heads to overflow.
  const auto r = invoke(cat({"train-lm", "--train", f("lm.txt"), "--checkpoint", f("x.ckpt"), "--lr", "1e300",
                             "--epochs", "3", "--clip-norm", "1e300"},
                            model_flags()));
  CHECK(r.code == cli::exit_numeric);
  CHECK(r.err.find("non-finite") != std::string::npos);
}
