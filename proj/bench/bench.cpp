// Serial reference vs OpenMP timings for the matvec kernels, batched
// gradients and perplexity evaluation. Also confirms both paths agree bitwise.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "stackrnn/corpus.hpp"
#include "stackrnn/kernels.hpp"
#include "stackrnn/training.hpp"

using namespace stackrnn;

namespace {

double time_ms(const std::function<void()>& f, int reps) {
  f();  // warm-up
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() / reps;
}

void row(const std::string& name, double serial, double parallel, bool same) {
  std::printf("%-34s %10.3f %10.3f %8.2fx  %s\n", name.c_str(), serial, parallel, serial / parallel,
              same ? "identical" : "DIFFERENT");
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP benchmark"};
  int reps = 20;
  std::size_t examples = 64;
  bool quick = false;
  app.add_option("--reps", reps)->capture_default_str();
  app.add_option("--examples", examples, "sentences per batch/eval")->capture_default_str();
  app.add_flag("--quick", quick, "tiny sizes, for smoke testing");
  CLI11_PARSE(app, argc, argv);
  if (quick) {
    reps = 1;
    examples = 4;
  }

  std::printf("openmp %s, %d thread(s)\n", kernels::openmp_enabled() ? "on" : "off", kernels::max_threads());
  std::printf("%-34s %10s %10s %9s\n", "case", "serial ms", "omp ms", "speedup");
  bool all_same = true;

  std::mt19937_64 rng(1);
  const std::vector<std::pair<std::size_t, std::size_t>> sizes =
      quick ? std::vector<std::pair<std::size_t, std::size_t>>{{64, 64}}
            : std::vector<std::pair<std::size_t, std::size_t>>{{400, 166}, {1000, 1000}, {4000, 2000}};
  for (auto [rows, cols] : sizes) {
    const auto a = random_vector(rng, rows * cols);
    const auto x = random_vector(rng, cols);
    const auto g = random_vector(rng, rows);
    std::vector<double> ys(rows), yp(rows);
    const std::string dims = std::to_string(rows) + "x" + std::to_string(cols);
    const double s1 = time_ms([&] { kernels::serial::matvec(a, rows, cols, x, ys); }, reps);
    const double p1 = time_ms([&] { kernels::parallel::matvec(a, rows, cols, x, yp); }, reps);
    row("matvec " + dims, s1, p1, ys == yp);
    all_same &= ys == yp;

    std::vector<double> ts(cols), tp(cols);
    const double s2 = time_ms([&] { kernels::serial::matvec_transposed_accumulate(a, rows, cols, g, ts); }, reps);
    const double p2 = time_ms([&] { kernels::parallel::matvec_transposed_accumulate(a, rows, cols, g, tp); }, reps);
    row("matvec_transposed " + dims, s2, p2, ts == tp);
    all_same &= ts == tp;

    std::vector<double> os(rows * cols), op(rows * cols);
    const double s3 = time_ms([&] { kernels::serial::outer_accumulate(g, x, os); }, reps);
    const double p3 = time_ms([&] { kernels::parallel::outer_accumulate(g, x, op); }, reps);
    row("outer " + dims, s3, p3, os == op);
    all_same &= os == op;
  }

  // Model-level work at the default sizes.
  const auto syn = corpus::gen_synthetic_agreement(3, examples, 2);
  const auto vocab = corpus::Vocabulary::build(syn.lm_lines);
  const auto sentences = corpus::encode_lm_corpus(syn.lm_lines, vocab);
  ControllerConfig c = preset("u1");
  c.vocab_size = vocab.size();
  if (quick) c.hidden_dim = 10;
  const StackRnn model(c, 1);
  std::vector<std::size_t> idx(sentences.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const training::ExampleLoss loss_of = [&](ad::Graph& gr, std::size_t i) {
    return training::lm_loss(model, gr, sentences[i]);
  };
  ad::Gradients gs(model.parameters()), gp(model.parameters());
  const int model_reps = std::max(1, reps / 10);
  const double bs = time_ms([&] { training::batch_gradients(model, idx, loss_of, gs, training::Parallelism::serial); }, model_reps);
  const double bp = time_ms([&] { training::batch_gradients(model, idx, loss_of, gp, training::Parallelism::openmp); }, model_reps);
  bool same = true;
  for (std::size_t p = 0; p < gs.size(); ++p) {
    for (std::size_t j = 0; j < gs[p].size(); ++j) same &= gs[p][j] == gp[p][j];
  }
  row("batch_gradients x" + std::to_string(idx.size()), bs, bp, same);
  all_same &= same;

  double ppl_s = 0, ppl_p = 0;
  const double es = time_ms([&] { ppl_s = training::eval_perplexity(model, sentences, training::Parallelism::serial).perplexity; }, model_reps);
  const double ep = time_ms([&] { ppl_p = training::eval_perplexity(model, sentences, training::Parallelism::openmp).perplexity; }, model_reps);
  row("eval_perplexity x" + std::to_string(sentences.size()), es, ep, ppl_s == ppl_p);
  all_same &= ppl_s == ppl_p;

  return all_same ? 0 : 1;
}
