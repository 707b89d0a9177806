#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "stackrnn/autodiff.hpp"
#include "stackrnn/error.hpp"
#include "support.hpp"

using namespace stackrnn;
using namespace stackrnn::ad;
using test_support::random_tensor;

namespace {

// Independent central-difference gradient of a scalar graph function.
std::vector<std::vector<double>> numeric_gradient(const ScalarFunction& f, ParameterSet& params, double h = 1e-5) {
  std::vector<std::vector<double>> out;
  for (ParamId p = 0; p < params.size(); ++p) {
    out.emplace_back(params.value(p).size());
    for (std::size_t i = 0; i < params.value(p).size(); ++i) {
      double& x = params.value(p)[i];
      const double saved = x;
      x = saved + h;
      Graph gp(&params);
      const double plus = gp.scalar(f(gp));
      x = saved - h;
      Graph gm(&params);
      const double minus = gm.scalar(f(gm));
      x = saved;
      out.back()[i] = (plus - minus) / (2 * h);
    }
  }
  return out;
}

// Pushes every entry at least `gap` away from zero.
Tensor away_from_zero(Tensor t, double gap = 0.05) {
  for (auto& x : t.data()) {
    if (std::abs(x) < gap) x = x < 0 ? x - gap : x + gap;
  }
  return t;
}

using OpCase = std::function<Var(Graph&, ParamId w, ParamId x, ParamId y, ParamId s, ParamId m)>;

struct NamedOp {
  const char* name;
  OpCase build;
};

std::vector<NamedOp> op_cases() {
  auto weigh = [](Graph& g, Var v) {
    // Fixed non-uniform weighting so symmetric ops still get distinct gradients.
    std::vector<double> c(g.value(v).size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.3 + 0.7 * static_cast<double>(i + 1);
    return g.sum(g.mul(v, g.constant(Tensor(g.shape(v), c))));
  };
  return {
      {"matmul_vec", [=](Graph& g, auto w, auto x, auto, auto, auto) { return weigh(g, g.matmul(g.parameter(w), g.parameter(x))); }},
      {"matmul_mat", [=](Graph& g, auto w, auto, auto, auto, auto m) { return weigh(g, g.matmul(g.parameter(w), g.parameter(m))); }},
      {"add", [=](Graph& g, auto, auto x, auto y, auto, auto) { return weigh(g, g.add(g.parameter(x), g.parameter(y))); }},
      {"sub", [=](Graph& g, auto, auto x, auto y, auto, auto) { return weigh(g, g.sub(g.parameter(x), g.parameter(y))); }},
      {"mul", [=](Graph& g, auto, auto x, auto y, auto, auto) { return weigh(g, g.mul(g.parameter(x), g.parameter(y))); }},
      {"tanh", [=](Graph& g, auto, auto x, auto, auto, auto) { return weigh(g, g.tanh(g.parameter(x))); }},
      {"sigmoid", [=](Graph& g, auto, auto x, auto, auto, auto) { return weigh(g, g.sigmoid(g.parameter(x))); }},
      {"relu", [=](Graph& g, auto, auto x, auto, auto, auto) { return weigh(g, g.relu(g.parameter(x))); }},
      {"softmax", [=](Graph& g, auto, auto x, auto, auto, auto) { return weigh(g, g.softmax(g.parameter(x))); }},
      {"minimum", [=](Graph& g, auto, auto x, auto y, auto, auto) { return weigh(g, g.minimum(g.parameter(x), g.parameter(y))); }},
      {"sum", [=](Graph& g, auto, auto, auto y, auto, auto) { return g.sum(g.mul(g.parameter(y), g.parameter(y))); }},
      {"concat", [=](Graph& g, auto, auto x, auto y, auto s, auto) {
         const Var parts[] = {g.parameter(x), g.parameter(s), g.parameter(y)};
         return weigh(g, g.concat(parts));
       }},
      {"index_select_row", [=](Graph& g, auto w, auto, auto, auto, auto) { return weigh(g, g.index_select(g.parameter(w), 1)); }},
      {"index_select_rows", [=](Graph& g, auto w, auto, auto, auto, auto) {
         const std::size_t rows[] = {2, 0, 2};
         return weigh(g, g.index_select(g.parameter(w), std::span<const std::size_t>(rows)));
       }},
      {"weighted_sum", [=](Graph& g, auto, auto x, auto y, auto s, auto) {
         const Var ws[] = {g.parameter(s), g.sigmoid(g.parameter(s))};
         const Var vs[] = {g.parameter(x), g.parameter(y)};
         return weigh(g, g.weighted_sum(ws, vs, 4));
       }},
      {"scale_var", [=](Graph& g, auto, auto x, auto, auto s, auto) { return weigh(g, g.scale(g.parameter(s), g.parameter(x))); }},
      {"scale_const", [=](Graph& g, auto, auto x, auto, auto, auto) { return weigh(g, g.scale(g.parameter(x), -2.5)); }},
      {"slice", [=](Graph& g, auto, auto x, auto, auto, auto) { return weigh(g, g.slice(g.parameter(x), 1, 2)); }},
      {"dot", [=](Graph& g, auto, auto x, auto y, auto, auto) { return g.dot(g.parameter(x), g.tanh(g.parameter(y))); }},
      {"cross_entropy", [=](Graph& g, auto w, auto x, auto, auto, auto) {
         return g.cross_entropy(g.matmul(g.parameter(w), g.parameter(x)), 1);
       }},
  };
}

}  // namespace

TEST_CASE("forward values of the basic ops") {
  Graph g;
  CHECK(g.scalar(g.relu(g.constant(-2.0))) == 0.0);
  const auto sm = g.value(g.softmax(g.constant(Tensor::vector({0, 0, 0, 0, 0}))));
  for (double p : sm) CHECK(p == doctest::Approx(0.2).epsilon(1e-15));
  const auto mn = g.value(g.minimum(g.constant(Tensor::vector({0.3, 0.9})), g.constant(Tensor::vector({0.5, 0.5}))));
  CHECK(mn[0] == 0.3);
  CHECK(mn[1] == 0.5);

  const Var w = g.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  const auto y = g.value(g.matmul(w, g.constant(Tensor::vector({1, 0, -1}))));
  CHECK(y[0] == -2.0);
  CHECK(y[1] == -2.0);

  // cross_entropy = logsumexp(z) - z[t]
  const auto z = Tensor::vector({0.5, -1.0, 2.0});
  const double lse = std::log(std::exp(0.5) + std::exp(-1.0) + std::exp(2.0));
  CHECK(g.scalar(g.cross_entropy(g.constant(z), 0)) == doctest::Approx(lse - 0.5).epsilon(1e-14));
}

TEST_CASE("softmax is stable for large logits") {
  Graph g;
  const auto p = g.value(g.softmax(g.constant(Tensor::vector({1000.0, 1000.0}))));
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(std::isfinite(g.scalar(g.cross_entropy(g.constant(Tensor::vector({1000.0, -1000.0})), 1))));
}

TEST_CASE("backward closed forms") {
  SUBCASE("sum(w*w) at [1,2] gives [2,4]") {
    ParameterSet ps;
    const auto w = ps.add("w", Tensor::vector({1, 2}));
    Graph g(&ps);
    const Var v = g.parameter(w);
    Gradients grads(ps);
    g.backward(g.sum(g.mul(v, v)), grads);
    CHECK(grads[w][0] == 2.0);
    CHECK(grads[w][1] == 4.0);
  }
  SUBCASE("relu in its flat region has zero gradient") {
    ParameterSet ps;
    const auto w = ps.add("w", Tensor::scalar(-1.0));
    Graph g(&ps);
    Gradients grads(ps);
    g.backward(g.relu(g.parameter(w)), grads);
    CHECK(grads[w][0] == 0.0);
  }
  SUBCASE("relu at exactly zero uses subgradient 0") {
    ParameterSet ps;
    const auto w = ps.add("w", Tensor::scalar(0.0));
    Graph g(&ps);
    Gradients grads(ps);
    g.backward(g.relu(g.parameter(w)), grads);
    CHECK(grads[w][0] == 0.0);
  }
  SUBCASE("minimum routes ties to the first argument") {
    ParameterSet ps;
    const auto a = ps.add("a", Tensor::scalar(0.5));
    const auto b = ps.add("b", Tensor::scalar(0.5));
    Graph g(&ps);
    Gradients grads(ps);
    g.backward(g.minimum(g.parameter(a), g.parameter(b)), grads);
    CHECK(grads[a][0] == 1.0);
    CHECK(grads[b][0] == 0.0);
  }
  SUBCASE("sigmoid derivative") {
    ParameterSet ps;
    const auto w = ps.add("w", Tensor::scalar(0.3));
    Graph g(&ps);
    Gradients grads(ps);
    g.backward(g.sigmoid(g.parameter(w)), grads);
    const double s = 1.0 / (1.0 + std::exp(-0.3));
    CHECK(grads[w][0] == doctest::Approx(s * (1 - s)).epsilon(1e-14));
    const auto report = grad_check([&](Graph& gg) { return gg.sigmoid(gg.parameter(w)); }, ps);
    CHECK(report.max_rel_error < 1e-6);
  }
  SUBCASE("constant function has zero gradients both ways") {
    ParameterSet ps;
    ps.add("w", Tensor::vector({0.1, 0.2}));
    const auto report = grad_check([](Graph& gg) { return gg.constant(3.0); }, ps);
    CHECK(report.passed);
    CHECK(report.max_rel_error == 0.0);
  }
}

TEST_CASE("unused parameters get exactly zero gradient") {
  ParameterSet ps;
  const auto used = ps.add("used", Tensor::vector({0.4, -0.2}));
  const auto unused = ps.add("unused", Tensor::vector({1.0, 2.0, 3.0}));
  Graph g(&ps);
  Gradients grads(ps);
  g.backward(g.sum(g.tanh(g.parameter(used))), grads);
  for (double x : grads[unused]) CHECK(x == 0.0);
}

TEST_CASE("backward rejects a non-scalar loss") {
  ParameterSet ps;
  const auto w = ps.add("w", Tensor::vector({1, 2}));
  Graph g(&ps);
  Gradients grads(ps);
  CHECK_THROWS_AS(g.backward(g.parameter(w), grads), Error);
}

TEST_CASE("shape mismatch errors name the op and both shapes") {
  Graph g;
  const Var a = g.constant(Tensor::vector({1, 2, 3}));
  const Var b = g.constant(Tensor::vector({1, 2}));
  try {
    g.add(a, b);
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::shape);
    const std::string msg = e.what();
    CHECK(msg.find("add") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
  CHECK_THROWS_AS(g.matmul(g.constant(Tensor({2, 2})), a), Error);
}

TEST_CASE("every op matches central differences at 100 random kink-free points") {
  for (const auto& op : op_cases()) {
    CAPTURE(op.name);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      std::mt19937_64 rng(seed);
      ParameterSet ps;
      const auto w = ps.add("w", random_tensor(rng, {3, 4}));
      const auto x = ps.add("x", away_from_zero(random_tensor(rng, {4})));
      // y is kept clear of x so that minimum has no ties.
      Tensor yv = random_tensor(rng, {4});
      for (std::size_t i = 0; i < 4; ++i) {
        if (std::abs(yv[i] - ps.value(x)[i]) < 0.05) yv[i] = ps.value(x)[i] + 0.1;
      }
      const auto y = ps.add("y", yv);
      const auto s = ps.add("s", Tensor::scalar(0.2 + 0.5 * test_support::uniform_vector(rng, 1, 0, 1)[0]));
      const auto m = ps.add("m", random_tensor(rng, {4, 2}));
      const auto f = [&](Graph& g) { return op.build(g, w, x, y, s, m); };
      const auto report = grad_check(f, ps, 1e-5, 1e-4);
      CHECK(report.kink_margin > 1e-5);
      worst = std::max(worst, report.max_rel_error);
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("random composite of the op set matches an independent finite-difference oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    ParameterSet ps;
    const auto w = ps.add("w", random_tensor(rng, {2, 5}));
    const auto b = ps.add("b", random_tensor(rng, {2}));
    const auto v = ps.add("v", random_tensor(rng, {5}));
    const auto c = ps.add("c", random_tensor(rng, {1}));
    // 10 + 2 + 5 + 1 = 18; two more come from e.
    const auto e = ps.add("e", random_tensor(rng, {2}));
    REQUIRE(ps.scalar_count() == 20);
    const auto f = [&](Graph& g) {
      const Var h = g.tanh(g.add(g.matmul(g.parameter(w), g.parameter(v)), g.parameter(b)));
      const Var p = g.softmax(g.mul(h, g.parameter(e)));
      const Var gate = g.sigmoid(g.parameter(c));
      const Var parts[] = {g.scale(gate, p), h};
      const Var joined = g.concat(parts);
      return g.add(g.dot(joined, joined), g.cross_entropy(h, 0));
    };
    Graph g(&ps);
    Gradients grads(ps);
    g.backward(f(g), grads);
    const auto numeric = numeric_gradient(f, ps);
    for (ParamId p = 0; p < ps.size(); ++p) {
      for (std::size_t i = 0; i < numeric[p].size(); ++i) {
        CHECK(std::abs(grads[p][i] - numeric[p][i]) / std::max(1.0, std::abs(numeric[p][i])) < 1e-6);
      }
    }
  }
}

TEST_CASE("forward and backward are bitwise reproducible") {
  std::mt19937_64 rng(3);
  ParameterSet ps;
  const auto w = ps.add("w", random_tensor(rng, {6, 6}));
  const auto x = ps.add("x", random_tensor(rng, {6}));
  auto run = [&] {
    Graph g(&ps);
    Gradients grads(ps);
    const Var loss = g.cross_entropy(g.tanh(g.matmul(g.parameter(w), g.parameter(x))), 2);
    g.backward(loss, grads);
    return std::make_pair(g.scalar(loss), std::vector<double>(grads[w].begin(), grads[w].end()));
  };
  CHECK(run() == run());
}

TEST_CASE("gradients accumulate across backward calls and can be rescaled") {
  ParameterSet ps;
  const auto w = ps.add("w", Tensor::vector({3.0, 4.0}));
  Gradients grads(ps);
  for (int i = 0; i < 2; ++i) {
    Graph g(&ps);
    g.backward(g.sum(g.parameter(w)), grads);
  }
  CHECK(grads[w][0] == 2.0);
  CHECK(grads.global_norm() == doctest::Approx(std::sqrt(8.0)));
  grads.scale(0.5);
  CHECK(grads[w][1] == 1.0);
  grads.zero();
  CHECK(grads.global_norm() == 0.0);
}

TEST_CASE("tensor validation") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), Error);
  CHECK_THROWS_AS(Tensor({2}, {1, std::nan("")}), Error);
  CHECK_THROWS_AS(Tensor({0}), Error);
  ParameterSet ps;
  ps.add("a", Tensor::scalar(1));
  CHECK_THROWS_AS(ps.add("a", Tensor::scalar(2)), Error);
}
