#include <doctest.h>

#include <random>

#include "stackrnn/kernels.hpp"
#include "support.hpp"

using namespace stackrnn;
using test_support::uniform_vector;

namespace {

// Textbook triple loop, the oracle for both kernel families.
std::vector<double> naive_matvec(const std::vector<double>& a, std::size_t rows, std::size_t cols,
                                 const std::vector<double>& x) {
  std::vector<double> y(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += a[r * cols + c] * x[c];
    y[r] = acc;
  }
  return y;
}

struct Dims {
  std::size_t rows;
  std::size_t cols;
};

}  // namespace

TEST_CASE("serial kernels match the naive oracle") {
  std::mt19937_64 rng(1);
  for (Dims d : {Dims{1, 1}, Dims{3, 7}, Dims{17, 5}, Dims{64, 129}}) {
    const auto a = uniform_vector(rng, d.rows * d.cols);
    const auto x = uniform_vector(rng, d.cols);
    std::vector<double> y(d.rows);
    kernels::serial::matvec(a, d.rows, d.cols, x, y);
    const auto want = naive_matvec(a, d.rows, d.cols, x);
    for (std::size_t i = 0; i < d.rows; ++i) CHECK(y[i] == doctest::Approx(want[i]).epsilon(1e-13));

    // A^T g via the transposed matrix on the naive path.
    const auto g = uniform_vector(rng, d.rows);
    std::vector<double> at(d.rows * d.cols);
    for (std::size_t r = 0; r < d.rows; ++r) {
      for (std::size_t c = 0; c < d.cols; ++c) at[c * d.rows + r] = a[r * d.cols + c];
    }
    std::vector<double> out(d.cols, 1.0);
    kernels::serial::matvec_transposed_accumulate(a, d.rows, d.cols, g, out);
    const auto atg = naive_matvec(at, d.cols, d.rows, g);
    for (std::size_t i = 0; i < d.cols; ++i) CHECK(out[i] == doctest::Approx(1.0 + atg[i]).epsilon(1e-13));

    std::vector<double> outer(d.rows * d.cols, 0.5);
    kernels::serial::outer_accumulate(g, x, outer);
    for (std::size_t r = 0; r < d.rows; ++r) {
      for (std::size_t c = 0; c < d.cols; ++c) CHECK(outer[r * d.cols + c] == 0.5 + g[r] * x[c]);
    }
  }
}

TEST_CASE("parallel kernels are bitwise identical to serial") {
  std::mt19937_64 rng(2);
  for (Dims d : {Dims{1, 3}, Dims{5, 2}, Dims{33, 65}, Dims{400, 116}, Dims{256, 300}}) {
    CAPTURE(d.rows);
    CAPTURE(d.cols);
    const auto a = uniform_vector(rng, d.rows * d.cols);
    const auto x = uniform_vector(rng, d.cols);
    const auto g = uniform_vector(rng, d.rows);

    std::vector<double> ys(d.rows), yp(d.rows), yd(d.rows);
    kernels::serial::matvec(a, d.rows, d.cols, x, ys);
    kernels::parallel::matvec(a, d.rows, d.cols, x, yp);
    kernels::matvec(a, d.rows, d.cols, x, yd);
    CHECK(ys == yp);
    CHECK(ys == yd);

    std::vector<double> ts(d.cols, 0.25), tp(d.cols, 0.25);
    kernels::serial::matvec_transposed_accumulate(a, d.rows, d.cols, g, ts);
    kernels::parallel::matvec_transposed_accumulate(a, d.rows, d.cols, g, tp);
    CHECK(ts == tp);

    std::vector<double> os(d.rows * d.cols, -1.0), op(d.rows * d.cols, -1.0);
    kernels::serial::outer_accumulate(g, x, os);
    kernels::parallel::outer_accumulate(g, x, op);
    CHECK(os == op);
  }
}

TEST_CASE("thread queries are consistent") {
  CHECK(kernels::max_threads() >= 1);
  CHECK_FALSE(kernels::in_parallel_region());
  if (!kernels::openmp_enabled()) CHECK(kernels::max_threads() == 1);
}
