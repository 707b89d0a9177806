#include "stackrnn/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stackrnn::kernels {

namespace serial {

void matvec(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = a.data() + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

void matvec_transposed_accumulate(std::span<const double> a, std::size_t rows, std::size_t cols,
                                  std::span<const double> g, std::span<double> out) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double gi = g[i];
    if (gi == 0.0) continue;
    const double* row = a.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += row[j] * gi;
  }
}

void outer_accumulate(std::span<const double> g, std::span<const double> x, std::span<double> out) {
  const std::size_t rows = g.size();
  const std::size_t cols = x.size();
  for (std::size_t i = 0; i < rows; ++i) {
    const double gi = g[i];
    if (gi == 0.0) continue;
    double* row = out.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) row[j] += gi * x[j];
  }
}

}  // namespace serial

namespace parallel {

void matvec(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y) {
  const auto n = static_cast<long>(rows);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const double* row = a.data() + static_cast<std::size_t>(i) * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[static_cast<std::size_t>(i)] = acc;
  }
}

void matvec_transposed_accumulate(std::span<const double> a, std::size_t rows, std::size_t cols,
                                  std::span<const double> g, std::span<double> out) {
  // Each thread owns a contiguous block of output columns and walks the rows in
  // order, so every out[j] sees the same accumulation sequence as the serial loop.
#pragma omp parallel
  {
    std::size_t begin = 0;
    std::size_t end = cols;
#ifdef _OPENMP
    const auto threads = static_cast<std::size_t>(omp_get_num_threads());
    const auto tid = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t chunk = (cols + threads - 1) / threads;
    begin = std::min(cols, tid * chunk);
    end = std::min(cols, begin + chunk);
#endif
    for (std::size_t i = 0; i < rows; ++i) {
      const double gi = g[i];
      if (gi == 0.0) continue;
      const double* row = a.data() + i * cols;
      for (std::size_t j = begin; j < end; ++j) out[j] += row[j] * gi;
    }
  }
}

void outer_accumulate(std::span<const double> g, std::span<const double> x, std::span<double> out) {
  const auto rows = static_cast<long>(g.size());
  const std::size_t cols = x.size();
#pragma omp parallel for schedule(static)
  for (long i = 0; i < rows; ++i) {
    const double gi = g[static_cast<std::size_t>(i)];
    if (gi == 0.0) continue;
    double* row = out.data() + static_cast<std::size_t>(i) * cols;
    for (std::size_t j = 0; j < cols; ++j) row[j] += gi * x[j];
  }
}

}  // namespace parallel

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

bool in_parallel_region() {
#ifdef _OPENMP
  return omp_in_parallel() != 0;
#else
  return false;
#endif
}

namespace {
bool go_parallel(std::size_t work) {
  return openmp_enabled() && work >= parallel_threshold && max_threads() > 1 && !in_parallel_region();
}
}  // namespace

void matvec(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y) {
  if (go_parallel(rows * cols)) {
    parallel::matvec(a, rows, cols, x, y);
  } else {
    serial::matvec(a, rows, cols, x, y);
  }
}

void matvec_transposed_accumulate(std::span<const double> a, std::size_t rows, std::size_t cols,
                                  std::span<const double> g, std::span<double> out) {
  if (go_parallel(rows * cols)) {
    parallel::matvec_transposed_accumulate(a, rows, cols, g, out);
  } else {
    serial::matvec_transposed_accumulate(a, rows, cols, g, out);
  }
}

void outer_accumulate(std::span<const double> g, std::span<const double> x, std::span<double> out) {
  if (go_parallel(g.size() * x.size())) {
    parallel::outer_accumulate(g, x, out);
  } else {
    serial::outer_accumulate(g, x, out);
  }
}

}  // namespace stackrnn::kernels
