#pragma once

#include <cstddef>
#include <span>

// Dense linear-algebra kernels behind the autodiff matmul.
//
// Each kernel exists twice: a plain serial loop that serves as the reference,
// and an OpenMP version that splits the output across threads. Both perform the
// same floating-point operations in the same order per output element, so their
// results are bitwise identical and training stays deterministic regardless of
// thread count.
namespace stackrnn::kernels {

// y = A x, A is rows x cols row-major.
// out += A^T g, g has length rows, out has length cols.
// out += g x^T, out is rows x cols.
namespace serial {
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y);
void matvec_transposed_accumulate(std::span<const double> a, std::size_t rows, std::size_t cols,
                                  std::span<const double> g, std::span<double> out);
void outer_accumulate(std::span<const double> g, std::span<const double> x, std::span<double> out);
}  // namespace serial

namespace parallel {
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y);
void matvec_transposed_accumulate(std::span<const double> a, std::size_t rows, std::size_t cols,
                                  std::span<const double> g, std::span<double> out);
void outer_accumulate(std::span<const double> g, std::span<const double> x, std::span<double> out);
}  // namespace parallel

// Dispatching entry points: parallel above the size threshold and when not
// already inside a parallel region, serial otherwise.
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y);
void matvec_transposed_accumulate(std::span<const double> a, std::size_t rows, std::size_t cols,
                                  std::span<const double> g, std::span<double> out);
void outer_accumulate(std::span<const double> g, std::span<const double> x, std::span<double> out);

// Minimum rows*cols for the dispatcher to go parallel.
inline constexpr std::size_t parallel_threshold = std::size_t{1} << 15;

bool openmp_enabled();
int max_threads();
bool in_parallel_region();

}  // namespace stackrnn::kernels
