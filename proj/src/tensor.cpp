#include "stackrnn/tensor.hpp"

#include <cmath>
#include <sstream>

#include "stackrnn/error.hpp"

namespace stackrnn {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {
  for (std::size_t d : shape_) {
    if (d == 0) throw Error(ErrorKind::shape, "tensor dimension must be positive: " + shape_string(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (std::size_t d : shape_) {
    if (d == 0) throw Error(ErrorKind::shape, "tensor dimension must be positive: " + shape_string(shape_));
  }
  if (data_.size() != shape_size(shape_)) {
    throw Error(ErrorKind::shape, "tensor data length " + std::to_string(data_.size()) +
                                      " does not match shape " + shape_string(shape_));
  }
  if (!all_finite()) throw Error(ErrorKind::numeric, "tensor contains non-finite values");
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> data) {
  const std::size_t n = data.size();
  return Tensor({n}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<double> data) { return vector(std::vector<double>(data)); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace stackrnn
