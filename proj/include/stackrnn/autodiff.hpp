#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stackrnn/tensor.hpp"

// Reverse-mode automatic differentiation over dense double tensors.
//
// A Graph is built fresh for every sequence (define-by-run). Nodes are appended
// in evaluation order and every input id precedes its consumer, so backward is a
// single reverse sweep. Parameters live outside the graph in a ParameterSet;
// their gradients are accumulated into a Gradients buffer of matching layout.
namespace stackrnn::ad {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

using ParamId = std::size_t;

class ParameterSet {
 public:
  ParamId add(std::string name, Tensor value);

  std::size_t size() const { return values_.size(); }
  const std::string& name(ParamId id) const { return names_[id]; }
  const Tensor& value(ParamId id) const { return values_[id]; }
  Tensor& value(ParamId id) { return values_[id]; }
  std::optional<ParamId> find(std::string_view name) const;
  std::size_t scalar_count() const;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParameterSet& params);

  std::size_t size() const { return slots_.size(); }
  std::span<double> operator[](ParamId id) { return slots_[id]; }
  std::span<const double> operator[](ParamId id) const { return slots_[id]; }

  void zero();
  void add(const Gradients& other);
  void scale(double factor);
  double global_norm() const;
  bool all_finite() const;

 private:
  std::vector<std::vector<double>> slots_;
};

enum class Op : std::uint8_t {
  constant,
  parameter,
  matmul,
  add,
  sub,
  mul,
  tanh,
  sigmoid,
  relu,
  softmax,
  minimum,
  sum,
  concat,
  index_select,
  weighted_sum,
  scale,
  scale_const,
  slice,
  dot,
  cross_entropy,
};

std::string_view op_name(Op op);

class Graph {
 public:
  explicit Graph(const ParameterSet* params = nullptr);

  Var constant(Tensor value);
  Var constant(double value) { return constant(Tensor::scalar(value)); }
  Var parameter(ParamId id);

  // A[m,k] x B[k] -> [m];  A[m,k] x B[k,n] -> [m,n].
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);
  // Softmax over the last axis.
  Var softmax(Var a);
  Var minimum(Var a, Var b);
  Var sum(Var a);
  Var concat(std::span<const Var> parts);
  Var index_select(Var table, std::size_t row);
  Var index_select(Var table, std::span<const std::size_t> rows);
  // sum_i weights[i] * vectors[i]; weights are scalars. Empty input yields
  // the zero vector of length `dim`.
  Var weighted_sum(std::span<const Var> weights, std::span<const Var> vectors, std::size_t dim);
  // Scalar node times tensor.
  Var scale(Var scalar, Var a);
  Var scale(Var a, double factor);
  Var slice(Var a, std::size_t offset, std::size_t length);
  Var dot(Var a, Var b);
  // -log softmax(logits)[target], computed stably.
  Var cross_entropy(Var logits, std::size_t target);

  const Shape& shape(Var v) const { return nodes_[index(v)].shape; }
  std::span<const double> value(Var v) const;
  double scalar(Var v) const;
  Tensor tensor(Var v) const;
  Op op(Var v) const { return nodes_[index(v)].op; }
  std::size_t node_count() const { return nodes_.size(); }
  const ParameterSet* parameters() const { return params_; }

  // Accumulates dLoss/dParam into `grads`. Node-level gradients remain
  // readable through grad() afterwards.
  void backward(Var loss, Gradients& grads);
  std::span<const double> grad(Var v) const;

  // Smallest distance of any relu input or min operand pair from its kink,
  // over everything evaluated so far. Finite-difference checks are only
  // meaningful when this exceeds the step size.
  double kink_margin() const { return kink_margin_; }

 private:
  struct Node {
    Op op = Op::constant;
    std::vector<int> inputs;
    Shape shape;
    std::vector<double> value;
    ParamId param = 0;
    std::size_t aux = 0;
    std::vector<std::size_t> rows;
    double factor = 0.0;
    bool requires_grad = false;
  };

  std::size_t index(Var v) const;
  std::span<const double> node_value(int id) const;
  Var push(Node node);
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  std::span<double> grad_slot(int id, Gradients& grads);
  [[noreturn]] void shape_mismatch(Op op, Var a, Var b) const;
  void note_kink(double distance);

  const ParameterSet* params_;
  std::vector<Node> nodes_;
  std::vector<int> param_nodes_;
  std::vector<std::vector<double>> grads_;
  double kink_margin_;
};

struct GradCheckGroup {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  double kink_margin = 0.0;
  bool passed = false;
};

using ScalarFunction = std::function<Var(Graph&)>;

// Compares backward() against central finite differences for every parameter
// group. Error per element is |analytic - numeric| / max(1, |numeric|).
// max_per_group = 0 checks every element; otherwise an evenly spaced subset.
GradCheckReport grad_check(const ScalarFunction& f, ParameterSet& params, double step = 1e-5,
                           double tolerance = 1e-4, std::size_t max_per_group = 0);

}  // namespace stackrnn::ad
