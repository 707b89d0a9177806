#include "stackrnn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stackrnn/error.hpp"
#include "stackrnn/kernels.hpp"

namespace stackrnn::ad {

ParamId ParameterSet::add(std::string name, Tensor value) {
  if (find(name)) throw usage_error("duplicate parameter name: " + name);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

std::optional<ParamId> ParameterSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

Gradients::Gradients(const ParameterSet& params) {
  slots_.reserve(params.size());
  for (ParamId i = 0; i < params.size(); ++i) slots_.emplace_back(params.value(i).size(), 0.0);
}

void Gradients::zero() {
  for (auto& s : slots_) std::fill(s.begin(), s.end(), 0.0);
}

void Gradients::add(const Gradients& other) {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    auto& dst = slots_[i];
    const auto& src = other.slots_[i];
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
}

void Gradients::scale(double factor) {
  for (auto& s : slots_) {
    for (double& v : s) v *= factor;
  }
}

double Gradients::global_norm() const {
  double sq = 0.0;
  for (const auto& s : slots_) {
    for (double v : s) sq += v * v;
  }
  return std::sqrt(sq);
}

bool Gradients::all_finite() const {
  for (const auto& s : slots_) {
    for (double v : s) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::string_view op_name(Op op) {
  switch (op) {
    case Op::constant: return "constant";
    case Op::parameter: return "parameter";
    case Op::matmul: return "matmul";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::tanh: return "tanh";
    case Op::sigmoid: return "sigmoid";
    case Op::relu: return "relu";
    case Op::softmax: return "softmax";
    case Op::minimum: return "min";
    case Op::sum: return "sum";
    case Op::concat: return "concat";
    case Op::index_select: return "index_select";
    case Op::weighted_sum: return "weighted_sum";
    case Op::scale: return "scale";
    case Op::scale_const: return "scale_const";
    case Op::slice: return "slice";
    case Op::dot: return "dot";
    case Op::cross_entropy: return "cross_entropy";
  }
  return "unknown";
}

Graph::Graph(const ParameterSet* params)
    : params_(params), kink_margin_(std::numeric_limits<double>::infinity()) {
  if (params_) param_nodes_.assign(params_->size(), -1);
}

std::size_t Graph::index(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw usage_error("invalid graph variable id " + std::to_string(v.id));
  }
  return static_cast<std::size_t>(v.id);
}

std::span<const double> Graph::node_value(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.op == Op::parameter) return params_->value(n.param).data();
  return n.value;
}

std::span<const double> Graph::value(Var v) const { return node_value(static_cast<int>(index(v))); }

double Graph::scalar(Var v) const {
  auto val = value(v);
  if (val.size() != 1) throw Error(ErrorKind::shape, "scalar(): node has shape " + shape_string(shape(v)));
  return val[0];
}

Tensor Graph::tensor(Var v) const {
  auto val = value(v);
  return Tensor(shape(v), std::vector<double>(val.begin(), val.end()));
}

Var Graph::push(Node node) {
  for (int in : node.inputs) {
    if (nodes_[static_cast<std::size_t>(in)].requires_grad) {
      node.requires_grad = true;
      break;
    }
  }
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

void Graph::shape_mismatch(Op op, Var a, Var b) const {
  throw Error(ErrorKind::shape, std::string(op_name(op)) + ": shape mismatch " + shape_string(shape(a)) +
                                    " vs " + shape_string(shape(b)));
}

void Graph::note_kink(double distance) { kink_margin_ = std::min(kink_margin_, std::abs(distance)); }

Var Graph::constant(Tensor value) {
  Node n;
  n.op = Op::constant;
  n.shape = value.shape();
  auto d = value.data();
  n.value.assign(d.begin(), d.end());
  return push(std::move(n));
}

Var Graph::parameter(ParamId id) {
  if (!params_ || id >= params_->size()) throw usage_error("parameter id out of range");
  if (param_nodes_[id] >= 0) return Var{param_nodes_[id]};
  Node n;
  n.op = Op::parameter;
  n.shape = params_->value(id).shape();
  n.param = id;
  n.requires_grad = true;
  Var v = push(std::move(n));
  param_nodes_[id] = v.id;
  return v;
}

Var Graph::matmul(Var a, Var b) {
  const Shape& sa = shape(a);
  const Shape& sb = shape(b);
  if (sa.size() != 2 || sb.empty() || sb.size() > 2 || sa[1] != sb[0]) shape_mismatch(Op::matmul, a, b);
  const std::size_t m = sa[0];
  const std::size_t k = sa[1];
  Node n;
  n.op = Op::matmul;
  n.inputs = {a.id, b.id};
  auto av = value(a);
  auto bv = value(b);
  if (sb.size() == 1) {
    n.shape = {m};
    n.value.assign(m, 0.0);
    kernels::matvec(av, m, k, bv, n.value);
  } else {
    const std::size_t cols = sb[1];
    n.shape = {m, cols};
    n.value.assign(m * cols, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = av[i * k + p];
        for (std::size_t j = 0; j < cols; ++j) n.value[i * cols + j] += aip * bv[p * cols + j];
      }
    }
  }
  return push(std::move(n));
}

namespace {
template <class F>
std::vector<double> zip(std::span<const double> a, std::span<const double> b, F f) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

template <class F>
std::vector<double> map(std::span<const double> a, F f) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void softmax_rows(std::span<const double> in, std::size_t width, std::span<double> out) {
  for (std::size_t start = 0; start < in.size(); start += width) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < width; ++j) mx = std::max(mx, in[start + j]);
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      out[start + j] = std::exp(in[start + j] - mx);
      total += out[start + j];
    }
    for (std::size_t j = 0; j < width; ++j) out[start + j] /= total;
  }
}
}  // namespace

Var Graph::add(Var a, Var b) {
  if (shape(a) != shape(b)) shape_mismatch(Op::add, a, b);
  Node n;
  n.op = Op::add;
  n.inputs = {a.id, b.id};
  n.shape = shape(a);
  n.value = zip(value(a), value(b), [](double x, double y) { return x + y; });
  return push(std::move(n));
}

Var Graph::sub(Var a, Var b) {
  if (shape(a) != shape(b)) shape_mismatch(Op::sub, a, b);
  Node n;
  n.op = Op::sub;
  n.inputs = {a.id, b.id};
  n.shape = shape(a);
  n.value = zip(value(a), value(b), [](double x, double y) { return x - y; });
  return push(std::move(n));
}

Var Graph::mul(Var a, Var b) {
  if (shape(a) != shape(b)) shape_mismatch(Op::mul, a, b);
  Node n;
  n.op = Op::mul;
  n.inputs = {a.id, b.id};
  n.shape = shape(a);
  n.value = zip(value(a), value(b), [](double x, double y) { return x * y; });
  return push(std::move(n));
}

Var Graph::tanh(Var a) {
  Node n;
  n.op = Op::tanh;
  n.inputs = {a.id};
  n.shape = shape(a);
  n.value = map(value(a), [](double x) { return std::tanh(x); });
  return push(std::move(n));
}

Var Graph::sigmoid(Var a) {
  Node n;
  n.op = Op::sigmoid;
  n.inputs = {a.id};
  n.shape = shape(a);
  n.value = map(value(a), sigmoid_value);
  return push(std::move(n));
}

Var Graph::relu(Var a) {
  Node n;
  n.op = Op::relu;
  n.inputs = {a.id};
  n.shape = shape(a);
  auto av = value(a);
  for (double x : av) note_kink(x);
  n.value = map(av, [](double x) { return x > 0.0 ? x : 0.0; });
  return push(std::move(n));
}

Var Graph::softmax(Var a) {
  const Shape& s = shape(a);
  Node n;
  n.op = Op::softmax;
  n.inputs = {a.id};
  n.shape = s;
  n.value.assign(shape_size(s), 0.0);
  softmax_rows(value(a), s.back(), n.value);
  return push(std::move(n));
}

Var Graph::minimum(Var a, Var b) {
  if (shape(a) != shape(b)) shape_mismatch(Op::minimum, a, b);
  Node n;
  n.op = Op::minimum;
  n.inputs = {a.id, b.id};
  n.shape = shape(a);
  auto av = value(a);
  auto bv = value(b);
  for (std::size_t i = 0; i < av.size(); ++i) note_kink(av[i] - bv[i]);
  n.value = zip(av, bv, [](double x, double y) { return x <= y ? x : y; });
  return push(std::move(n));
}

Var Graph::sum(Var a) {
  Node n;
  n.op = Op::sum;
  n.inputs = {a.id};
  n.shape = {1};
  double total = 0.0;
  for (double x : value(a)) total += x;
  n.value = {total};
  return push(std::move(n));
}

Var Graph::concat(std::span<const Var> parts) {
  if (parts.empty()) throw usage_error("concat: no inputs");
  Node n;
  n.op = Op::concat;
  std::size_t total = 0;
  for (Var p : parts) {
    if (shape(p).size() != 1) shape_mismatch(Op::concat, parts[0], p);
    n.inputs.push_back(p.id);
    total += shape(p)[0];
  }
  n.shape = {total};
  n.value.reserve(total);
  for (Var p : parts) {
    auto v = value(p);
    n.value.insert(n.value.end(), v.begin(), v.end());
  }
  return push(std::move(n));
}

Var Graph::index_select(Var table, std::size_t row) {
  const std::size_t rows[] = {row};
  Var v = index_select(table, std::span<const std::size_t>(rows));
  // A single index yields a vector rather than a 1 x e matrix.
  nodes_.back().shape = {shape(table)[1]};
  return v;
}

Var Graph::index_select(Var table, std::span<const std::size_t> rows) {
  const Shape& s = shape(table);
  if (s.size() != 2) throw Error(ErrorKind::shape, "index_select: table must be rank 2, got " + shape_string(s));
  const std::size_t width = s[1];
  auto tv = value(table);
  Node n;
  n.op = Op::index_select;
  n.inputs = {table.id};
  n.shape = {rows.size(), width};
  n.rows.assign(rows.begin(), rows.end());
  n.value.reserve(rows.size() * width);
  for (std::size_t r : rows) {
    if (r >= s[0]) {
      throw Error(ErrorKind::shape, "index_select: row " + std::to_string(r) + " out of range for table " +
                                        shape_string(s));
    }
    n.value.insert(n.value.end(), tv.begin() + static_cast<long>(r * width),
                   tv.begin() + static_cast<long>((r + 1) * width));
  }
  return push(std::move(n));
}

Var Graph::weighted_sum(std::span<const Var> weights, std::span<const Var> vectors, std::size_t dim) {
  if (weights.size() != vectors.size()) throw usage_error("weighted_sum: weight and vector counts differ");
  Node n;
  n.op = Op::weighted_sum;
  n.shape = {dim};
  n.value.assign(dim, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (value(weights[i]).size() != 1) shape_mismatch(Op::weighted_sum, weights[i], vectors[i]);
    if (shape(vectors[i]) != Shape{dim}) shape_mismatch(Op::weighted_sum, weights[i], vectors[i]);
    n.inputs.push_back(weights[i].id);
    n.inputs.push_back(vectors[i].id);
    const double w = scalar(weights[i]);
    auto v = value(vectors[i]);
    for (std::size_t j = 0; j < dim; ++j) n.value[j] += w * v[j];
  }
  return push(std::move(n));
}

Var Graph::scale(Var s, Var a) {
  if (value(s).size() != 1) shape_mismatch(Op::scale, s, a);
  const double f = scalar(s);
  Node n;
  n.op = Op::scale;
  n.inputs = {s.id, a.id};
  n.shape = shape(a);
  n.value = map(value(a), [f](double x) { return f * x; });
  return push(std::move(n));
}

Var Graph::scale(Var a, double factor) {
  Node n;
  n.op = Op::scale_const;
  n.inputs = {a.id};
  n.shape = shape(a);
  n.factor = factor;
  n.value = map(value(a), [factor](double x) { return factor * x; });
  return push(std::move(n));
}

Var Graph::slice(Var a, std::size_t offset, std::size_t length) {
  const Shape& s = shape(a);
  if (s.size() != 1 || length == 0 || offset + length > s[0]) {
    throw Error(ErrorKind::shape, "slice: [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                                      ") out of range for " + shape_string(s));
  }
  auto v = value(a);
  Node n;
  n.op = Op::slice;
  n.inputs = {a.id};
  n.shape = {length};
  n.aux = offset;
  n.value.assign(v.begin() + static_cast<long>(offset), v.begin() + static_cast<long>(offset + length));
  return push(std::move(n));
}

Var Graph::dot(Var a, Var b) {
  if (shape(a) != shape(b)) shape_mismatch(Op::dot, a, b);
  auto av = value(a);
  auto bv = value(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  Node n;
  n.op = Op::dot;
  n.inputs = {a.id, b.id};
  n.shape = {1};
  n.value = {acc};
  return push(std::move(n));
}

Var Graph::cross_entropy(Var logits, std::size_t target) {
  const Shape& s = shape(logits);
  if (s.size() != 1 || target >= s[0]) {
    throw Error(ErrorKind::shape, "cross_entropy: target " + std::to_string(target) + " invalid for logits " +
                                      shape_string(s));
  }
  auto l = value(logits);
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : l) mx = std::max(mx, x);
  double total = 0.0;
  for (double x : l) total += std::exp(x - mx);
  Node n;
  n.op = Op::cross_entropy;
  n.inputs = {logits.id};
  n.shape = {1};
  n.aux = target;
  n.value = {mx + std::log(total) - l[target]};
  return push(std::move(n));
}

std::span<double> Graph::grad_slot(int id, Gradients& grads) {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.op == Op::parameter) return grads[n.param];
  auto& g = grads_[static_cast<std::size_t>(id)];
  if (g.empty()) g.assign(n.value.size(), 0.0);
  return g;
}

std::span<const double> Graph::grad(Var v) const {
  const std::size_t i = index(v);
  if (i >= grads_.size()) return {};
  return grads_[i];
}

void Graph::backward(Var loss, Gradients& grads) {
  const std::size_t root = index(loss);
  if (value(loss).size() != 1) {
    throw Error(ErrorKind::shape, "backward: loss must be scalar, got shape " + shape_string(shape(loss)));
  }
  if (params_ && grads.size() != params_->size()) throw usage_error("backward: gradient buffer layout mismatch");
  grads_.assign(nodes_.size(), {});
  grads_[root] = {1.0};

  for (std::size_t idx = root + 1; idx-- > 0;) {
    const Node& n = nodes_[idx];
    if (n.op == Op::constant || n.op == Op::parameter) continue;
    if (grads_[idx].empty()) continue;
    const std::vector<double>& g = grads_[idx];
    const auto& in = n.inputs;

    switch (n.op) {
      case Op::matmul: {
        const Shape& sa = nodes_[static_cast<std::size_t>(in[0])].shape;
        const std::size_t m = sa[0];
        const std::size_t k = sa[1];
        auto av = node_value(in[0]);
        auto bv = node_value(in[1]);
        if (n.shape.size() == 1) {
          if (needs_grad(in[0])) kernels::outer_accumulate(g, bv, grad_slot(in[0], grads));
          if (needs_grad(in[1])) kernels::matvec_transposed_accumulate(av, m, k, g, grad_slot(in[1], grads));
        } else {
          const std::size_t cols = n.shape[1];
          if (needs_grad(in[0])) {
            auto da = grad_slot(in[0], grads);
            for (std::size_t i = 0; i < m; ++i)
              for (std::size_t p = 0; p < k; ++p)
                for (std::size_t j = 0; j < cols; ++j) da[i * k + p] += g[i * cols + j] * bv[p * cols + j];
          }
          if (needs_grad(in[1])) {
            auto db = grad_slot(in[1], grads);
            for (std::size_t i = 0; i < m; ++i)
              for (std::size_t p = 0; p < k; ++p)
                for (std::size_t j = 0; j < cols; ++j) db[p * cols + j] += av[i * k + p] * g[i * cols + j];
          }
        }
        break;
      }
      case Op::add:
      case Op::sub: {
        const double sign = n.op == Op::add ? 1.0 : -1.0;
        if (needs_grad(in[0])) {
          auto da = grad_slot(in[0], grads);
          for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
        }
        if (needs_grad(in[1])) {
          auto db = grad_slot(in[1], grads);
          for (std::size_t i = 0; i < g.size(); ++i) db[i] += sign * g[i];
        }
        break;
      }
      case Op::mul: {
        auto av = node_value(in[0]);
        auto bv = node_value(in[1]);
        if (needs_grad(in[0])) {
          auto da = grad_slot(in[0], grads);
          for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
        }
        if (needs_grad(in[1])) {
          auto db = grad_slot(in[1], grads);
          for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
        }
        break;
      }
      case Op::tanh: {
        if (!needs_grad(in[0])) break;
        auto da = grad_slot(in[0], grads);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
        break;
      }
      case Op::sigmoid: {
        if (!needs_grad(in[0])) break;
        auto da = grad_slot(in[0], grads);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
        break;
      }
      case Op::relu: {
        if (!needs_grad(in[0])) break;
        auto av = node_value(in[0]);
        auto da = grad_slot(in[0], grads);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (av[i] > 0.0) da[i] += g[i];
        }
        break;
      }
      case Op::softmax: {
        if (!needs_grad(in[0])) break;
        auto da = grad_slot(in[0], grads);
        const std::size_t width = n.shape.back();
        for (std::size_t start = 0; start < g.size(); start += width) {
          double inner = 0.0;
          for (std::size_t j = 0; j < width; ++j) inner += g[start + j] * n.value[start + j];
          for (std::size_t j = 0; j < width; ++j) da[start + j] += n.value[start + j] * (g[start + j] - inner);
        }
        break;
      }
      case Op::minimum: {
        auto av = node_value(in[0]);
        auto bv = node_value(in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const int target = av[i] <= bv[i] ? in[0] : in[1];
          if (needs_grad(target)) grad_slot(target, grads)[i] += g[i];
        }
        break;
      }
      case Op::sum: {
        if (!needs_grad(in[0])) break;
        auto da = grad_slot(in[0], grads);
        for (double& x : da) x += g[0];
        break;
      }
      case Op::concat: {
        std::size_t offset = 0;
        for (int part : in) {
          const std::size_t len = nodes_[static_cast<std::size_t>(part)].shape[0];
          if (needs_grad(part)) {
            auto dp = grad_slot(part, grads);
            for (std::size_t j = 0; j < len; ++j) dp[j] += g[offset + j];
          }
          offset += len;
        }
        break;
      }
      case Op::index_select: {
        if (!needs_grad(in[0])) break;
        const std::size_t width = nodes_[static_cast<std::size_t>(in[0])].shape[1];
        auto dt = grad_slot(in[0], grads);
        for (std::size_t r = 0; r < n.rows.size(); ++r) {
          for (std::size_t j = 0; j < width; ++j) dt[n.rows[r] * width + j] += g[r * width + j];
        }
        break;
      }
      case Op::weighted_sum: {
        for (std::size_t p = 0; p + 1 < in.size(); p += 2) {
          auto w = node_value(in[p]);
          auto v = node_value(in[p + 1]);
          if (needs_grad(in[p])) {
            double acc = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) acc += v[j] * g[j];
            grad_slot(in[p], grads)[0] += acc;
          }
          if (needs_grad(in[p + 1])) {
            auto dv = grad_slot(in[p + 1], grads);
            for (std::size_t j = 0; j < g.size(); ++j) dv[j] += w[0] * g[j];
          }
        }
        break;
      }
      case Op::scale: {
        auto s = node_value(in[0]);
        auto v = node_value(in[1]);
        if (needs_grad(in[0])) {
          double acc = 0.0;
          for (std::size_t j = 0; j < g.size(); ++j) acc += v[j] * g[j];
          grad_slot(in[0], grads)[0] += acc;
        }
        if (needs_grad(in[1])) {
          auto dv = grad_slot(in[1], grads);
          for (std::size_t j = 0; j < g.size(); ++j) dv[j] += s[0] * g[j];
        }
        break;
      }
      case Op::scale_const: {
        if (!needs_grad(in[0])) break;
        auto da = grad_slot(in[0], grads);
        for (std::size_t j = 0; j < g.size(); ++j) da[j] += n.factor * g[j];
        break;
      }
      case Op::slice: {
        if (!needs_grad(in[0])) break;
        auto da = grad_slot(in[0], grads);
        for (std::size_t j = 0; j < g.size(); ++j) da[n.aux + j] += g[j];
        break;
      }
      case Op::dot: {
        auto av = node_value(in[0]);
        auto bv = node_value(in[1]);
        if (needs_grad(in[0])) {
          auto da = grad_slot(in[0], grads);
          for (std::size_t j = 0; j < av.size(); ++j) da[j] += g[0] * bv[j];
        }
        if (needs_grad(in[1])) {
          auto db = grad_slot(in[1], grads);
          for (std::size_t j = 0; j < av.size(); ++j) db[j] += g[0] * av[j];
        }
        break;
      }
      case Op::cross_entropy: {
        if (!needs_grad(in[0])) break;
        auto l = node_value(in[0]);
        std::vector<double> p(l.size());
        softmax_rows(l, l.size(), p);
        p[n.aux] -= 1.0;
        auto dl = grad_slot(in[0], grads);
        for (std::size_t j = 0; j < p.size(); ++j) dl[j] += g[0] * p[j];
        break;
      }
      case Op::constant:
      case Op::parameter:
        break;
    }
  }
}

GradCheckReport grad_check(const ScalarFunction& f, ParameterSet& params, double step, double tolerance,
                           std::size_t max_per_group) {
  GradCheckReport report;
  report.tolerance = tolerance;

  Gradients analytic(params);
  {
    Graph g(&params);
    Var loss = f(g);
    g.backward(loss, analytic);
    report.kink_margin = g.kink_margin();
  }

  auto evaluate = [&]() {
    Graph g(&params);
    return g.scalar(f(g));
  };

  for (ParamId p = 0; p < params.size(); ++p) {
    GradCheckGroup group;
    group.name = params.name(p);
    const std::size_t n = params.value(p).size();
    const std::size_t count = (max_per_group == 0 || max_per_group >= n) ? n : max_per_group;
    for (std::size_t c = 0; c < count; ++c) {
      const std::size_t i = count == n ? c : (c * n) / count;
      double& x = params.value(p)[i];
      const double saved = x;
      x = saved + step;
      const double plus = evaluate();
      x = saved - step;
      const double minus = evaluate();
      x = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double err = std::abs(analytic[p][i] - numeric) / std::max(1.0, std::abs(numeric));
      group.max_rel_error = std::max(group.max_rel_error, err);
      ++group.checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, group.max_rel_error);
    report.groups.push_back(std::move(group));
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

}  // namespace stackrnn::ad
