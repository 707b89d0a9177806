#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stackrnn/autodiff.hpp"
#include "stackrnn/error.hpp"

// Differentiable stack with fractional-strength pop, push and read.
//
// The algorithms are written once against a small arithmetic backend so the
// same code runs on plain doubles (NumericBackend) and on autodiff graph nodes
// (GraphBackend). Cell 0 is the bottom, the last cell is the top.
namespace stackrnn::stack {

struct NumericBackend {
  using Scalar = double;
  using Vector = std::vector<double>;

  static double value(Scalar s) { return s; }
  static Scalar sub(Scalar a, Scalar b) { return a - b; }
  static Scalar relu(Scalar a) { return a > 0.0 ? a : 0.0; }
  static Scalar minimum(Scalar a, Scalar b) { return a <= b ? a : b; }
  static std::size_t dim(const Vector& v) { return v.size(); }
  static Vector weighted_sum(std::span<const Scalar> weights, std::span<const Vector> vectors, std::size_t dim) {
    Vector out(dim, 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      for (std::size_t j = 0; j < dim; ++j) out[j] += weights[i] * vectors[i][j];
    }
    return out;
  }
};

struct GraphBackend {
  using Scalar = ad::Var;
  using Vector = ad::Var;

  ad::Graph* graph;

  double value(Scalar s) const { return graph->scalar(s); }
  Scalar sub(Scalar a, Scalar b) const { return graph->sub(a, b); }
  Scalar relu(Scalar a) const { return graph->relu(a); }
  Scalar minimum(Scalar a, Scalar b) const { return graph->minimum(a, b); }
  std::size_t dim(const Vector& v) const { return graph->value(v).size(); }
  Vector weighted_sum(std::span<const Scalar> weights, std::span<const Vector> vectors, std::size_t dim) const {
    return graph->weighted_sum(weights, vectors, dim);
  }
};

template <class Backend>
struct BasicStackState {
  using Scalar = typename Backend::Scalar;
  using Vector = typename Backend::Vector;

  std::size_t dim = 0;
  std::vector<Vector> vectors;
  std::vector<Scalar> strengths;

  std::size_t depth() const { return strengths.size(); }
  bool empty() const { return strengths.empty(); }
};

template <class Backend>
struct ReadWeight {
  std::size_t cell;
  typename Backend::Scalar weight;
};

template <class Backend>
struct BasicInstructions {
  typename Backend::Vector push_vector;
  typename Backend::Scalar pop_strength;
  typename Backend::Scalar push_strength;
  typename Backend::Scalar read_strength;
};

template <class Backend>
struct BasicStepResult {
  BasicStackState<Backend> state;
  typename Backend::Vector read;
};

namespace detail {
inline void require_non_negative(double x, const char* what) {
  if (std::isnan(x)) throw Error(ErrorKind::numeric, std::string(what) + " strength is NaN");
  if (!(x >= 0.0)) throw usage_error(std::string(what) + " strength must be non-negative, got " + std::to_string(x));
}
}  // namespace detail

template <class Backend>
BasicStackState<Backend> empty_state(std::size_t dim) {
  BasicStackState<Backend> s;
  s.dim = dim;
  return s;
}

// Removes strength u from the top down. The cascade stops once the remaining
// pop strength is exactly zero, which leaves values and gradients unchanged.
template <class Backend>
BasicStackState<Backend> pop(const Backend& b, BasicStackState<Backend> state, typename Backend::Scalar u) {
  detail::require_non_negative(b.value(u), "pop");
  auto remaining = u;
  for (std::size_t i = state.depth(); i-- > 0;) {
    if (i + 1 != state.depth() && b.value(remaining) == 0.0) break;
    const auto cell = state.strengths[i];
    state.strengths[i] = b.relu(b.sub(cell, remaining));
    if (i > 0) remaining = b.relu(b.sub(remaining, cell));
  }
  return state;
}

template <class Backend>
BasicStackState<Backend> push(const Backend& b, BasicStackState<Backend> state, typename Backend::Vector v,
                              typename Backend::Scalar d) {
  if (b.dim(v) != state.dim) {
    throw Error(ErrorKind::shape, "push: vector has dimension " + std::to_string(b.dim(v)) + ", stack expects " +
                                      std::to_string(state.dim));
  }
  detail::require_non_negative(b.value(d), "push");
  state.vectors.push_back(std::move(v));
  state.strengths.push_back(d);
  return state;
}

// Per-cell read weights min(s[i], rho[i]) for the cells the read reaches,
// listed from the top down.
template <class Backend>
std::vector<ReadWeight<Backend>> read_weights(const Backend& b, const BasicStackState<Backend>& state,
                                              typename Backend::Scalar r) {
  detail::require_non_negative(b.value(r), "read");
  std::vector<ReadWeight<Backend>> out;
  auto rho = r;
  for (std::size_t i = state.depth(); i-- > 0;) {
    if (i + 1 != state.depth() && b.value(rho) == 0.0) break;
    out.push_back({i, b.minimum(state.strengths[i], rho)});
    if (i > 0) rho = b.relu(b.sub(rho, state.strengths[i]));
  }
  return out;
}

template <class Backend>
typename Backend::Vector read(const Backend& b, const BasicStackState<Backend>& state,
                              typename Backend::Scalar r) {
  const auto weights = read_weights(b, state, r);
  std::vector<typename Backend::Scalar> w;
  std::vector<typename Backend::Vector> v;
  w.reserve(weights.size());
  v.reserve(weights.size());
  for (const auto& rw : weights) {
    w.push_back(rw.weight);
    v.push_back(state.vectors[rw.cell]);
  }
  return b.weighted_sum(w, v, state.dim);
}

// Pop, then push, then read.
template <class Backend>
BasicStepResult<Backend> step(const Backend& b, const BasicStackState<Backend>& state,
                              const BasicInstructions<Backend>& in) {
  auto next = pop(b, state, in.pop_strength);
  next = push(b, std::move(next), in.push_vector, in.push_strength);
  auto r = read(b, next, in.read_strength);
  return {std::move(next), std::move(r)};
}

template <class Backend>
double total_strength(const Backend& b, const BasicStackState<Backend>& state) {
  double total = 0.0;
  for (const auto& s : state.strengths) total += b.value(s);
  return total;
}

// Drops cells whose strength is exactly zero. Future pops and reads are
// unaffected.
template <class Backend>
BasicStackState<Backend> compact(const Backend& b, BasicStackState<Backend> state) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < state.depth(); ++i) {
    if (b.value(state.strengths[i]) == 0.0) continue;
    if (out != i) {
      state.strengths[out] = state.strengths[i];
      state.vectors[out] = std::move(state.vectors[i]);
    }
    ++out;
  }
  state.strengths.resize(out);
  state.vectors.resize(out);
  return state;
}

// Plain-double stack.
using StackState = BasicStackState<NumericBackend>;
using Instructions = BasicInstructions<NumericBackend>;
using StepResult = BasicStepResult<NumericBackend>;

inline StackState empty_state_numeric(std::size_t dim) { return empty_state<NumericBackend>(dim); }
inline StackState pop(const StackState& s, double u) { return pop(NumericBackend{}, s, u); }
inline StackState push(const StackState& s, std::vector<double> v, double d) {
  return push(NumericBackend{}, s, std::move(v), d);
}
inline std::vector<double> read(const StackState& s, double r) { return read(NumericBackend{}, s, r); }
inline StepResult step(const StackState& s, const Instructions& in) { return step(NumericBackend{}, s, in); }
inline double total_strength(const StackState& s) { return total_strength(NumericBackend{}, s); }
inline StackState compact(const StackState& s) { return compact(NumericBackend{}, s); }
std::vector<double> read_weight_vector(const StackState& s, double r);

// Autodiff stack used by the controller.
using GraphStackState = BasicStackState<GraphBackend>;
using GraphInstructions = BasicInstructions<GraphBackend>;

}  // namespace stackrnn::stack
