#include "stackrnn/controller.hpp"

#include <cmath>
#include <random>

#include "stackrnn/error.hpp"

namespace stackrnn {

std::string_view to_string(HeadMode mode) {
  switch (mode) {
    case HeadMode::fixed_one: return "fixed_one";
    case HeadMode::sigmoid: return "sigmoid";
    case HeadMode::expectation: return "expectation";
  }
  return "unknown";
}

std::string_view to_string(OutputMode mode) {
  return mode == OutputMode::lm_softmax ? "lm_softmax" : "binary_class";
}

HeadMode parse_head_mode(std::string_view text) {
  if (text == "fixed_one") return HeadMode::fixed_one;
  if (text == "sigmoid") return HeadMode::sigmoid;
  if (text == "expectation") return HeadMode::expectation;
  throw usage_error("unknown head mode: " + std::string(text));
}

OutputMode parse_output_mode(std::string_view text) {
  if (text == "lm_softmax") return OutputMode::lm_softmax;
  if (text == "binary_class") return OutputMode::binary_class;
  throw usage_error("unknown output mode: " + std::string(text));
}

void ControllerConfig::validate() const {
  if (vocab_size == 0) throw usage_error("config: vocab_size must be positive");
  if (embedding_dim == 0 || hidden_dim == 0 || stack_dim == 0) throw usage_error("config: dimensions must be positive");
  if (k < 1) throw usage_error("config: k must be at least 1");
  if (output_mode == OutputMode::binary_class && num_classes < 2) throw usage_error("config: need at least 2 classes");
  if (tie_embeddings && embedding_dim != hidden_dim) {
    throw usage_error("config: tied embeddings require embedding_dim == hidden_dim");
  }
}

double ControllerConfig::head_upper_bound(HeadMode mode) const {
  return mode == HeadMode::expectation ? static_cast<double>(k) : 1.0;
}

std::vector<std::string> preset_names() { return {"u1", "d1", "u-exp-d-sig", "lstm-baseline"}; }

ControllerConfig preset(std::string_view name) {
  ControllerConfig c;
  c.preset = std::string(name);
  if (name == "u1") {
    c.pop_mode = HeadMode::fixed_one;
    c.push_mode = HeadMode::expectation;
    c.read_mode = HeadMode::expectation;
  } else if (name == "d1") {
    c.pop_mode = HeadMode::expectation;
    c.push_mode = HeadMode::fixed_one;
    c.read_mode = HeadMode::expectation;
  } else if (name == "u-exp-d-sig") {
    c.pop_mode = HeadMode::expectation;
    c.push_mode = HeadMode::sigmoid;
    c.read_mode = HeadMode::expectation;
  } else if (name == "lstm-baseline") {
    c.use_stack = false;
  } else {
    throw usage_error("unknown preset: " + std::string(name));
  }
  return c;
}

std::vector<ControllerConfig> presets() {
  std::vector<ControllerConfig> out;
  for (const auto& n : preset_names()) out.push_back(preset(n));
  return out;
}

double expectation(std::span<const double> p) {
  if (p.empty()) throw usage_error("expectation: empty distribution");
  double total = 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0) throw usage_error("expectation: negative probability");
    total += p[i];
    mean += static_cast<double>(i) * p[i];
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw usage_error("expectation: probabilities sum to " + std::to_string(total) + ", expected 1");
  }
  return mean;
}

namespace {

Tensor uniform(Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  std::vector<double> data(shape_size(shape));
  for (double& x : data) x = dist(rng);
  return Tensor(std::move(shape), std::move(data));
}

struct Layout {
  std::vector<std::pair<std::string, Shape>> entries;
  void add(std::string name, Shape shape) { entries.emplace_back(std::move(name), std::move(shape)); }
};

void add_head(Layout& layout, const std::string& name, HeadMode mode, const ControllerConfig& c) {
  if (mode == HeadMode::fixed_one) return;
  const std::size_t out = mode == HeadMode::sigmoid ? 1 : c.k + 1;
  layout.add(name + ".weight", {out, c.hidden_dim});
  layout.add(name + ".bias", {out});
}

Layout layout_for(const ControllerConfig& c) {
  Layout l;
  const std::size_t input = c.embedding_dim + (c.use_stack ? c.stack_dim : 0) + c.hidden_dim;
  l.add("embedding", {c.vocab_size, c.embedding_dim});
  l.add("lstm.weight", {4 * c.hidden_dim, input});
  l.add("lstm.bias", {4 * c.hidden_dim});
  if (c.use_stack) {
    l.add("push_vector.weight", {c.stack_dim, c.hidden_dim});
    l.add("push_vector.bias", {c.stack_dim});
    add_head(l, "pop", c.pop_mode, c);
    add_head(l, "push", c.push_mode, c);
    add_head(l, "read", c.read_mode, c);
  }
  const std::size_t outputs = c.output_mode == OutputMode::lm_softmax ? c.vocab_size : c.num_classes;
  if (!(c.output_mode == OutputMode::lm_softmax && c.tie_embeddings)) l.add("output.weight", {outputs, c.hidden_dim});
  l.add("output.bias", {outputs});
  return l;
}

}  // namespace

StackRnn::StackRnn(ControllerConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  for (auto& [name, shape] : layout_for(config_).entries) {
    Tensor t = uniform(shape, rng);
    if (name == "lstm.bias") {
      // Gate order is input, forget, cell, output.
      for (std::size_t i = config_.hidden_dim; i < 2 * config_.hidden_dim; ++i) t[i] = 1.0;
    }
    params_.add(name, std::move(t));
  }
  bind_parameters();
}

StackRnn::StackRnn(ControllerConfig config, ad::ParameterSet params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const auto layout = layout_for(config_);
  if (layout.entries.size() != params_.size()) throw data_error("checkpoint parameters do not match config");
  for (std::size_t i = 0; i < layout.entries.size(); ++i) {
    const auto& [name, shape] = layout.entries[i];
    if (params_.name(i) != name || params_.value(i).shape() != shape) {
      throw data_error("checkpoint parameter " + params_.name(i) + " does not match expected " + name + " " +
                       shape_string(shape));
    }
  }
  bind_parameters();
}

void StackRnn::bind_parameters() {
  auto id = [this](const std::string& name) { return params_.find(name); };
  embedding_ = *id("embedding");
  lstm_weight_ = *id("lstm.weight");
  lstm_bias_ = *id("lstm.bias");
  auto head = [&](const std::string& name) { return Head{id(name + ".weight"), id(name + ".bias")}; };
  push_vector_ = head("push_vector");
  pop_head_ = head("pop");
  push_head_ = head("push");
  read_head_ = head("read");
  output_weight_ = id("output.weight").value_or(embedding_);
  output_bias_ = *id("output.bias");
}

ControllerState StackRnn::initial_state(ad::Graph& g) const {
  ControllerState s;
  s.h = g.constant(Tensor({config_.hidden_dim}));
  s.c = g.constant(Tensor({config_.hidden_dim}));
  s.stack = stack::empty_state<stack::GraphBackend>(config_.stack_dim);
  s.last_read = g.constant(Tensor({config_.stack_dim}));
  return s;
}

ad::Var StackRnn::head_value(ad::Graph& g, const Head& head, HeadMode mode, ad::Var output,
                             ad::Var* distribution) const {
  if (mode == HeadMode::fixed_one) return g.constant(1.0);
  ad::Var pre = g.add(g.matmul(g.parameter(*head.weight), output), g.parameter(*head.bias));
  if (mode == HeadMode::sigmoid) return g.sigmoid(pre);
  ad::Var p = g.softmax(pre);
  if (distribution) *distribution = p;
  std::vector<double> support(config_.k + 1);
  for (std::size_t i = 0; i <= config_.k; ++i) support[i] = static_cast<double>(i);
  return g.dot(p, g.constant(Tensor::vector(std::move(support))));
}

InstructionOutput StackRnn::compute_instructions(ad::Graph& g, ad::Var output) const {
  if (g.shape(output) != Shape{config_.hidden_dim}) {
    throw Error(ErrorKind::shape, "compute_instructions: output has shape " + shape_string(g.shape(output)));
  }
  InstructionOutput out;
  auto& in = out.instructions;
  in.push_vector =
      g.tanh(g.add(g.matmul(g.parameter(*push_vector_.weight), output), g.parameter(*push_vector_.bias)));
  in.pop_strength = head_value(g, pop_head_, config_.pop_mode, output, &out.pop_distribution);
  in.push_strength = head_value(g, push_head_, config_.push_mode, output, &out.push_distribution);
  in.read_strength = head_value(g, read_head_, config_.read_mode, output, &out.read_distribution);
  return out;
}

StepOutput StackRnn::step(ad::Graph& g, const ControllerState& state, TokenId token) const {
  if (token >= config_.vocab_size) {
    throw usage_error("unknown token id " + std::to_string(token) + " (vocab size " +
                      std::to_string(config_.vocab_size) + ")");
  }
  const std::size_t H = config_.hidden_dim;
  ad::Var emb = g.index_select(g.parameter(embedding_), token);
  std::vector<ad::Var> parts{emb};
  if (config_.use_stack) parts.push_back(state.last_read);
  parts.push_back(state.h);
  ad::Var x = g.concat(parts);
  ad::Var gates = g.add(g.matmul(g.parameter(lstm_weight_), x), g.parameter(lstm_bias_));
  ad::Var in_gate = g.sigmoid(g.slice(gates, 0, H));
  ad::Var forget = g.sigmoid(g.slice(gates, H, H));
  ad::Var cell = g.tanh(g.slice(gates, 2 * H, H));
  ad::Var out_gate = g.sigmoid(g.slice(gates, 3 * H, H));

  StepOutput result;
  result.state.c = g.add(g.mul(forget, state.c), g.mul(in_gate, cell));
  result.state.h = g.mul(out_gate, g.tanh(result.state.c));
  result.output = result.state.h;
  result.trace.token = token;

  if (!config_.use_stack) {
    result.state.stack = state.stack;
    result.state.last_read = state.last_read;
    return result;
  }

  const InstructionOutput instr = compute_instructions(g, result.output);
  const auto& in = instr.instructions;
  const stack::GraphBackend backend{&g};
  auto next = stack::pop(backend, state.stack, in.pop_strength);
  // Cells emptied by this pop carry no value or gradient forward.
  next = stack::compact(backend, std::move(next));
  next = stack::push(backend, std::move(next), in.push_vector, in.push_strength);
  result.state.last_read = stack::read(backend, next, in.read_strength);
  result.state.stack = std::move(next);

  auto& t = result.trace;
  t.pop = g.scalar(in.pop_strength);
  t.push = g.scalar(in.push_strength);
  t.read = g.scalar(in.read_strength);
  t.total_strength = stack::total_strength(backend, result.state.stack);
  auto dist = [&](ad::Var v) {
    if (!v.valid()) return std::vector<double>{};
    auto val = g.value(v);
    return std::vector<double>(val.begin(), val.end());
  };
  t.pop_distribution = dist(instr.pop_distribution);
  t.push_distribution = dist(instr.push_distribution);
  t.read_distribution = dist(instr.read_distribution);
  return result;
}

SequenceOutput StackRnn::run(ad::Graph& g, std::span<const TokenId> tokens) const {
  SequenceOutput out;
  out.outputs.reserve(tokens.size());
  out.traces.reserve(tokens.size());
  ControllerState state = initial_state(g);
  for (TokenId t : tokens) {
    StepOutput s = step(g, state, t);
    out.outputs.push_back(s.output);
    out.traces.push_back(std::move(s.trace));
    state = std::move(s.state);
  }
  out.final_state = std::move(state);
  return out;
}

ad::Var StackRnn::logits(ad::Graph& g, ad::Var output) const {
  return g.add(g.matmul(g.parameter(output_weight_), output), g.parameter(output_bias_));
}

}  // namespace stackrnn
