#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stackrnn/autodiff.hpp"
#include "stackrnn/stack.hpp"

namespace stackrnn {

using TokenId = std::size_t;

// How one scalar stack instruction is produced from the controller output.
enum class HeadMode {
  fixed_one,    // constant 1, no parameters
  sigmoid,      // sigma(w.o + b), in (0, 1)
  expectation,  // E[softmax(W o + b)] over {0..k}, in [0, k]
};

enum class OutputMode {
  lm_softmax,    // next-token distribution at every step
  binary_class,  // SG/PL logits from the final step
};

std::string_view to_string(HeadMode mode);
std::string_view to_string(OutputMode mode);
HeadMode parse_head_mode(std::string_view text);
OutputMode parse_output_mode(std::string_view text);

struct ControllerConfig {
  std::string preset = "custom";
  std::size_t vocab_size = 0;
  std::size_t embedding_dim = 50;
  std::size_t hidden_dim = 100;
  std::size_t stack_dim = 16;
  std::size_t k = 4;
  bool use_stack = true;
  HeadMode pop_mode = HeadMode::fixed_one;
  HeadMode push_mode = HeadMode::expectation;
  HeadMode read_mode = HeadMode::expectation;
  OutputMode output_mode = OutputMode::lm_softmax;
  std::size_t num_classes = 2;
  // Share the embedding table with the output softmax (needs
  // embedding_dim == hidden_dim).
  bool tie_embeddings = false;

  void validate() const;
  double head_upper_bound(HeadMode mode) const;

  friend bool operator==(const ControllerConfig&, const ControllerConfig&) = default;
};

// Named configurations. vocab_size and output_mode are filled in by the caller.
std::vector<std::string> preset_names();
ControllerConfig preset(std::string_view name);
std::vector<ControllerConfig> presets();

// Mean of p viewed as a distribution over {0, 1, ..., k}.
double expectation(std::span<const double> p);

struct StepTrace {
  TokenId token = 0;
  double pop = 0.0;
  double push = 0.0;
  double read = 0.0;
  double total_strength = 0.0;
  // k + 1 probabilities per expectation head; empty otherwise.
  std::vector<double> pop_distribution;
  std::vector<double> push_distribution;
  std::vector<double> read_distribution;
};

struct ControllerState {
  ad::Var h;
  ad::Var c;
  stack::GraphStackState stack;
  ad::Var last_read;
};

struct InstructionOutput {
  stack::GraphInstructions instructions;
  ad::Var pop_distribution;
  ad::Var push_distribution;
  ad::Var read_distribution;
};

struct StepOutput {
  ControllerState state;
  ad::Var output;  // o_t
  StepTrace trace;
};

struct SequenceOutput {
  std::vector<ad::Var> outputs;
  std::vector<StepTrace> traces;
  ControllerState final_state;
};

// LSTM controller coupled to the differentiable stack, or a plain LSTM when
// config.use_stack is false.
class StackRnn {
 public:
  StackRnn(ControllerConfig config, std::uint64_t seed);
  StackRnn(ControllerConfig config, ad::ParameterSet params);

  const ControllerConfig& config() const { return config_; }
  const ad::ParameterSet& parameters() const { return params_; }
  ad::ParameterSet& parameters() { return params_; }

  ControllerState initial_state(ad::Graph& g) const;
  InstructionOutput compute_instructions(ad::Graph& g, ad::Var output) const;
  StepOutput step(ad::Graph& g, const ControllerState& state, TokenId token) const;
  SequenceOutput run(ad::Graph& g, std::span<const TokenId> tokens) const;
  // Vocabulary logits (lm_softmax) or class logits (binary_class).
  ad::Var logits(ad::Graph& g, ad::Var output) const;

 private:
  struct Head {
    std::optional<ad::ParamId> weight;
    std::optional<ad::ParamId> bias;
  };

  void bind_parameters();
  ad::Var head_value(ad::Graph& g, const Head& head, HeadMode mode, ad::Var output, ad::Var* distribution) const;

  ControllerConfig config_;
  ad::ParameterSet params_;
  ad::ParamId embedding_ = 0;
  ad::ParamId lstm_weight_ = 0;
  ad::ParamId lstm_bias_ = 0;
  Head push_vector_;
  Head pop_head_;
  Head push_head_;
  Head read_head_;
  ad::ParamId output_weight_ = 0;
  ad::ParamId output_bias_ = 0;
};

// Checkpoint container: magic "STACKRNN1", a key/value config record, then
// named float32 tensors, all little-endian.
struct Checkpoint {
  ControllerConfig config;
  ad::ParameterSet parameters;
  std::vector<std::string> vocabulary;
};

void save_checkpoint(const std::string& path, const StackRnn& model, std::span<const std::string> vocabulary);
std::string encode_checkpoint(const StackRnn& model, std::span<const std::string> vocabulary);
Checkpoint decode_checkpoint(std::string_view bytes);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace stackrnn
