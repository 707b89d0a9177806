#include "stackrnn/stack.hpp"

namespace stackrnn::stack {

std::vector<double> read_weight_vector(const StackState& s, double r) {
  std::vector<double> out(s.depth(), 0.0);
  for (const auto& rw : read_weights(NumericBackend{}, s, r)) out[rw.cell] = rw.weight;
  return out;
}

}  // namespace stackrnn::stack
