#pragma once

#include <stdexcept>
#include <string>

namespace stackrnn {

// Category of a failure. The CLI maps these onto process exit codes.
enum class ErrorKind {
  usage,    // bad arguments or API preconditions
  data,     // malformed or missing input files
  shape,    // tensor shape mismatch
  numeric,  // NaN/Inf encountered
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error usage_error(const std::string& message) {
  return Error(ErrorKind::usage, message);
}

inline Error data_error(const std::string& message) {
  return Error(ErrorKind::data, message);
}

}  // namespace stackrnn
