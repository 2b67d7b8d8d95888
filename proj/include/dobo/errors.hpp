#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dobo {

// Caller violated a documented precondition (bad dimension, index out of
// range, argument out of its admissible set).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numeric payload is malformed, typically a non-finite coordinate.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// The requested operation needs a capability the object does not provide,
// e.g. an analytic gradient or an analytic per-round minimizer.
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An experiment config failed validation. Carries one message per problem so
// front ends can report them all at once.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
  explicit ConfigError(const std::string& issue)
      : ConfigError(std::vector<std::string>{issue}) {}

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string all = "invalid config";
    for (const auto& is : issues) {
      all += "; ";
      all += is;
    }
    return all;
  }

  std::vector<std::string> issues_;
};

}  // namespace dobo
