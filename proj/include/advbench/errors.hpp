#pragma once

#include <stdexcept>
#include <string>

namespace advbench {

/// Invalid parameters, mismatched shapes, unsupported combinations.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent model bundles and dataset files.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised in strict mode when a sample is charged past its allocation.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& phase, const std::string& what)
      : std::runtime_error("budget exceeded in phase '" + phase + "': " + what), phase_(phase) {}

  const std::string& phase() const { return phase_; }

 private:
  std::string phase_;
};

}  // namespace advbench
