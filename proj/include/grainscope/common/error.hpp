#pragma once

#include <stdexcept>
#include <string>

namespace grainscope {

/// Invalid architecture, hyperparameters, flags or config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input data (images, CSV, checkpoints).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure while training (non-finite loss or gradient).
class TrainingFault : public std::runtime_error {
 public:
  TrainingFault(const std::string& what, int layer = -1)
      : std::runtime_error(what), layer_(layer) {}
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

// Process exit codes used by the CLI.
enum class ExitCode : int { ok = 0, usage = 1, config = 2, data = 3, runtime = 4 };

}  // namespace grainscope
