#pragma once

#include <stdexcept>
#include <string>

namespace crlab {

// Error classes map to distinct CLI exit codes (see tools/main.cpp).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a normalization baseline is flat (p_ST(N) == p_ST(0)).
struct DegenerateBaselineError : std::runtime_error {
  explicit DegenerateBaselineError(const std::string& msg) : std::runtime_error(msg) {}
};

struct BufferEmptyError : std::runtime_error {
  explicit BufferEmptyError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MissingCheckpointError : std::runtime_error {
  explicit MissingCheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace crlab
