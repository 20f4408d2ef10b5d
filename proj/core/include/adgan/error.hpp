#pragma once

#include <stdexcept>
#include <string>

namespace adgan {

// Invalid configuration or manifest content; maps to CLI exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / decode failures; maps to CLI exit code 1.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape mismatch in graph construction.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss or parameter during training; maps to CLI exit code 2.
struct TrainAbort : std::runtime_error {
  explicit TrainAbort(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace adgan
