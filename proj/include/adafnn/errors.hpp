#pragma once

#include <stdexcept>
#include <string>

namespace adafnn {

// Error categories used across the library. Each maps to a distinct process
// exit code in the command line driver, so keep the taxonomy small:
//
//   config_error  malformed or inconsistent configuration        (exit 2)
//   data_error    malformed, degenerate or mismatched data       (exit 3)
//   train_error   optimization failure, e.g. divergence          (exit 4)

struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct data_error : std::runtime_error {
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct train_error : std::runtime_error {
  explicit train_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace adafnn
