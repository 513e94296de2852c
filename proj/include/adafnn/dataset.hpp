#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "adafnn/errors.hpp"
#include "adafnn/grid.hpp"

namespace adafnn {

enum class Task { regression, binary_classification };

inline const char* task_name(Task task) {
  return task == Task::regression ? "regression" : "binary_classification";
}

inline Task task_from_name(const std::string& name) {
  if (name == "regression") return Task::regression;
  if (name == "binary_classification") return Task::binary_classification;
  throw config_error("unknown task: " + name);
}

// One functional observation: the curve values X(t_j) on the dataset grid,
// plus an optional scalar response. Unlabeled samples are allowed so that
// prediction-only data can flow through the same type.
struct FunctionalSample {
  std::vector<double> values;
  std::optional<double> response;
};

// A collection of samples observed on one shared grid.
struct FunctionalDataset {
  Grid grid;
  std::vector<FunctionalSample> samples;
  Task task = Task::regression;

  std::size_t size() const { return samples.size(); }

  // Checks the structural invariants: at least one sample, every curve has
  // one value per grid point, everything finite, and classification labels
  // restricted to {0, 1}.
  void validate() const {
    if (samples.empty()) throw data_error("dataset has no samples");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const FunctionalSample& s = samples[i];
      if (s.values.size() != grid.size()) {
        throw data_error("sample " + std::to_string(i) + " has " +
                         std::to_string(s.values.size()) +
                         " values on a grid of " + std::to_string(grid.size()));
      }
      for (double v : s.values) {
        if (!std::isfinite(v)) {
          throw data_error("sample " + std::to_string(i) +
                           " contains a non-finite value");
        }
      }
      if (s.response) {
        double y = *s.response;
        if (!std::isfinite(y)) {
          throw data_error("sample " + std::to_string(i) +
                           " has a non-finite response");
        }
        if (task == Task::binary_classification && y != 0.0 && y != 1.0) {
          throw data_error("sample " + std::to_string(i) +
                           " has label " + std::to_string(y) +
                           ", expected 0 or 1");
        }
      }
    }
  }

  bool fully_labeled() const {
    for (const FunctionalSample& s : samples) {
      if (!s.response) return false;
    }
    return !samples.empty();
  }

  std::vector<double> responses() const {
    std::vector<double> y;
    y.reserve(samples.size());
    for (const FunctionalSample& s : samples) {
      if (!s.response) throw data_error("dataset has unlabeled samples");
      y.push_back(*s.response);
    }
    return y;
  }
};

// Affine map between raw response units and the standardized units models
// are trained in. Kept with every checkpoint so predictions can be
// reported on the original scale.
struct ResponseScaler {
  double mean = 0.0;
  double sd = 1.0;

  double standardize(double y) const { return (y - mean) / sd; }
  double restore(double z) const { return mean + sd * z; }

  // Population moments (1/n) of the training responses. A constant response
  // column cannot be standardized and is rejected.
  static ResponseScaler fit(const std::vector<double>& y) {
    if (y.empty()) throw data_error("cannot fit a scaler to no responses");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size());
    if (var <= 0.0) throw data_error("responses are constant, cannot standardize");
    return ResponseScaler{mean, std::sqrt(var)};
  }
};

}  // namespace adafnn
