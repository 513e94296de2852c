#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "adafnn/dataset.hpp"
#include "adafnn/errors.hpp"

namespace adafnn {

inline double mse(std::span<const double> predictions,
                  std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw data_error("mse: got " + std::to_string(predictions.size()) +
                     " predictions for " + std::to_string(targets.size()) +
                     " targets");
  }
  if (predictions.empty()) throw data_error("mse: no observations");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    double d = predictions[i] - targets[i];
    s += d * d;
  }
  return s / static_cast<double>(predictions.size());
}

// Probability that a random positive outranks a random negative, ties counted
// one half (the Mann-Whitney statistic). Computed from average ranks so tied
// groups of any size cost nothing extra.
inline double roc_auc(std::span<const double> scores,
                      std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw data_error("roc_auc: got " + std::to_string(scores.size()) +
                     " scores for " + std::to_string(labels.size()) +
                     " labels");
  }
  std::size_t positives = 0;
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) {
      throw data_error("roc_auc: label " + std::to_string(y) +
                       " is not 0 or 1");
    }
    if (y == 1.0) ++positives;
  }
  std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw data_error("roc_auc: need both classes, got " +
                     std::to_string(positives) + " positives out of " +
                     std::to_string(scores.size()));
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks are 1-based; everyone in the tied block gets the block average.
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1.0) positive_rank_sum += avg_rank;
    }
    i = j;
  }
  double np = static_cast<double>(positives);
  double nn = static_cast<double>(negatives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

// The lower-is-better convention shared by every results table: plain MSE
// for regression, 1 - AUC for classification (scores are logits; AUC only
// needs their order).
inline double evaluate_metric(Task task, std::span<const double> predictions,
                              std::span<const double> targets) {
  if (task == Task::regression) return mse(predictions, targets);
  return 1.0 - roc_auc(predictions, targets);
}

}  // namespace adafnn
