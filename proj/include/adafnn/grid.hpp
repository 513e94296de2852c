#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adafnn/errors.hpp"

namespace adafnn {

// Observation grid t_1 < t_2 < ... < t_{J+1} inside [0, 1]. All functional
// data in this library lives on a shared grid; curves are represented by
// their values at these points and integrals are replaced by quadrature
// sums against the grid.
class Grid {
 public:
  explicit Grid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 3) {
      throw data_error("grid needs at least 3 points, got " +
                       std::to_string(points_.size()));
    }
    for (std::size_t j = 0; j < points_.size(); ++j) {
      double t = points_[j];
      if (!std::isfinite(t) || t < 0.0 || t > 1.0) {
        throw data_error("grid point " + std::to_string(j) +
                         " outside [0,1]: " + std::to_string(t));
      }
      if (j > 0 && !(points_[j - 1] < t)) {
        throw data_error("grid points must be strictly increasing at index " +
                         std::to_string(j));
      }
    }
  }

  // J+1 equally spaced points covering [0, 1].
  static Grid uniform(std::size_t intervals) {
    if (intervals < 2) throw data_error("uniform grid needs >= 2 intervals");
    std::vector<double> pts(intervals + 1);
    for (std::size_t j = 0; j <= intervals; ++j) {
      pts[j] = static_cast<double>(j) / static_cast<double>(intervals);
    }
    return Grid(std::move(pts));
  }

  const std::vector<double>& points() const { return points_; }
  double operator[](std::size_t j) const { return points_[j]; }

  // Number of observation points, J + 1.
  std::size_t size() const { return points_.size(); }
  // Number of intervals, J.
  std::size_t intervals() const { return points_.size() - 1; }

  double front() const { return points_.front(); }
  double back() const { return points_.back(); }

  bool operator==(const Grid& other) const { return points_ == other.points_; }

 private:
  std::vector<double> points_;
};

enum class RuleKind { trapezoid, rectangle };

inline const char* rule_name(RuleKind kind) {
  return kind == RuleKind::trapezoid ? "trapezoid" : "rectangle";
}

inline RuleKind rule_from_name(const std::string& name) {
  if (name == "trapezoid") return RuleKind::trapezoid;
  if (name == "rectangle") return RuleKind::rectangle;
  throw config_error("unknown quadrature rule: " + name);
}

// Quadrature weights attached to a grid, so that
//   integral(f) ~ sum_j w_j f(t_j).
// Trapezoid weights are strictly positive. Rectangle weights are the left
// interval widths, which leaves the final point with weight zero; code that
// requires strictly positive weights (functional PCA) must use trapezoid.
struct QuadratureRule {
  Grid grid;
  std::vector<double> weights;
  RuleKind kind;

  std::size_t size() const { return weights.size(); }
  double weight_sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

// Builds the weights for the given rule on the given grid.
//
// Trapezoid on a general grid: w_j = (t_{j+1} - t_{j-1}) / 2 for interior
// points and half the adjacent interval at the two ends. On a uniform grid
// over [0,1] with J intervals this reduces to 1/(2J) at the ends and 1/J
// inside. Rectangle: w_j = t_{j+1} - t_j, and 0 for the last point.
inline QuadratureRule make_quadrature(const Grid& grid, RuleKind kind) {
  const std::vector<double>& t = grid.points();
  std::size_t m = t.size();
  std::vector<double> w(m, 0.0);
  if (kind == RuleKind::trapezoid) {
    w[0] = (t[1] - t[0]) / 2.0;
    w[m - 1] = (t[m - 1] - t[m - 2]) / 2.0;
    for (std::size_t j = 1; j + 1 < m; ++j) {
      w[j] = (t[j + 1] - t[j - 1]) / 2.0;
    }
  } else {
    for (std::size_t j = 0; j + 1 < m; ++j) {
      w[j] = t[j + 1] - t[j];
    }
  }
  return QuadratureRule{grid, std::move(w), kind};
}

// Quadrature approximation of the L2 inner product <a, b> for two curves
// sampled on the rule's grid.
inline double inner_product(std::span<const double> a, std::span<const double> b,
                            const QuadratureRule& rule) {
  if (a.size() != rule.size() || b.size() != rule.size()) {
    throw data_error("inner_product: length mismatch, got " +
                     std::to_string(a.size()) + " and " +
                     std::to_string(b.size()) + " on a grid of " +
                     std::to_string(rule.size()));
  }
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    s += rule.weights[j] * a[j] * b[j];
  }
  return s;
}

inline double l2_norm(std::span<const double> a, const QuadratureRule& rule) {
  return std::sqrt(inner_product(a, a, rule));
}

}  // namespace adafnn
