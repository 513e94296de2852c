#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adafnn/dataset.hpp"
#include "adafnn/errors.hpp"
#include "adafnn/grid.hpp"
#include "adafnn/matrix.hpp"

namespace adafnn {

// Clamped B-spline basis of `num_basis` functions on [0, 1] with uniformly
// spaced interior knots, bound to an observation grid. The design matrix and
// the Cholesky factor of its normal equations are built once so fitting a
// curve is a pair of triangular solves.
class BSplineBasis {
 public:
  BSplineBasis(const Grid& grid, std::size_t num_basis, std::size_t degree = 3)
      : grid_(grid), num_basis_(num_basis), degree_(degree) {
    if (degree_ < 1) {
      throw config_error("BSplineBasis: degree must be at least 1");
    }
    if (num_basis_ < degree_ + 1) {
      throw config_error("BSplineBasis: " + std::to_string(num_basis_) +
                         " basis functions cannot support degree " +
                         std::to_string(degree_) + " (need at least " +
                         std::to_string(degree_ + 1) + ")");
    }
    if (grid_.size() < num_basis_) {
      throw config_error("BSplineBasis: grid with " +
                         std::to_string(grid_.size()) +
                         " points cannot identify " +
                         std::to_string(num_basis_) + " coefficients");
    }

    // Clamped knot vector: degree+1 copies of each endpoint around uniformly
    // spaced interior knots.
    std::size_t interior = num_basis_ - degree_ - 1;
    knots_.assign(degree_ + 1, 0.0);
    for (std::size_t i = 1; i <= interior; ++i) {
      knots_.push_back(static_cast<double>(i) /
                       static_cast<double>(interior + 1));
    }
    knots_.insert(knots_.end(), degree_ + 1, 1.0);

    design_ = Matrix(grid_.size(), num_basis_);
    for (std::size_t j = 0; j < grid_.size(); ++j) {
      evaluate_at(grid_[j], design_.row(j));
    }

    Matrix gram(num_basis_, num_basis_);
    matmul_tn_acc(design_, design_, gram);
    try {
      normal_factor_ = cholesky_factor(gram);
    } catch (const data_error&) {
      throw data_error(
          "BSplineBasis: design matrix is rank deficient; " +
          std::to_string(num_basis_) +
          " basis functions are too many for this grid's coverage");
    }
  }

  std::size_t size() const { return num_basis_; }
  std::size_t degree() const { return degree_; }
  const Grid& grid() const { return grid_; }
  const std::vector<double>& knots() const { return knots_; }
  const Matrix& design() const { return design_; }

  // All basis values at one point, written into out[0..num_basis).
  void evaluate_at(double t, double* out) const {
    for (std::size_t k = 0; k < num_basis_; ++k) out[k] = 0.0;
    std::size_t span = find_span(t);
    // Cox - de Boor triangle over the degree+1 functions alive on this span.
    std::vector<double> n(degree_ + 1, 0.0);
    std::vector<double> left(degree_ + 1, 0.0);
    std::vector<double> right(degree_ + 1, 0.0);
    n[0] = 1.0;
    for (std::size_t j = 1; j <= degree_; ++j) {
      left[j] = t - knots_[span + 1 - j];
      right[j] = knots_[span + j] - t;
      double saved = 0.0;
      for (std::size_t r = 0; r < j; ++r) {
        double temp = n[r] / (right[r + 1] + left[j - r]);
        n[r] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      n[j] = saved;
    }
    for (std::size_t r = 0; r <= degree_; ++r) {
      out[span - degree_ + r] = n[r];
    }
  }

  std::vector<double> evaluate_at(double t) const {
    std::vector<double> row(num_basis_, 0.0);
    evaluate_at(t, row.data());
    return row;
  }

  // Least-squares coefficients for one curve observed on the bound grid.
  std::vector<double> fit(std::span<const double> values) const {
    if (values.size() != grid_.size()) {
      throw data_error("BSplineBasis::fit: curve has " +
                       std::to_string(values.size()) + " values, grid has " +
                       std::to_string(grid_.size()));
    }
    std::vector<double> rhs(num_basis_, 0.0);
    for (std::size_t j = 0; j < grid_.size(); ++j) {
      const double* row = design_.row(j);
      double v = values[j];
      for (std::size_t k = 0; k < num_basis_; ++k) rhs[k] += row[k] * v;
    }
    return cholesky_solve(normal_factor_, rhs);
  }

  // Coefficient matrix for a whole dataset, one row per sample.
  Matrix fit_all(const FunctionalDataset& data) const {
    if (!(data.grid == grid_)) {
      throw data_error("BSplineBasis::fit_all: dataset grid differs from the "
                       "grid this basis was built on");
    }
    Matrix coef(data.samples.size(), num_basis_);
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
      std::vector<double> a = fit(data.samples[i].values);
      for (std::size_t k = 0; k < num_basis_; ++k) coef(i, k) = a[k];
    }
    return coef;
  }

  // Spline values on the bound grid for a coefficient vector.
  std::vector<double> reconstruct(std::span<const double> coef) const {
    if (coef.size() != num_basis_) {
      throw data_error("BSplineBasis::reconstruct: expected " +
                       std::to_string(num_basis_) + " coefficients, got " +
                       std::to_string(coef.size()));
    }
    std::vector<double> values(grid_.size(), 0.0);
    for (std::size_t j = 0; j < grid_.size(); ++j) {
      const double* row = design_.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < num_basis_; ++k) s += row[k] * coef[k];
      values[j] = s;
    }
    return values;
  }

 private:
  // Index i with knots[i] <= t < knots[i+1], clamped so the right endpoint
  // lands in the last real span.
  std::size_t find_span(double t) const {
    if (t < 0.0 || t > 1.0) {
      throw data_error("BSplineBasis: point " + std::to_string(t) +
                       " lies outside [0, 1]");
    }
    if (t >= 1.0) return num_basis_ - 1;
    std::size_t lo = degree_;
    std::size_t hi = num_basis_;
    while (lo + 1 < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (knots_[mid] <= t) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return lo;
  }

  Grid grid_;
  std::size_t num_basis_;
  std::size_t degree_;
  std::vector<double> knots_;
  Matrix design_;
  Matrix normal_factor_;
};

}  // namespace adafnn
