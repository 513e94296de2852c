#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "adafnn/errors.hpp"

namespace adafnn {

// Dense row-major matrix of doubles. Just enough linear algebra for the
// networks and the classical pipelines; all loops are laid out so the
// compiler can vectorize the innermost dimension.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  void fill(double v) {
    for (double& x : data_) x = v;
  }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  std::string shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// out = a * b. Shapes: (r x k) * (k x c) -> (r x c).
inline void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows()) {
    throw data_error("matmul: inner dimensions differ, " + a.shape_string() +
                     " * " + b.shape_string());
  }
  out = Matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double aik = arow[k];
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) {
        orow[j] += aik * brow[j];
      }
    }
  }
}

// out += a * b^T. Shapes: (r x k) * (c x k)^T -> (r x c).
inline void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols() || out.rows() != a.rows() || out.cols() != b.rows()) {
    throw data_error("matmul_nt_acc: shape mismatch, " + a.shape_string() +
                     " * " + b.shape_string() + "^T -> " + out.shape_string());
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) {
        s += arow[k] * brow[k];
      }
      orow[j] += s;
    }
  }
}

// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
// Throws data_error when a pivot collapses, which is how callers detect rank
// deficiency in normal equations.
inline Matrix cholesky_factor(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw data_error("cholesky_factor: matrix is " + a.shape_string() +
                     ", expected square");
  }
  const std::size_t n = a.rows();
  double diag_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (a(i, i) > diag_scale) diag_scale = a(i, i);
  }
  const double floor = 1e-12 * (diag_scale > 0.0 ? diag_scale : 1.0);
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= floor) {
          throw data_error("cholesky_factor: matrix is not positive definite "
                           "(pivot " + std::to_string(i) + ")");
        }
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

// Solves (L L^T) x = b given the lower Cholesky factor L.
inline std::vector<double> cholesky_solve(const Matrix& l,
                                          std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) {
    throw data_error("cholesky_solve: rhs length " + std::to_string(b.size()) +
                     " does not match factor size " + std::to_string(n));
  }
  std::vector<double> x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x[k];
    x[i] = s / l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

// out += a^T * b. Shapes: (k x r)^T * (k x c) -> (r x c).
inline void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
    throw data_error("matmul_tn_acc: shape mismatch, " + a.shape_string() +
                     "^T * " + b.shape_string() + " -> " + out.shape_string());
  }
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* arow = a.row(k);
    const double* brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      double aki = arow[i];
      double* orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) {
        orow[j] += aki * brow[j];
      }
    }
  }
}

}  // namespace adafnn
