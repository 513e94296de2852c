#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "adafnn/errors.hpp"
#include "adafnn/matrix.hpp"

namespace adafnn {

// Eigenvalues in non-increasing order; column k of `vectors` is the unit
// eigenvector for values[k].
struct EigenDecomposition {
  std::vector<double> values;
  Matrix vectors;
};

// Dense symmetric eigensolver via cyclic Jacobi rotations. The matrices this
// library decomposes are covariance matrices on observation grids (a few
// hundred rows at most), where O(n^3) sweeps are perfectly adequate and the
// method's unconditional stability beats anything fancier.
inline EigenDecomposition symmetric_eigen(const Matrix& input) {
  if (input.rows() != input.cols()) {
    throw config_error("symmetric_eigen: matrix is " + input.shape_string() +
                       ", expected square");
  }
  const std::size_t n = input.rows();
  Matrix a = input;
  double asym = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      asym = std::max(asym, std::abs(a(i, j) - a(j, i)));
      scale = std::max(scale, std::abs(a(i, j)));
    }
    scale = std::max(scale, std::abs(a(i, i)));
  }
  if (asym > 1e-10 * std::max(scale, 1.0)) {
    throw config_error("symmetric_eigen: matrix is not symmetric");
  }
  // Work on the symmetrized copy so the sweep sees exact symmetry.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double m = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = m;
      a(j, i) = m;
    }
  }

  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  auto off_diagonal = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    }
    return std::sqrt(2.0 * s);
  };

  const double frob = [&]() {
    double s = 0.0;
    for (double x : a.storage()) s += x * x;
    return std::sqrt(s);
  }();
  const double tol = 1e-14 * std::max(frob, 1e-300);

  for (int sweep = 0; sweep < 64 && off_diagonal() > tol; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (apq == 0.0) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;

        double app = a(p, p);
        double aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          double akp = a(k, p);
          double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(p, k) = a(k, p);
          a(k, q) = s * akp + c * akq;
          a(q, k) = a(k, q);
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v(k, p);
          double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a(i, i) > a(j, j);
  });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

}  // namespace adafnn
