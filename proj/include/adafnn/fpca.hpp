#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "adafnn/dataset.hpp"
#include "adafnn/eigen.hpp"
#include "adafnn/errors.hpp"
#include "adafnn/grid.hpp"
#include "adafnn/matrix.hpp"

namespace adafnn {

// Functional principal components fitted on a training set: mean curve,
// quadrature-orthonormal eigenfunctions and their eigenvalues, truncated at
// the smallest K whose fraction of variation explained reaches the threshold.
struct FpcaModel {
  QuadratureRule rule;
  double fve_threshold = 0.0;
  std::vector<double> mean;
  std::vector<double> eigenvalues;  // non-increasing, positive
  Matrix eigenfunctions;            // row k holds psi_k on the grid
  double total_variance = 0.0;      // sum over all positive eigenvalues

  std::size_t num_components() const { return eigenvalues.size(); }

  double fve() const {
    double s = 0.0;
    for (double v : eigenvalues) s += v;
    return s / total_variance;
  }
};

// Eigendecomposition of the empirical covariance on the grid, taken against
// the quadrature inner product. The generalized problem C W psi = lambda psi
// is symmetrized as (W^1/2 C W^1/2) u = lambda u with psi = W^-1/2 u, which
// keeps the solve on a symmetric matrix for any positive weights.
inline FpcaModel fpca_fit(const FunctionalDataset& data, double fve_threshold,
                          RuleKind kind = RuleKind::trapezoid) {
  if (!(fve_threshold > 0.0) || fve_threshold > 1.0) {
    throw config_error("fpca_fit: FVE threshold must lie in (0, 1], got " +
                       std::to_string(fve_threshold));
  }
  data.validate();
  const std::size_t n = data.samples.size();
  const std::size_t m = data.grid.size();
  if (n < 2) {
    throw data_error("fpca_fit: need at least 2 samples, got " +
                     std::to_string(n));
  }
  QuadratureRule rule = make_quadrature(data.grid, kind);
  for (double w : rule.weights) {
    if (!(w > 0.0)) {
      throw config_error("fpca_fit: quadrature weights must be strictly "
                         "positive; the rectangle rule's trailing zero weight "
                         "makes the weighted eigenproblem singular");
    }
  }

  FpcaModel model{std::move(rule), fve_threshold, {}, {}, {}, 0.0};
  model.mean.assign(m, 0.0);
  for (const FunctionalSample& s : data.samples) {
    for (std::size_t j = 0; j < m; ++j) model.mean[j] += s.values[j];
  }
  for (double& v : model.mean) v /= static_cast<double>(n);

  Matrix centered(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double>& x = data.samples[i].values;
    double* row = centered.row(i);
    for (std::size_t j = 0; j < m; ++j) row[j] = x[j] - model.mean[j];
  }
  Matrix cov(m, m);
  matmul_tn_acc(centered, centered, cov);
  for (double& v : cov.storage()) v /= static_cast<double>(n);

  std::vector<double> sqrt_w(m);
  for (std::size_t j = 0; j < m; ++j) sqrt_w[j] = std::sqrt(model.rule.weights[j]);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t l = 0; l < m; ++l) cov(j, l) *= sqrt_w[j] * sqrt_w[l];
  }

  EigenDecomposition eig = symmetric_eigen(cov);
  double top = eig.values.empty() ? 0.0 : eig.values.front();
  if (!(top > 0.0)) {
    throw data_error("fpca_fit: covariance has no positive eigenvalues; the "
                     "curves are all identical");
  }
  std::size_t positive = 0;
  double total = 0.0;
  while (positive < eig.values.size() && eig.values[positive] > 1e-12 * top) {
    total += eig.values[positive];
    ++positive;
  }
  model.total_variance = total;

  std::size_t k = positive;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < positive; ++i) {
    cumulative += eig.values[i];
    if (cumulative / total >= fve_threshold) {
      k = i + 1;
      break;
    }
  }

  model.eigenvalues.assign(eig.values.begin(), eig.values.begin() + k);
  model.eigenfunctions = Matrix(k, m);
  for (std::size_t i = 0; i < k; ++i) {
    double* psi = model.eigenfunctions.row(i);
    for (std::size_t j = 0; j < m; ++j) psi[j] = eig.vectors(j, i) / sqrt_w[j];
    double norm = l2_norm(std::span<const double>(psi, m), model.rule);
    for (std::size_t j = 0; j < m; ++j) psi[j] /= norm;
    // Sign convention: the entry of largest magnitude is positive, so dumps
    // and comparisons are reproducible.
    double peak = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (std::abs(psi[j]) > std::abs(peak)) peak = psi[j];
    }
    if (peak < 0.0) {
      for (std::size_t j = 0; j < m; ++j) psi[j] = -psi[j];
    }
  }
  return model;
}

// Principal-component scores of one curve: <X - mu, psi_k> under the model's
// quadrature.
inline std::vector<double> fpca_scores(const FpcaModel& model,
                                       std::span<const double> values) {
  const std::size_t m = model.rule.grid.size();
  if (values.size() != m) {
    throw data_error("fpca_scores: curve has " + std::to_string(values.size()) +
                     " values, model grid has " + std::to_string(m));
  }
  std::vector<double> centered(m);
  for (std::size_t j = 0; j < m; ++j) centered[j] = values[j] - model.mean[j];
  std::vector<double> scores(model.num_components());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    std::span<const double> psi(model.eigenfunctions.row(k), m);
    scores[k] = inner_product(centered, psi, model.rule);
  }
  return scores;
}

// Score matrix for a whole dataset, one row per sample.
inline Matrix fpca_scores(const FpcaModel& model, const FunctionalDataset& data) {
  if (!(data.grid == model.rule.grid)) {
    throw data_error("fpca_scores: dataset grid differs from the grid the "
                     "model was fitted on");
  }
  Matrix scores(data.samples.size(), model.num_components());
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    std::vector<double> s = fpca_scores(model, data.samples[i].values);
    for (std::size_t k = 0; k < s.size(); ++k) scores(i, k) = s[k];
  }
  return scores;
}

// Curve implied by a score vector: mean plus the truncated eigenexpansion.
inline std::vector<double> fpca_reconstruct(const FpcaModel& model,
                                            std::span<const double> scores) {
  if (scores.size() != model.num_components()) {
    throw data_error("fpca_reconstruct: expected " +
                     std::to_string(model.num_components()) +
                     " scores, got " + std::to_string(scores.size()));
  }
  std::vector<double> out(model.mean);
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const double* psi = model.eigenfunctions.row(k);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += scores[k] * psi[j];
  }
  return out;
}

}  // namespace adafnn
