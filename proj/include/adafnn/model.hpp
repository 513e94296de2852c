#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adafnn/dataset.hpp"
#include "adafnn/errors.hpp"
#include "adafnn/grid.hpp"
#include "adafnn/matrix.hpp"
#include "adafnn/micronet.hpp"
#include "adafnn/rng.hpp"
#include "adafnn/tape.hpp"

namespace adafnn {

// Unordered index pairs (i, j), i < j, drawn without replacement. Used to
// subsample the basis pairs entering the orthogonality penalty so its cost
// stays linear in the number of sampled pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(
    std::size_t d, std::size_t count, Rng& rng) {
  if (d < 2) throw config_error("sample_pairs: need at least 2 bases");
  std::vector<std::pair<std::size_t, std::size_t>> all;
  all.reserve(d * (d - 1) / 2);
  for (std::size_t i = 0; i + 1 < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) all.emplace_back(i, j);
  }
  if (count >= all.size()) return all;
  // Partial Fisher-Yates: the first `count` slots end up a uniform sample.
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t j = k + static_cast<std::size_t>(rng.below(all.size() - k));
    std::swap(all[k], all[j]);
  }
  all.resize(count);
  return all;
}

// Mean absolute cosine between the sampled pairs of basis rows:
//   (1/|pairs|) sum |<b_i, b_j>| / (||b_i|| ||b_j||)
// under the quadrature inner product. Pairs with a numerically zero norm
// contribute the worst case value 1 so collapse is never rewarded.
inline double orthogonality_penalty(
    const Matrix& bases, const QuadratureRule& rule,
    std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  for (auto [i, j] : pairs) {
    std::span<const double> bi(bases.row(i), bases.cols());
    std::span<const double> bj(bases.row(j), bases.cols());
    double ni = l2_norm(bi, rule);
    double nj = l2_norm(bj, rule);
    if (ni < 1e-12 || nj < 1e-12) {
      total += 1.0;
      continue;
    }
    total += std::abs(inner_product(bi, bj, rule)) / (ni * nj);
  }
  return total / static_cast<double>(pairs.size());
}

// Mean quadrature L1 norm over the penalized subset of basis rows:
//   (1/|subset|) sum_i integral |b_i|.
inline double sparsity_penalty(const Matrix& bases, const QuadratureRule& rule,
                               std::span<const std::size_t> subset) {
  if (subset.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i : subset) {
    std::span<const double> bi(bases.row(i), bases.cols());
    double s = 0.0;
    for (std::size_t k = 0; k < bi.size(); ++k) {
      s += rule.weights[k] * std::abs(bi[k]);
    }
    total += s;
  }
  return total / static_cast<double>(subset.size());
}

struct RegularizerConfig {
  double lambda1 = 0.0;             // orthogonality strength
  double lambda2 = 0.0;             // sparsity strength
  std::size_t pairs_per_batch = 10; // pair subsample size for lambda1
  std::vector<std::size_t> sparsity_subset;  // empty means all bases
};

// Composition of losses evaluated for one batch; total is what gradients
// are taken of.
struct LossBreakdown {
  double base = 0.0;
  double orthogonality = 0.0;
  double sparsity = 0.0;
  double total = 0.0;
};

// Functional network with a learned basis layer. Each of the d basis
// functions is a small scalar-to-scalar network; a curve X is reduced to d
// scores by quadrature,
//   score_i = sum_j w_j basis_i(t_j) X(t_j),
// and a feed-forward head maps the score vector to the prediction. For
// binary classification the head output is a logit.
class BasisNetModel {
 public:
  BasisNetModel() = default;

  BasisNetModel(std::size_t num_bases, std::vector<LayerSpec> basis_spec,
                std::vector<LayerSpec> head_spec, RegularizerConfig reg,
                Task task, Rng init_rng)
      : reg_(std::move(reg)), task_(task) {
    if (num_bases == 0) throw config_error("model needs at least one basis");
    if (basis_spec.empty() || basis_spec.back().width != 1) {
      throw config_error("basis networks must end in a single output");
    }
    if (head_spec.empty() || head_spec.back().width != 1) {
      throw config_error("head must end in a single output");
    }
    if (reg_.lambda1 < 0.0 || reg_.lambda2 < 0.0) {
      throw config_error("penalty strengths must be nonnegative");
    }
    if (reg_.lambda1 > 0.0 && num_bases < 2) {
      throw config_error("orthogonality penalty needs at least 2 bases");
    }
    if (reg_.lambda1 > 0.0 && reg_.pairs_per_batch == 0) {
      throw config_error("orthogonality penalty needs pairs_per_batch >= 1");
    }
    for (std::size_t i : reg_.sparsity_subset) {
      if (i >= num_bases) {
        throw config_error("sparsity subset index " + std::to_string(i) +
                           " out of range for " + std::to_string(num_bases) +
                           " bases");
      }
    }
    for (std::size_t k = 0; k < num_bases; ++k) {
      Rng r = init_rng.derive(k);
      bases_.emplace_back(1, basis_spec, r);
    }
    Rng r = init_rng.derive("head");
    head_ = MicroNet(num_bases, head_spec, r);
  }

  std::size_t num_bases() const { return bases_.size(); }
  Task task() const { return task_; }
  const RegularizerConfig& regularizers() const { return reg_; }
  RegularizerConfig& regularizers() { return reg_; }
  std::vector<MicroNet>& basis_nets() { return bases_; }
  const std::vector<MicroNet>& basis_nets() const { return bases_; }
  MicroNet& head() { return head_; }
  const MicroNet& head() const { return head_; }

  std::vector<Param*> parameters() {
    std::vector<Param*> out;
    for (MicroNet& b : bases_) {
      for (Param* p : b.parameters()) out.push_back(p);
    }
    for (Param* p : head_.parameters()) out.push_back(p);
    return out;
  }

  // Values of every basis function on the grid, one row per basis.
  Matrix evaluate_bases(const Grid& grid) const {
    Matrix t(1, grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) t(0, j) = grid[j];
    Matrix out(bases_.size(), grid.size());
    for (std::size_t i = 0; i < bases_.size(); ++i) {
      Matrix row = bases_[i].forward_eval(t);
      for (std::size_t j = 0; j < grid.size(); ++j) out(i, j) = row(0, j);
    }
    return out;
  }

  // Taped variant used during training; the grid row is shared by the
  // whole batch so each basis network runs once per step.
  Var evaluate_bases(Tape& tape, const Grid& grid, Mode mode, Rng* rng) {
    Matrix t(1, grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) t(0, j) = grid[j];
    Var tv = tape.constant(std::move(t));
    std::vector<Var> rows;
    rows.reserve(bases_.size());
    for (MicroNet& b : bases_) {
      rows.push_back(b.forward(tape, tv, mode, rng));
    }
    return tape.concat_rows(rows);
  }

  // Scores for a batch of curves: columns of `curves` are samples on the
  // rule's grid. Returns (d x n).
  Matrix scores(const Matrix& curves, const QuadratureRule& rule) const {
    Matrix bases = evaluate_bases(rule.grid);
    Matrix weighted = curves;
    for (std::size_t j = 0; j < weighted.rows(); ++j) {
      double w = rule.weights[j];
      double* row = weighted.row(j);
      for (std::size_t n = 0; n < weighted.cols(); ++n) row[n] *= w;
    }
    Matrix out;
    matmul(bases, weighted, out);
    return out;
  }

  // Prediction for one curve, eval mode. Classification returns the logit.
  double forward_pass(const FunctionalSample& sample,
                      const QuadratureRule& rule) const {
    if (sample.values.size() != rule.size()) {
      throw data_error("sample has " + std::to_string(sample.values.size()) +
                       " values on a grid of " + std::to_string(rule.size()));
    }
    Matrix curves(rule.size(), 1);
    for (std::size_t j = 0; j < rule.size(); ++j) curves(j, 0) = sample.values[j];
    Matrix s = scores(curves, rule);
    Matrix y = head_.forward_eval(s);
    return y(0, 0);
  }

  std::vector<double> predict(const FunctionalDataset& data,
                              const QuadratureRule& rule) const {
    if (!(data.grid == rule.grid)) {
      throw data_error("dataset grid does not match the quadrature grid");
    }
    Matrix curves(rule.size(), data.size());
    for (std::size_t n = 0; n < data.size(); ++n) {
      const FunctionalSample& s = data.samples[n];
      if (s.values.size() != rule.size()) {
        throw data_error("sample " + std::to_string(n) + " has " +
                         std::to_string(s.values.size()) + " values");
      }
      for (std::size_t j = 0; j < rule.size(); ++j) curves(j, n) = s.values[j];
    }
    Matrix s = scores(curves, rule);
    Matrix y = head_.forward_eval(s);
    std::vector<double> out(data.size());
    for (std::size_t n = 0; n < data.size(); ++n) out[n] = y(0, n);
    return out;
  }

  // Builds the full training graph for one batch and returns the total
  // loss node. The breakdown (base, penalties, total) is written to `parts`
  // if given. Pair subsampling for the orthogonality penalty draws from
  // `rng`, as do the dropout masks in train mode.
  Var total_loss(Tape& tape, const FunctionalDataset& data,
                 std::span<const std::size_t> batch, const QuadratureRule& rule,
                 Mode mode, Rng& rng, LossBreakdown* parts = nullptr) {
    if (batch.empty()) throw data_error("empty batch");
    Var bases = evaluate_bases(tape, rule.grid, mode, &rng);

    // Column n holds w .* X_n, so bases * weighted gives the score matrix.
    Matrix weighted(rule.size(), batch.size());
    std::vector<double> targets(batch.size());
    for (std::size_t n = 0; n < batch.size(); ++n) {
      const FunctionalSample& s = data.samples[batch[n]];
      if (s.values.size() != rule.size()) {
        throw data_error("sample " + std::to_string(batch[n]) + " has " +
                         std::to_string(s.values.size()) + " values");
      }
      if (!s.response) {
        throw data_error("sample " + std::to_string(batch[n]) + " is unlabeled");
      }
      for (std::size_t j = 0; j < rule.size(); ++j) {
        weighted(j, n) = rule.weights[j] * s.values[j];
      }
      targets[n] = *s.response;
    }
    Var score = tape.matmul_const(bases, std::move(weighted));
    Var pred = head_.forward(tape, score, mode, &rng);
    Var base = task_ == Task::regression
                   ? tape.mse_loss(pred, std::move(targets))
                   : tape.bce_logits_loss(pred, std::move(targets));

    std::vector<Var> terms{base};
    std::vector<double> coeffs{1.0};
    Var ortho{}, sparse{};
    bool has_ortho = false, has_sparse = false;
    if (reg_.lambda1 > 0.0) {
      auto pairs = sample_pairs(bases_.size(), reg_.pairs_per_batch, rng);
      ortho = orthogonality_term(tape, bases, rule, pairs);
      has_ortho = true;
      terms.push_back(ortho);
      coeffs.push_back(reg_.lambda1);
    }
    if (reg_.lambda2 > 0.0) {
      sparse = sparsity_term(tape, bases, rule);
      has_sparse = true;
      terms.push_back(sparse);
      coeffs.push_back(reg_.lambda2);
    }
    Var total = terms.size() == 1 ? base : tape.combine(terms, coeffs);

    if (parts) {
      parts->base = tape.scalar(base);
      parts->orthogonality = has_ortho ? tape.scalar(ortho) : 0.0;
      parts->sparsity = has_sparse ? tape.scalar(sparse) : 0.0;
      parts->total = tape.scalar(total);
    }
    if (!std::isfinite(tape.scalar(total))) {
      throw train_error("non-finite loss (base " +
                        std::to_string(tape.scalar(base)) + ")");
    }
    return total;
  }

 private:
  Var orthogonality_term(
      Tape& tape, Var bases, const QuadratureRule& rule,
      const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    std::vector<Var> terms;
    terms.reserve(pairs.size());
    for (auto [i, j] : pairs) {
      Var nii = tape.row_weighted_dot(bases, i, i, rule.weights);
      Var njj = tape.row_weighted_dot(bases, j, j, rule.weights);
      double denom2 = tape.scalar(nii) * tape.scalar(njj);
      if (denom2 < 1e-24) {
        // A collapsed basis gets the worst case cosine as a constant; there
        // is no useful direction to push a zero function in.
        terms.push_back(tape.constant(Matrix(1, 1, 1.0)));
        continue;
      }
      Var nij = tape.row_weighted_dot(bases, i, j, rule.weights);
      Var denom = tape.s_sqrt(tape.s_mul(nii, njj));
      terms.push_back(tape.s_div(tape.s_abs(nij), denom));
    }
    std::vector<double> coeffs(terms.size(), 1.0 / static_cast<double>(terms.size()));
    return tape.combine(terms, coeffs);
  }

  Var sparsity_term(Tape& tape, Var bases, const QuadratureRule& rule) {
    std::vector<std::size_t> subset = reg_.sparsity_subset;
    if (subset.empty()) {
      subset.resize(bases_.size());
      for (std::size_t i = 0; i < subset.size(); ++i) subset[i] = i;
    }
    std::vector<Var> terms;
    terms.reserve(subset.size());
    for (std::size_t i : subset) {
      terms.push_back(tape.row_weighted_abs_sum(bases, i, rule.weights));
    }
    std::vector<double> coeffs(terms.size(), 1.0 / static_cast<double>(terms.size()));
    return tape.combine(terms, coeffs);
  }

  std::vector<MicroNet> bases_;
  MicroNet head_;
  RegularizerConfig reg_;
  Task task_ = Task::regression;
};

}  // namespace adafnn
