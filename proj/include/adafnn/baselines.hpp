#pragma once

#include <optional>
#include <string>
#include <utility>

#include "adafnn/bspline.hpp"
#include "adafnn/dataset.hpp"
#include "adafnn/errors.hpp"
#include "adafnn/fpca.hpp"
#include "adafnn/grid.hpp"
#include "adafnn/matrix.hpp"

namespace adafnn {

enum class FeatureKind { raw, bspline, fpca };

inline const char* feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::raw: return "raw";
    case FeatureKind::bspline: return "bspline";
    default: return "fpca";
  }
}

inline FeatureKind feature_kind_from_name(const std::string& name) {
  if (name == "raw") return FeatureKind::raw;
  if (name == "bspline") return FeatureKind::bspline;
  if (name == "fpca") return FeatureKind::fpca;
  throw config_error("unknown feature kind: " + name);
}

// Fixed featurization in front of a feed-forward head: the discretized
// curve itself, its spline coefficients, or its principal component
// scores. The spline and score variants are fitted once (to the grid, or
// to the training set) and then applied unchanged to every split.
class Featurizer {
 public:
  static Featurizer raw(const Grid& grid) {
    Featurizer f(FeatureKind::raw);
    f.grid_ = grid;
    return f;
  }

  static Featurizer bspline(const Grid& grid, std::size_t num_basis,
                            std::size_t degree = 3) {
    Featurizer f(FeatureKind::bspline);
    f.spline_.emplace(grid, num_basis, degree);
    return f;
  }

  static Featurizer fpca(const FunctionalDataset& train, double fve_threshold,
                         RuleKind rule = RuleKind::trapezoid) {
    Featurizer f(FeatureKind::fpca);
    f.pca_ = fpca_fit(train, fve_threshold, rule);
    return f;
  }

  // Rebuilds the score variant from an already fitted decomposition, as
  // happens when a checkpoint is loaded.
  static Featurizer fpca(FpcaModel model) {
    Featurizer f(FeatureKind::fpca);
    f.pca_ = std::move(model);
    return f;
  }

  FeatureKind kind() const { return kind_; }

  std::size_t dim() const {
    switch (kind_) {
      case FeatureKind::raw: return grid_->size();
      case FeatureKind::bspline: return spline_->size();
      default: return pca_->num_components();
    }
  }

  const Grid& grid() const {
    switch (kind_) {
      case FeatureKind::raw: return *grid_;
      case FeatureKind::bspline: return spline_->grid();
      default: return pca_->rule.grid;
    }
  }

  const BSplineBasis& spline() const { return *spline_; }
  const FpcaModel& pca() const { return *pca_; }

  // Feature matrix for a dataset, one column per sample.
  Matrix features(const FunctionalDataset& data) const {
    data.validate();
    if (!(data.grid == grid())) {
      throw data_error("dataset grid does not match the featurizer grid");
    }
    const std::size_t n = data.size();
    Matrix out(dim(), n);
    switch (kind_) {
      case FeatureKind::raw:
        for (std::size_t i = 0; i < n; ++i) {
          const std::vector<double>& v = data.samples[i].values;
          for (std::size_t j = 0; j < v.size(); ++j) out(j, i) = v[j];
        }
        break;
      case FeatureKind::bspline:
        for (std::size_t i = 0; i < n; ++i) {
          std::vector<double> c = spline_->fit(data.samples[i].values);
          for (std::size_t k = 0; k < c.size(); ++k) out(k, i) = c[k];
        }
        break;
      default: {
        Matrix scores = fpca_scores(*pca_, data);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t k = 0; k < scores.cols(); ++k) {
            out(k, i) = scores(i, k);
          }
        }
        break;
      }
    }
    return out;
  }

 private:
  explicit Featurizer(FeatureKind kind) : kind_(kind) {}

  FeatureKind kind_;
  std::optional<Grid> grid_;
  std::optional<BSplineBasis> spline_;
  std::optional<FpcaModel> pca_;
};

}  // namespace adafnn
