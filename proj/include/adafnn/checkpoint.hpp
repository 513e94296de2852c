#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adafnn/baselines.hpp"
#include "adafnn/dataset.hpp"
#include "adafnn/errors.hpp"
#include "adafnn/grid.hpp"
#include "adafnn/matrix.hpp"
#include "adafnn/micronet.hpp"
#include "adafnn/model.hpp"
#include "adafnn/rng.hpp"
#include "adafnn/train.hpp"

namespace adafnn {

// Checkpoints are JSON. Configuration scalars are stored as plain numbers;
// learned coefficients are stored as the hex form of their bit pattern so a
// save-load cycle reproduces every double exactly, independent of any
// decimal printing path.
inline std::string double_to_hex(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(bits));
  return buf;
}

inline double hex_to_double(const std::string& s) {
  if (s.size() != 16) {
    throw data_error("checkpoint value '" + s + "' is not a 16-digit hex word");
  }
  std::uint64_t bits = 0;
  for (char c : s) {
    int digit;
    if (c >= '0' && c <= '9') {
      digit = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      digit = c - 'a' + 10;
    } else {
      throw data_error("checkpoint value '" + s +
                       "' is not a 16-digit hex word");
    }
    bits = (bits << 4) | static_cast<std::uint64_t>(digit);
  }
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

namespace detail {

using nlohmann::json;

inline json doubles_to_json(std::span<const double> values) {
  json out = json::array();
  for (double v : values) out.push_back(double_to_hex(v));
  return out;
}

inline std::vector<double> doubles_from_json(const json& arr) {
  if (!arr.is_array()) throw data_error("checkpoint: expected an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const json& v : arr) out.push_back(hex_to_double(v.get<std::string>()));
  return out;
}

inline json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"data", doubles_to_json(m.storage())}};
}

inline Matrix matrix_from_json(const json& j) {
  std::size_t rows = j.at("rows").get<std::size_t>();
  std::size_t cols = j.at("cols").get<std::size_t>();
  std::vector<double> data = doubles_from_json(j.at("data"));
  if (data.size() != rows * cols) {
    throw data_error("checkpoint matrix has " + std::to_string(data.size()) +
                     " entries for shape " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  Matrix m(rows, cols);
  m.storage() = std::move(data);
  return m;
}

inline json specs_to_json(const std::vector<LayerSpec>& specs) {
  json out = json::array();
  for (const LayerSpec& s : specs) {
    out.push_back(
        {{"width", s.width},
         {"activation", activation_name(s.activation)},
         {"layer_norm", s.normalization == Normalization::layer_norm},
         {"dropout", s.dropout_rate},
         {"skip", s.skip}});
  }
  return out;
}

inline std::vector<LayerSpec> specs_from_json(const json& arr) {
  std::vector<LayerSpec> out;
  for (const json& j : arr) {
    LayerSpec s;
    s.width = j.at("width").get<std::size_t>();
    s.activation = activation_from_name(j.at("activation").get<std::string>());
    s.normalization = j.at("layer_norm").get<bool>()
                          ? Normalization::layer_norm
                          : Normalization::none;
    s.dropout_rate = j.at("dropout").get<double>();
    s.skip = j.at("skip").get<bool>();
    out.push_back(s);
  }
  return out;
}

inline json params_to_json(const std::vector<Param*>& params) {
  json out = json::array();
  for (const Param* p : params) out.push_back(matrix_to_json(p->value));
  return out;
}

inline void params_from_json(const json& arr, std::vector<Param*> params) {
  if (arr.size() != params.size()) {
    throw data_error("checkpoint holds " + std::to_string(arr.size()) +
                     " parameter blocks, the declared architecture has " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix m = matrix_from_json(arr[i]);
    if (m.rows() != params[i]->value.rows() ||
        m.cols() != params[i]->value.cols()) {
      throw data_error("checkpoint parameter block " + std::to_string(i) +
                       " has the wrong shape");
    }
    params[i]->value = std::move(m);
  }
}

inline json grid_to_json(const Grid& grid) {
  return doubles_to_json(grid.points());
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw data_error("'" + path + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw data_error("'" + path + "' is not a JSON object");
  return doc;
}

inline void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << doc.dump(1) << '\n';
  if (!out) throw data_error("write to '" + path + "' failed");
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, BasisNetModel& model,
                            const QuadratureRule& rule) {
  using detail::json;
  const RegularizerConfig& reg = model.regularizers();
  json doc{
      {"format", 1},
      {"kind", "adafnn"},
      {"task", task_name(model.task())},
      {"rule", rule_name(rule.kind)},
      {"grid", detail::grid_to_json(rule.grid)},
      {"num_bases", model.num_bases()},
      {"basis_spec", detail::specs_to_json(model.basis_nets()[0].specs())},
      {"head_spec", detail::specs_to_json(model.head().specs())},
      {"regularizers",
       {{"lambda1", reg.lambda1},
        {"lambda2", reg.lambda2},
        {"pairs_per_batch", reg.pairs_per_batch},
        {"sparsity_subset", reg.sparsity_subset}}},
      {"params", detail::params_to_json(model.parameters())},
  };
  detail::write_json_file(path, doc);
}

inline void save_checkpoint(const std::string& path, MicroNet& net,
                            const Featurizer& features, Task task,
                            RuleKind rule) {
  using detail::json;
  json feat{{"kind", feature_kind_name(features.kind())}};
  switch (features.kind()) {
    case FeatureKind::raw:
      break;
    case FeatureKind::bspline:
      feat["num_basis"] = features.spline().size();
      feat["degree"] = features.spline().degree();
      break;
    default: {
      const FpcaModel& pca = features.pca();
      feat["fve_threshold"] = pca.fve_threshold;
      feat["total_variance"] = double_to_hex(pca.total_variance);
      feat["mean"] = detail::doubles_to_json(pca.mean);
      feat["eigenvalues"] = detail::doubles_to_json(pca.eigenvalues);
      feat["eigenfunctions"] = detail::matrix_to_json(pca.eigenfunctions);
      break;
    }
  }
  json doc{
      {"format", 1},
      {"kind", "vector"},
      {"task", task_name(task)},
      {"rule", rule_name(rule)},
      {"grid", detail::grid_to_json(features.grid())},
      {"features", feat},
      {"input_dim", net.input_dim()},
      {"spec", detail::specs_to_json(net.specs())},
      {"params", detail::params_to_json(net.parameters())},
  };
  detail::write_json_file(path, doc);
}

// A loaded checkpoint of either flavor, ready to predict.
struct LoadedCheckpoint {
  Task task;
  RuleKind rule;
  std::optional<BasisNetModel> adafnn;
  std::optional<MicroNet> head;
  std::optional<Featurizer> features;
  std::optional<Grid> grid;

  bool is_adafnn() const { return adafnn.has_value(); }

  std::vector<double> predict(const FunctionalDataset& data) {
    if (adafnn) {
      return adafnn->predict(data, make_quadrature(*grid, rule));
    }
    Matrix f = features->features(data);
    Matrix out = head->forward_eval(f);
    std::vector<double> preds(out.cols());
    for (std::size_t i = 0; i < preds.size(); ++i) preds[i] = out(0, i);
    return preds;
  }
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  using detail::json;
  json doc = detail::read_json_file(path);
  try {
    if (doc.at("format").get<int>() != 1) {
      throw data_error("checkpoint format " +
                       doc.at("format").dump() + " is not supported");
    }
    std::string kind = doc.at("kind").get<std::string>();
    Task task = task_from_name(doc.at("task").get<std::string>());
    RuleKind rule = rule_from_name(doc.at("rule").get<std::string>());
    Grid grid(detail::doubles_from_json(doc.at("grid")));

    LoadedCheckpoint out{task, rule, std::nullopt, std::nullopt, std::nullopt,
                         grid};
    Rng scratch(0);
    if (kind == "adafnn") {
      RegularizerConfig reg;
      const json& r = doc.at("regularizers");
      reg.lambda1 = r.at("lambda1").get<double>();
      reg.lambda2 = r.at("lambda2").get<double>();
      reg.pairs_per_batch = r.at("pairs_per_batch").get<std::size_t>();
      reg.sparsity_subset =
          r.at("sparsity_subset").get<std::vector<std::size_t>>();
      out.adafnn.emplace(doc.at("num_bases").get<std::size_t>(),
                         detail::specs_from_json(doc.at("basis_spec")),
                         detail::specs_from_json(doc.at("head_spec")), reg,
                         task, scratch);
      detail::params_from_json(doc.at("params"), out.adafnn->parameters());
    } else if (kind == "vector") {
      const json& feat = doc.at("features");
      FeatureKind fk =
          feature_kind_from_name(feat.at("kind").get<std::string>());
      switch (fk) {
        case FeatureKind::raw:
          out.features = Featurizer::raw(grid);
          break;
        case FeatureKind::bspline:
          out.features = Featurizer::bspline(
              grid, feat.at("num_basis").get<std::size_t>(),
              feat.at("degree").get<std::size_t>());
          break;
        default: {
          FpcaModel pca{make_quadrature(grid, rule),
                        feat.at("fve_threshold").get<double>(),
                        detail::doubles_from_json(feat.at("mean")),
                        detail::doubles_from_json(feat.at("eigenvalues")),
                        detail::matrix_from_json(feat.at("eigenfunctions")),
                        hex_to_double(
                            feat.at("total_variance").get<std::string>())};
          if (pca.mean.size() != grid.size() ||
              pca.eigenfunctions.cols() != grid.size() ||
              pca.eigenfunctions.rows() != pca.eigenvalues.size()) {
            throw data_error("checkpoint eigendecomposition shapes disagree "
                             "with the grid");
          }
          out.features = Featurizer::fpca(std::move(pca));
          break;
        }
      }
      out.head.emplace(doc.at("input_dim").get<std::size_t>(),
                       detail::specs_from_json(doc.at("spec")), scratch);
      if (out.head->input_dim() != out.features->dim()) {
        throw data_error("checkpoint head expects " +
                         std::to_string(out.head->input_dim()) +
                         " inputs, features produce " +
                         std::to_string(out.features->dim()));
      }
      detail::params_from_json(doc.at("params"), out.head->parameters());
    } else {
      throw data_error("unknown checkpoint kind '" + kind + "'");
    }
    return out;
  } catch (const detail::json::exception& e) {
    throw data_error("'" + path + "' is missing checkpoint fields: " +
                     e.what());
  }
}

}  // namespace adafnn
