#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "adafnn/baselines.hpp"
#include "adafnn/checkpoint.hpp"
#include "adafnn/dataset_io.hpp"
#include "adafnn/metrics.hpp"
#include "adafnn/model.hpp"
#include "adafnn/simgen.hpp"
#include "adafnn/svgplot.hpp"
#include "adafnn/train.hpp"

namespace adafnn {

// Head architecture presets. The large head is used for the simulation
// studies, the small one for low-sample problems where the extra capacity
// overfits.
enum class ArchPreset { large, small };

inline const char* preset_name(ArchPreset p) {
  return p == ArchPreset::large ? "large" : "small";
}

inline ArchPreset preset_from_name(const std::string& name) {
  if (name == "large") return ArchPreset::large;
  if (name == "small") return ArchPreset::small;
  throw config_error("unknown architecture preset: " + name);
}

inline std::vector<LayerSpec> head_layers(ArchPreset p) {
  if (p == ArchPreset::large) return MicroNet::mlp(128, 3, 1);
  return MicroNet::mlp(64, 2, 1, Activation::relu, Normalization::none, 0.1);
}

// Basis networks are small on purpose: each one only has to represent a
// single function of one variable.
inline std::vector<LayerSpec> basis_layers() {
  return MicroNet::mlp(64, 3, 1, Activation::relu, Normalization::layer_norm,
                       0.0, true);
}

struct MethodSpec {
  enum class Kind { adafnn, raw, bspline, fpca };

  Kind kind = Kind::adafnn;
  double lambda1 = 0.0;            // adafnn
  double lambda2 = 0.0;            // adafnn
  std::size_t num_basis = 15;      // bspline
  std::size_t degree = 3;          // bspline
  double fve_threshold = 0.9;      // fpca

  // Name used in result tables. The adafnn rows share one name and are
  // told apart by the lambda columns.
  std::string name() const {
    char buf[48];
    switch (kind) {
      case Kind::adafnn: return "adafnn";
      case Kind::raw: return "raw+nn";
      case Kind::bspline:
        std::snprintf(buf, sizeof buf, "bspline%zu+nn", num_basis);
        return buf;
      default:
        std::snprintf(buf, sizeof buf, "fpca%g+nn", fve_threshold);
        return buf;
    }
  }

  // Directory-safe identifier, unique across the method list.
  std::string token() const {
    char buf[64];
    switch (kind) {
      case Kind::adafnn:
        std::snprintf(buf, sizeof buf, "adafnn_%g_%g", lambda1, lambda2);
        return buf;
      case Kind::raw: return "raw_nn";
      case Kind::bspline:
        std::snprintf(buf, sizeof buf, "bspline%zu_nn", num_basis);
        return buf;
      default:
        std::snprintf(buf, sizeof buf, "fpca%g_nn", fve_threshold);
        return buf;
    }
  }

  void validate() const {
    if (lambda1 < 0.0 || lambda2 < 0.0) {
      throw config_error("method " + name() +
                         ": penalty strengths must be nonnegative");
    }
    if (kind == Kind::bspline) {
      if (degree < 1) throw config_error("bspline degree must be >= 1");
      if (num_basis < degree + 1) {
        throw config_error("bspline needs at least degree+1 basis functions");
      }
    }
    if (kind == Kind::fpca &&
        (fve_threshold <= 0.0 || fve_threshold > 1.0)) {
      throw config_error("fpca variance threshold must lie in (0, 1]");
    }
  }
};

// The paper's 9-combination penalty grid.
inline std::vector<MethodSpec> adafnn_grid() {
  std::vector<MethodSpec> out;
  for (double l1 : {0.0, 0.5, 1.0}) {
    for (double l2 : {0.0, 1.0, 2.0}) {
      MethodSpec m;
      m.lambda1 = l1;
      m.lambda2 = l2;
      out.push_back(m);
    }
  }
  return out;
}

struct ExperimentConfig {
  // Data source: a simulation case id, or a CSV to ingest and split.
  int sim_case = 0;
  std::string csv_path;
  Task task = Task::regression;
  SplitFractions split;
  std::uint64_t split_seed = 1;

  // Simulation size overrides; zero keeps the case defaults.
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;

  std::vector<MethodSpec> methods;
  ArchPreset preset = ArchPreset::large;
  std::size_t num_bases = 2;
  RuleKind rule = RuleKind::trapezoid;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir;

  void validate() const {
    bool have_case = sim_case != 0;
    bool have_csv = !csv_path.empty();
    if (have_case == have_csv) {
      throw config_error(
          "config needs exactly one data source: a simulation case or a csv");
    }
    if (have_case && (sim_case < 1 || sim_case > 5)) {
      throw config_error("simulation case must be 1 through 5");
    }
    if (methods.empty()) throw config_error("config lists no methods");
    for (const MethodSpec& m : methods) m.validate();
    for (std::size_t i = 0; i < methods.size(); ++i) {
      for (std::size_t j = i + 1; j < methods.size(); ++j) {
        if (methods[i].token() == methods[j].token()) {
          throw config_error("method " + methods[i].token() +
                             " appears twice");
        }
      }
    }
    if (num_bases == 0) throw config_error("num_bases must be >= 1");
    if (seeds.empty()) throw config_error("config lists no seeds");
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      for (std::size_t j = i + 1; j < seeds.size(); ++j) {
        if (seeds[i] == seeds[j]) {
          throw config_error("seed " + std::to_string(seeds[i]) +
                             " appears twice");
        }
      }
    }
    if (output_dir.empty()) throw config_error("output_dir is not set");
    train.validate();
  }
};

namespace detail {

inline void require_keys(const json& obj, const char* where,
                         std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok |= it.key() == k;
    if (!ok) {
      throw config_error(std::string(where) + ": unknown key '" + it.key() +
                         "'");
    }
  }
}

}  // namespace detail

// Reads an experiment configuration from its JSON form. Every field has a
// default except the data source, the methods, and the output directory,
// so small configs stay small. Unknown keys are rejected: a silently
// ignored typo would otherwise change what an experiment means.
inline ExperimentConfig parse_experiment_config(const detail::json& doc) {
  using detail::json;
  ExperimentConfig cfg;
  try {
    detail::require_keys(doc, "config",
                         {"source", "methods", "preset", "num_bases", "rule",
                          "train", "seeds", "output_dir", "sizes"});

    const json& source = doc.at("source");
    detail::require_keys(source, "source",
                         {"case", "csv", "task", "split", "split_seed"});
    if (source.contains("case")) cfg.sim_case = source.at("case").get<int>();
    if (source.contains("csv")) {
      cfg.csv_path = source.at("csv").get<std::string>();
    }
    if (source.contains("task")) {
      cfg.task = task_from_name(source.at("task").get<std::string>());
    }
    if (source.contains("split")) {
      std::vector<double> f = source.at("split").get<std::vector<double>>();
      if (f.size() != 3) {
        throw config_error("source.split must hold 3 fractions");
      }
      cfg.split = SplitFractions{f[0], f[1], f[2]};
    }
    if (source.contains("split_seed")) {
      cfg.split_seed = source.at("split_seed").get<std::uint64_t>();
    }

    if (doc.contains("sizes")) {
      const json& sizes = doc.at("sizes");
      detail::require_keys(sizes, "sizes", {"train", "val", "test"});
      if (sizes.contains("train")) {
        cfg.n_train = sizes.at("train").get<std::size_t>();
      }
      if (sizes.contains("val")) cfg.n_val = sizes.at("val").get<std::size_t>();
      if (sizes.contains("test")) {
        cfg.n_test = sizes.at("test").get<std::size_t>();
      }
    }

    for (const json& jm : doc.at("methods")) {
      detail::require_keys(jm, "method",
                           {"kind", "lambda1", "lambda2", "num_basis",
                            "degree", "fve"});
      std::string kind = jm.at("kind").get<std::string>();
      if (kind == "adafnn_grid") {
        for (const MethodSpec& m : adafnn_grid()) cfg.methods.push_back(m);
        continue;
      }
      MethodSpec m;
      if (kind == "adafnn") {
        m.kind = MethodSpec::Kind::adafnn;
        if (jm.contains("lambda1")) m.lambda1 = jm.at("lambda1").get<double>();
        if (jm.contains("lambda2")) m.lambda2 = jm.at("lambda2").get<double>();
      } else if (kind == "raw") {
        m.kind = MethodSpec::Kind::raw;
      } else if (kind == "bspline") {
        m.kind = MethodSpec::Kind::bspline;
        if (jm.contains("num_basis")) {
          m.num_basis = jm.at("num_basis").get<std::size_t>();
        }
        if (jm.contains("degree")) m.degree = jm.at("degree").get<std::size_t>();
      } else if (kind == "fpca") {
        m.kind = MethodSpec::Kind::fpca;
        if (jm.contains("fve")) m.fve_threshold = jm.at("fve").get<double>();
      } else {
        throw config_error("unknown method kind: " + kind);
      }
      cfg.methods.push_back(m);
    }

    if (doc.contains("preset")) {
      cfg.preset = preset_from_name(doc.at("preset").get<std::string>());
    }
    if (doc.contains("num_bases")) {
      cfg.num_bases = doc.at("num_bases").get<std::size_t>();
    }
    if (doc.contains("rule")) {
      cfg.rule = rule_from_name(doc.at("rule").get<std::string>());
    }
    if (doc.contains("train")) {
      const json& jt = doc.at("train");
      detail::require_keys(jt, "train",
                           {"max_epochs", "patience", "batch_size",
                            "optimizer", "learning_rate", "sgd_decay_c",
                            "weight_norm_rho"});
      if (jt.contains("max_epochs")) {
        cfg.train.max_epochs = jt.at("max_epochs").get<std::size_t>();
      }
      if (jt.contains("patience")) {
        cfg.train.patience = jt.at("patience").get<std::size_t>();
      }
      if (jt.contains("batch_size")) {
        cfg.train.batch_size = jt.at("batch_size").get<std::size_t>();
      }
      if (jt.contains("optimizer")) {
        std::string o = jt.at("optimizer").get<std::string>();
        if (o == "adam") {
          cfg.train.optimizer = OptimizerKind::adam;
        } else if (o == "decay_sgd") {
          cfg.train.optimizer = OptimizerKind::decay_sgd;
        } else {
          throw config_error("unknown optimizer: " + o);
        }
      }
      if (jt.contains("learning_rate")) {
        cfg.train.learning_rate = jt.at("learning_rate").get<double>();
      }
      if (jt.contains("sgd_decay_c")) {
        cfg.train.sgd_decay_c = jt.at("sgd_decay_c").get<double>();
      }
      if (jt.contains("weight_norm_rho")) {
        cfg.train.weight_norm_rho = jt.at("weight_norm_rho").get<double>();
      }
    }
    if (doc.contains("seeds")) {
      cfg.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    }
    cfg.output_dir = doc.at("output_dir").get<std::string>();
  } catch (const detail::json::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  detail::json doc;
  try {
    doc = detail::read_json_file(path);
  } catch (const data_error& e) {
    // A config that cannot be read is a configuration problem, not a data
    // problem; keep the exit code at 2.
    throw config_error(e.what());
  }
  return parse_experiment_config(doc);
}

struct RunResult {
  std::string method;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::uint64_t seed = 0;
  double val_metric = std::numeric_limits<double>::quiet_NaN();
  double test_metric = std::numeric_limits<double>::quiet_NaN();
  std::size_t best_epoch = 0;
  bool failed = false;
  std::string error;
};

struct ExperimentSummary {
  std::filesystem::path dir;
  std::vector<RunResult> runs;  // in (method, seed) config order
};

namespace detail {

inline std::string format_fit_report(const FitReport& r) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < r.epochs_run(); ++e) {
    out += std::to_string(e + 1) + ',' + format_double(r.train_losses[e]) +
           ',' + format_double(r.val_losses[e]) + '\n';
  }
  out += "best_epoch," + std::to_string(r.best_epoch) + '\n';
  out += "best_val," + format_double(r.best_val) + '\n';
  out += "test_metric," + format_double(r.test_metric) + '\n';
  out += "wall_seconds," + format_double(r.wall_seconds) + '\n';
  return out;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw data_error("cannot open '" + path.string() + "' for writing");
  }
  out << text;
  if (!out) throw data_error("write to '" + path.string() + "' failed");
}

// One (method, seed) job: train, evaluate, and leave the run's artifacts
// in its own directory.
inline RunResult execute_run(const ExperimentConfig& cfg, const MethodSpec& m,
                             std::uint64_t seed,
                             const FunctionalDataset& train_set,
                             const FunctionalDataset& val_set,
                             const FunctionalDataset& test_set,
                             const std::filesystem::path& run_dir) {
  RunResult result;
  result.method = m.name();
  result.lambda1 = m.lambda1;
  result.lambda2 = m.lambda2;
  result.seed = seed;

  std::filesystem::create_directories(run_dir);
  QuadratureRule rule = make_quadrature(train_set.grid, cfg.rule);
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  Rng init = Rng(seed).derive("init");

  FitReport report;
  if (m.kind == MethodSpec::Kind::adafnn) {
    RegularizerConfig reg;
    reg.lambda1 = m.lambda1;
    reg.lambda2 = m.lambda2;
    BasisNetModel model(cfg.num_bases, basis_layers(),
                        head_layers(cfg.preset), reg, cfg.task, init);
    AdafnnTrainable trainable(model, train_set, val_set, rule);
    report = fit(trainable, tc);
    report.test_metric = evaluate_metric(cfg.task, trainable.predict(test_set),
                                         test_set.responses());
    save_checkpoint((run_dir / "checkpoint.json").string(), model, rule);
    write_basis_csv((run_dir / "bases.csv").string(), rule.grid,
                    model.evaluate_bases(rule.grid), "beta");
  } else {
    Featurizer feats =
        m.kind == MethodSpec::Kind::raw
            ? Featurizer::raw(train_set.grid)
        : m.kind == MethodSpec::Kind::bspline
            ? Featurizer::bspline(train_set.grid, m.num_basis, m.degree)
            : Featurizer::fpca(train_set, m.fve_threshold, cfg.rule);
    MicroNet net(feats.dim(), head_layers(cfg.preset), init);
    VectorTrainable trainable(net, cfg.task, feats.features(train_set),
                              train_set.responses(), feats.features(val_set),
                              val_set.responses());
    report = fit(trainable, tc);
    report.test_metric = evaluate_metric(
        cfg.task, trainable.predict(feats.features(test_set)),
        test_set.responses());
    save_checkpoint((run_dir / "checkpoint.json").string(), net, feats,
                    cfg.task, cfg.rule);
    if (m.kind == MethodSpec::Kind::fpca) {
      write_basis_csv((run_dir / "bases.csv").string(), rule.grid,
                      feats.pca().eigenfunctions, "psi");
    } else if (m.kind == MethodSpec::Kind::bspline) {
      const Matrix& design = feats.spline().design();  // (J+1) x K
      Matrix curves(design.cols(), design.rows());
      for (std::size_t j = 0; j < design.rows(); ++j) {
        for (std::size_t k = 0; k < design.cols(); ++k) {
          curves(k, j) = design(j, k);
        }
      }
      write_basis_csv((run_dir / "bases.csv").string(), rule.grid, curves,
                      "psi");
    }
  }

  write_text_file(run_dir / "fit_report.txt", format_fit_report(report));
  result.val_metric = report.best_val;
  result.test_metric = report.test_metric;
  result.best_epoch = report.best_epoch;
  return result;
}

}  // namespace detail

// Per-run rows rendered as the results table.
inline std::string format_results_csv(const std::vector<RunResult>& runs) {
  std::string out = "method,lambda1,lambda2,seed,val_metric,test_metric,"
                    "best_epoch\n";
  for (const RunResult& r : runs) {
    if (r.failed) continue;
    out += r.method + ',' + format_double(r.lambda1) + ',' +
           format_double(r.lambda2) + ',' + std::to_string(r.seed) + ',' +
           format_double(r.val_metric) + ',' + format_double(r.test_metric) +
           ',' + std::to_string(r.best_epoch) + '\n';
  }
  return out;
}

// Mean metrics per method. `selected` marks the penalty combination an
// adafnn user would deploy (lowest mean validation loss); `best_test` marks
// the lowest mean test metric overall. The two can disagree, which is
// exactly what the selected marker exists to make visible.
inline std::string summarize_results(const std::vector<RunResult>& runs) {
  struct Group {
    std::string method;
    double lambda1 = 0.0, lambda2 = 0.0;
    std::size_t count = 0;
    double val_sum = 0.0, test_sum = 0.0;
  };
  std::vector<Group> groups;
  for (const RunResult& r : runs) {
    if (r.failed) continue;
    Group* g = nullptr;
    for (Group& existing : groups) {
      if (existing.method == r.method && existing.lambda1 == r.lambda1 &&
          existing.lambda2 == r.lambda2) {
        g = &existing;
        break;
      }
    }
    if (g == nullptr) {
      groups.push_back(Group{r.method, r.lambda1, r.lambda2, 0, 0.0, 0.0});
      g = &groups.back();
    }
    g->count += 1;
    g->val_sum += r.val_metric;
    g->test_sum += r.test_metric;
  }

  std::size_t selected = groups.size();
  std::size_t best_test = groups.size();
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const Group& g = groups[i];
    if (g.method == "adafnn" &&
        (selected == groups.size() ||
         g.val_sum / g.count < groups[selected].val_sum / groups[selected].count)) {
      selected = i;
    }
    if (best_test == groups.size() ||
        g.test_sum / g.count <
            groups[best_test].test_sum / groups[best_test].count) {
      best_test = i;
    }
  }

  std::string out =
      "method,lambda1,lambda2,runs,mean_val_metric,mean_test_metric,"
      "selected,best_test\n";
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const Group& g = groups[i];
    out += g.method + ',' + format_double(g.lambda1) + ',' +
           format_double(g.lambda2) + ',' + std::to_string(g.count) + ',' +
           format_double(g.val_sum / g.count) + ',' +
           format_double(g.test_sum / g.count) + ',' +
           (i == selected ? "*" : "") + ',' + (i == best_test ? "*" : "") +
           '\n';
  }
  return out;
}

inline std::vector<RunResult> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw data_error("'" + path + "' is empty");
  std::vector<RunResult> out;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      cells.push_back(comma == std::string::npos
                          ? line.substr(start)
                          : line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 7) {
      throw data_error("line " + std::to_string(line_number) +
                       ": expected 7 fields, got " +
                       std::to_string(cells.size()));
    }
    RunResult r;
    r.method = cells[0];
    r.lambda1 = detail::parse_cell(cells[1], line_number);
    r.lambda2 = detail::parse_cell(cells[2], line_number);
    r.seed = static_cast<std::uint64_t>(
        detail::parse_cell(cells[3], line_number));
    r.val_metric = detail::parse_cell(cells[4], line_number);
    r.test_metric = detail::parse_cell(cells[5], line_number);
    r.best_epoch = static_cast<std::size_t>(
        detail::parse_cell(cells[6], line_number));
    out.push_back(std::move(r));
  }
  return out;
}

// Number of worker threads: the environment override wins, otherwise the
// hardware count, always at least one.
inline std::size_t worker_count() {
  if (const char* env = std::getenv("ADAFNN_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw config_error("ADAFNN_THREADS must be a positive integer, got '" +
                         std::string(env) + "'");
    }
    return static_cast<std::size_t>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Resolves an output directory against the environment's output root, if
// one is set and the directory is relative.
inline std::filesystem::path resolve_output_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("ADAFNN_OUTPUT_ROOT")) {
      return std::filesystem::path(root) / p;
    }
  }
  return p;
}

// Trains every (method, seed) pair and writes the experiment directory:
// per-run subdirectories with fit report, checkpoint, and basis dump, plus
// results.csv, summary.csv, and errors.log at the top. Failed runs are
// logged and skipped; everything else continues. Numbers in the tables are
// independent of the worker count because each run derives all of its
// randomness from its own seed and rows are emitted in config order.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::path out_dir = resolve_output_dir(cfg.output_dir);
  fs::create_directories(out_dir / "runs");

  // Materialize the data once per seed; jobs share it read-only. A CSV
  // source has one fixed split, so replications differ only in training
  // randomness.
  std::map<std::uint64_t, DatasetSplits> data;
  if (cfg.sim_case != 0) {
    SimCaseSpec spec = sim_case_spec(cfg.sim_case);
    if (cfg.n_train != 0) spec.n_train = cfg.n_train;
    if (cfg.n_val != 0) spec.n_val = cfg.n_val;
    if (cfg.n_test != 0) spec.n_test = cfg.n_test;
    for (std::uint64_t seed : cfg.seeds) {
      SimulatedCase sim = build_case(spec, seed);
      data.emplace(seed, DatasetSplits{std::move(sim.train),
                                       std::move(sim.val),
                                       std::move(sim.test)});
    }
  } else {
    FunctionalDataset full = read_dataset_csv(cfg.csv_path, cfg.task);
    DatasetSplits split = split_dataset(full, cfg.split, cfg.split_seed);
    for (std::uint64_t seed : cfg.seeds) data.emplace(seed, split);
  }

  struct Job {
    const MethodSpec* method;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const MethodSpec& m : cfg.methods) {
    for (std::uint64_t seed : cfg.seeds) jobs.push_back(Job{&m, seed});
  }

  std::vector<RunResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) break;
      const Job& job = jobs[i];
      const DatasetSplits& splits = data.at(job.seed);
      fs::path run_dir = out_dir / "runs" /
                         (job.method->token() + "_seed" +
                          std::to_string(job.seed));
      try {
        results[i] = detail::execute_run(cfg, *job.method, job.seed,
                                         splits.train, splits.val,
                                         splits.test, run_dir);
      } catch (const std::exception& e) {
        results[i].method = job.method->name();
        results[i].lambda1 = job.method->lambda1;
        results[i].lambda2 = job.method->lambda2;
        results[i].seed = job.seed;
        results[i].failed = true;
        results[i].error = e.what();
      }
    }
  };

  std::size_t workers = std::min(worker_count(), jobs.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  detail::write_text_file(out_dir / "results.csv",
                          format_results_csv(results));
  detail::write_text_file(out_dir / "summary.csv",
                          summarize_results(results));
  std::string errors;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].failed) {
      errors += jobs[i].method->token() + " seed " +
                std::to_string(jobs[i].seed) + ": " + results[i].error + '\n';
    }
  }
  if (!errors.empty()) {
    detail::write_text_file(out_dir / "errors.log", errors);
  }

  return ExperimentSummary{std::move(out_dir), std::move(results)};
}

// Renders a basis dump as the figures present learned bases: every curve
// scaled to unit quadrature norm, and when a reference overlay is given,
// each basis sign-flipped so its best-matching reference correlates
// positively. The overlay curves draw dashed.
inline void plot_bases(const std::string& dump_path,
                       const std::string& overlay_path,
                       const std::string& out_path,
                       const std::string& title = "") {
  BasisDump dump = read_basis_csv(dump_path);
  Grid grid{std::vector<double>(dump.t)};
  QuadratureRule rule = make_quadrature(grid, RuleKind::trapezoid);

  auto normalize = [&](std::vector<double>& curve) {
    double norm = l2_norm(curve, rule);
    if (norm > 1e-12) {
      for (double& v : curve) v /= norm;
    }
  };
  for (std::vector<double>& c : dump.curves) normalize(c);

  std::vector<PlotSeries> series;
  std::vector<std::vector<double>> overlays;
  if (!overlay_path.empty()) {
    BasisDump truth = read_basis_csv(overlay_path);
    if (truth.t.size() != dump.t.size()) {
      throw data_error("overlay grid has " + std::to_string(truth.t.size()) +
                       " points, dump has " + std::to_string(dump.t.size()));
    }
    for (std::size_t j = 0; j < dump.t.size(); ++j) {
      if (std::abs(truth.t[j] - dump.t[j]) > 1e-12) {
        throw data_error("overlay grid differs from the dump grid at row " +
                         std::to_string(j + 1));
      }
    }
    for (std::size_t i = 0; i < truth.curves.size(); ++i) {
      normalize(truth.curves[i]);
      overlays.push_back(truth.curves[i]);
      PlotSeries s;
      s.label = truth.names[i];
      s.x = dump.t;
      s.y = std::move(truth.curves[i]);
      s.dashed = true;
      series.push_back(std::move(s));
    }
  }

  for (std::size_t i = 0; i < dump.curves.size(); ++i) {
    std::vector<double>& curve = dump.curves[i];
    if (!overlays.empty()) {
      double best = 0.0;
      for (const std::vector<double>& o : overlays) {
        double ip = inner_product(curve, o, rule);
        if (std::abs(ip) > std::abs(best)) best = ip;
      }
      if (best < 0.0) {
        for (double& v : curve) v = -v;
      }
    }
    PlotSeries s;
    s.label = dump.names[i];
    s.x = dump.t;
    s.y = std::move(curve);
    series.push_back(std::move(s));
  }

  write_svg(out_path, series, title);
}

}  // namespace adafnn
