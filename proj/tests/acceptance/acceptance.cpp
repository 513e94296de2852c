// Acceptance gate. Each numbered check below is a self-contained benchmark
// with its thresholds written directly in code; the program prints one
// PASS/FAIL line per check and exits nonzero if any of them fail. The
// heavier checks train real models, so a full run takes ten to twenty
// minutes on one core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adafnn/dataset_io.hpp"
#include "adafnn/experiment.hpp"
#include "adafnn/fpca.hpp"
#include "adafnn/grid.hpp"
#include "adafnn/matrix.hpp"
#include "adafnn/metrics.hpp"
#include "adafnn/micronet.hpp"
#include "adafnn/model.hpp"
#include "adafnn/rng.hpp"
#include "adafnn/simgen.hpp"
#include "support/gradcheck.hpp"

using namespace adafnn;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

double phi(std::size_t k, double t) {
  if (k == 1) return 1.0;
  return std::sqrt(2.0) * std::cos(static_cast<double>(k - 1) * kPi * t);
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

struct Clock {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

struct Gate {
  int passed = 0;
  int failed = 0;

  void record(int id, bool pass, const std::string& detail) {
    (pass ? passed : failed) += 1;
    std::printf("criterion %d %s  %s\n", id, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
  }
};

// ---------------------------------------------------------------------------
// Shared pieces.

fs::path work_dir() {
  static fs::path base = [] {
    fs::path p = fs::temp_directory_path() / "adafnn_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return base;
}

const RunResult* best_validation(const std::vector<RunResult>& runs,
                                 const MethodSpec& want) {
  const RunResult* best = nullptr;
  for (const RunResult& r : runs) {
    if (r.failed) continue;
    if (r.method != want.name()) continue;
    if (want.kind == MethodSpec::Kind::adafnn &&
        (r.lambda1 != want.lambda1 || r.lambda2 != want.lambda2)) {
      continue;
    }
    if (best == nullptr || r.val_metric < best->val_metric) best = &r;
  }
  return best;
}

const RunResult* best_validation_adafnn(const std::vector<RunResult>& runs) {
  const RunResult* best = nullptr;
  for (const RunResult& r : runs) {
    if (r.failed || r.method != "adafnn") continue;
    if (best == nullptr || r.val_metric < best->val_metric) best = &r;
  }
  return best;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string run_dir_token(const MethodSpec& m, std::uint64_t seed) {
  return m.token() + "_seed" + std::to_string(seed);
}

BasisDump load_run_bases(const fs::path& experiment_dir, const MethodSpec& m,
                         std::uint64_t seed) {
  fs::path p = experiment_dir / "runs" / run_dir_token(m, seed) / "bases.csv";
  return read_basis_csv(p.string());
}

// Quadrature cosine between two curves tabulated on the dump's grid.
double curve_cosine(const BasisDump& dump, std::size_t i, std::size_t j) {
  Grid g(dump.t);
  QuadratureRule q = make_quadrature(g, RuleKind::trapezoid);
  double num = inner_product(dump.curves[i], dump.curves[j], q);
  double den = l2_norm(dump.curves[i], q) * l2_norm(dump.curves[j], q);
  return num / den;
}

std::string read_file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// ---------------------------------------------------------------------------
// 1. Analytic gradients against central finite differences for the three
//    trainable configurations: a basis micro net, a prediction head, and a
//    full two-basis model with both penalties active. Ten seeds, spot
//    checking a seeded random subset of each parameter tensor.
//
//    A central difference whose interval straddles a relu kink measures a
//    blend of the two one-sided slopes, not the derivative, so a coordinate
//    that misses tolerance at the primary step is re-estimated at h/4, h/16,
//    h/64 and accepted at the first step that agrees. A wrong analytic
//    gradient disagrees at every step size; the straddle count is reported.

struct GradStats {
  double max_err = 0.0;
  std::size_t checked = 0;
  std::size_t straddles = 0;
  bool ok = true;
};

void robust_gradcheck(const gradcheck::Builder& build,
                      const std::vector<Param*>& params,
                      const std::vector<std::vector<std::size_t>>& selection,
                      double h, double tol, GradStats& stats) {
  for (Param* p : params) p->zero_grad();
  {
    Tape tape;
    Var root = build(tape);
    tape.backward(root);
  }
  auto fd_at = [&](Param& p, std::size_t i, double step) {
    double saved = p.value.data()[i];
    p.value.data()[i] = saved + step;
    double fp = gradcheck::eval_scalar(build);
    p.value.data()[i] = saved - step;
    double fm = gradcheck::eval_scalar(build);
    p.value.data()[i] = saved;
    return (fp - fm) / (2.0 * step);
  };
  auto rel = [](double an, double fd) {
    double scale = std::max(std::abs(an), std::abs(fd));
    return scale < 1e-8 ? std::abs(an - fd) : std::abs(an - fd) / scale;
  };
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    std::vector<double> analytic = p.grad.storage();
    for (std::size_t i : selection[k]) {
      double an = analytic[i];
      double err = rel(an, fd_at(p, i, h));
      if (err >= tol) {
        bool recovered = false;
        for (double shrink : {4.0, 16.0, 64.0}) {
          double refined = rel(an, fd_at(p, i, h / shrink));
          if (refined < tol) {
            err = refined;
            recovered = true;
            break;
          }
        }
        if (recovered) {
          ++stats.straddles;
        } else {
          stats.ok = false;
        }
      }
      stats.max_err = std::max(stats.max_err, err);
      ++stats.checked;
    }
  }
}

void check_gradients(Gate& gate) {
  Clock clock;
  const double kTol = 1e-4;
  const double kH = 1e-5;
  const std::size_t kPerTensor = 24;

  GradStats stats;
  try {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Rng pick = Rng(seed).derive("gradcheck-pick");

      auto selection = [&](std::vector<Param*>& params) {
        std::vector<std::vector<std::size_t>> sel;
        for (Param* p : params) {
          sel.push_back(
              gradcheck::subsample(p->value.size(), kPerTensor, pick));
        }
        return sel;
      };

      // Basis micro net, scalar in, scalar out.
      {
        Rng init = Rng(seed).derive("micro");
        MicroNet net(1, basis_layers(), init);
        Rng data = Rng(seed).derive("micro-data");
        Matrix x(1, 4);
        std::vector<double> targets(4);
        for (std::size_t n = 0; n < 4; ++n) {
          x(0, n) = data.uniform(0.0, 1.0);
          targets[n] = data.uniform(-1.0, 1.0);
        }
        auto build = [&](Tape& t) {
          Rng step(9000 + seed);
          Var out = net.forward(t, t.constant(x), Mode::train, &step);
          return t.mse_loss(out, targets);
        };
        std::vector<Param*> params = net.parameters();
        robust_gradcheck(build, params, selection(params), kH, kTol, stats);
      }

      // Prediction head on two basis scores.
      {
        Rng init = Rng(seed).derive("head");
        MicroNet net(2, head_layers(ArchPreset::large), init);
        Rng data = Rng(seed).derive("head-data");
        Matrix x(2, 4);
        std::vector<double> targets(4);
        for (std::size_t n = 0; n < 4; ++n) {
          x(0, n) = data.uniform(-2.0, 2.0);
          x(1, n) = data.uniform(-2.0, 2.0);
          targets[n] = data.uniform(-1.0, 1.0);
        }
        auto build = [&](Tape& t) {
          Rng step(9100 + seed);
          Var out = net.forward(t, t.constant(x), Mode::train, &step);
          return t.mse_loss(out, targets);
        };
        std::vector<Param*> params = net.parameters();
        robust_gradcheck(build, params, selection(params), kH, kTol, stats);
      }

      // Full model: two bases on a 5-point grid, 4-sample batch, both
      // penalty strengths at 1.
      {
        Grid g({0.0, 0.25, 0.5, 0.75, 1.0});
        QuadratureRule q = make_quadrature(g, RuleKind::trapezoid);
        Rng data = Rng(seed).derive("model-data");
        FunctionalDataset ds{g, {}, Task::regression};
        for (std::size_t n = 0; n < 4; ++n) {
          FunctionalSample s;
          s.values.resize(g.size());
          for (double& v : s.values) v = data.uniform(-1.0, 1.0);
          s.response = data.uniform(-1.0, 1.0);
          ds.samples.push_back(std::move(s));
        }
        std::vector<std::size_t> batch{0, 1, 2, 3};
        RegularizerConfig reg;
        reg.lambda1 = 1.0;
        reg.lambda2 = 1.0;
        Rng init = Rng(seed).derive("model");
        BasisNetModel model(2, basis_layers(), head_layers(ArchPreset::large),
                            reg, Task::regression, init);
        auto build = [&](Tape& t) {
          Rng step(9200 + seed);
          return model.total_loss(t, ds, batch, q, Mode::train, step);
        };
        std::vector<Param*> params = model.parameters();
        robust_gradcheck(build, params, selection(params), kH, kTol, stats);
      }
    }
  } catch (const std::exception& e) {
    gate.record(1, false, fmt("gradients: %s", e.what()));
    return;
  }

  double secs = clock.seconds();
  bool pass = stats.ok && stats.max_err < kTol && secs < 60.0;
  gate.record(1, pass,
              fmt("gradients: max relative error %.3g (tol %.0e) over 10 "
                  "seeds x 3 configurations, %zu coordinates (%zu relu kink "
                  "straddles re-estimated), %.1fs (< 60s)",
                  stats.max_err, kTol, stats.checked, stats.straddles, secs));
}

// ---------------------------------------------------------------------------
// 2. Trapezoid errors on cosine products shrink when the grid is refined
//    from 50 to 200 intervals. Run on a smoothly graded non-uniform grid;
//    a uniform grid integrates these products exactly and leaves the ratio
//    undefined.

void check_quadrature(Gate& gate) {
  auto graded = [](std::size_t intervals) {
    std::vector<double> pts(intervals + 1);
    for (std::size_t j = 0; j <= intervals; ++j) {
      double s = static_cast<double>(j) / static_cast<double>(intervals);
      pts[j] = s + 0.3 * s * (1.0 - s);
    }
    pts.front() = 0.0;
    pts.back() = 1.0;
    return Grid(std::move(pts));
  };

  auto errors = [&](std::size_t intervals) {
    Grid g = graded(intervals);
    QuadratureRule q = make_quadrature(g, RuleKind::trapezoid);
    std::vector<double> f2(g.size()), f3(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
      f2[j] = phi(2, g[j]);
      f3[j] = phi(3, g[j]);
    }
    return std::pair<double, double>{
        std::abs(inner_product(f2, f3, q)),
        std::abs(inner_product(f2, f2, q) - 1.0)};
  };

  auto [cross50, self50] = errors(50);
  auto [cross200, self200] = errors(200);
  double r1 = cross50 / cross200;
  double r2 = self50 / self200;
  bool pass = r1 >= 12.0 && r2 >= 12.0;
  gate.record(2, pass,
              fmt("quadrature: refining 50 -> 200 intervals shrinks the "
                  "cross-term error %.1fx and the norm error %.1fx "
                  "(needed >= 12x each)",
                  r1, r2));
}

// ---------------------------------------------------------------------------
// 3. Covariance eigendecomposition on a known three-component process:
//    variance-share selection at 0.9 keeps exactly two components
//    (share 13/14) and both recovered functions align with the truth.

void check_fpca_oracle(Gate& gate) {
  Clock clock;
  Grid g = Grid::uniform(100);
  const double sds[3] = {3.0, 2.0, 1.0};

  Rng rng = Rng(7).derive("component-oracle");
  FunctionalDataset ds{g, {}, Task::regression};
  for (std::size_t i = 0; i < 2000; ++i) {
    double c[3];
    for (int k = 0; k < 3; ++k) {
      c[k] = sds[k] * rng.uniform(-kRoot3, kRoot3);
    }
    FunctionalSample s;
    s.values.resize(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
      s.values[j] = c[0] * phi(2, g[j]) + c[1] * phi(3, g[j]) +
                    c[2] * phi(4, g[j]);
    }
    s.response = 0.0;
    ds.samples.push_back(std::move(s));
  }

  try {
    FpcaModel model = fpca_fit(ds, 0.9);
    QuadratureRule q = make_quadrature(g, RuleKind::trapezoid);
    bool pass = model.num_components() == 2;
    double worst_align = 1.0;
    for (std::size_t k = 0; k < model.num_components() && k < 2; ++k) {
      std::vector<double> truth(g.size());
      for (std::size_t j = 0; j < g.size(); ++j) truth[j] = phi(k + 2, g[j]);
      std::vector<double> est(g.size());
      for (std::size_t j = 0; j < g.size(); ++j) {
        est[j] = model.eigenfunctions(k, j);
      }
      double align = std::abs(inner_product(truth, est, q)) /
                     (l2_norm(truth, q) * l2_norm(est, q));
      worst_align = std::min(worst_align, align);
    }
    pass = pass && worst_align > 0.95;
    double secs = clock.seconds();
    pass = pass && secs < 60.0;
    gate.record(3, pass,
                fmt("component selection: variance share 0.9 kept %zu of 3 "
                    "components (expect 2), weakest alignment |cos| %.4f "
                    "(> 0.95), %.1fs (< 60s)",
                    model.num_components(), worst_align, secs));
  } catch (const std::exception& e) {
    gate.record(3, false, fmt("component selection: %s", e.what()));
  }
}

// ---------------------------------------------------------------------------
// 4. Benchmark case 1 with library defaults: the adaptive model must reach
//    a small test error on its best-of-three seeds while the variance-share
//    0.9 pipeline is expected to stay above 0.5. The second half encodes
//    the reference tables this suite mirrors; with the selection rule
//    implemented here the 0.9 threshold keeps three components on this
//    process (top-two share is 425/497), the third spans the signal, and
//    the pipeline predicts well. The bound is asserted as specified and the
//    measured value is printed.

void check_case1(Gate& gate) {
  Clock clock;
  ExperimentConfig cfg;
  cfg.sim_case = 1;
  MethodSpec adafnn;  // lambda1 = lambda2 = 0
  MethodSpec fpca;
  fpca.kind = MethodSpec::Kind::fpca;
  fpca.fve_threshold = 0.9;
  cfg.methods = {adafnn, fpca};
  cfg.num_bases = 2;
  cfg.seeds = {1, 2, 3};
  cfg.output_dir = (work_dir() / "case1").string();

  try {
    ExperimentSummary summary = run_experiment(cfg);
    const RunResult* ada = best_validation(summary.runs, adafnn);
    const RunResult* fp = best_validation(summary.runs, fpca);
    if (ada == nullptr || fp == nullptr) {
      gate.record(4, false, "case 1: a training run failed; see errors.log");
      return;
    }
    std::size_t kept = load_run_bases(summary.dir, fpca, fp->seed).names.size();
    double secs = clock.seconds();
    bool ada_ok = ada->test_metric < 0.05;
    bool fpca_ok = fp->test_metric > 0.5;
    bool pass = ada_ok && fpca_ok && secs < 600.0;
    gate.record(
        4, pass,
        fmt("case 1: adafnn(0,0) best-of-3 test mse %.4g (< 0.05 %s); "
            "fpca 0.9 pipeline test mse %.4g (expected > 0.5 %s; it kept %zu "
            "components and captured the signal), %.0fs (< 600s)",
            ada->test_metric, ada_ok ? "ok" : "VIOLATED", fp->test_metric,
            fpca_ok ? "ok" : "VIOLATED", kept, secs));
  } catch (const std::exception& e) {
    gate.record(4, false, fmt("case 1: %s", e.what()));
  }
}

// ---------------------------------------------------------------------------
// 5. Benchmark case 2: the best-validation penalty combination from the
//    3 x 3 grid must reach a small test error with three bases, while the
//    four-function spline pipeline misses the high-frequency signal.

void check_case2(Gate& gate) {
  Clock clock;
  ExperimentConfig cfg;
  cfg.sim_case = 2;
  cfg.methods = adafnn_grid();
  MethodSpec bspline;
  bspline.kind = MethodSpec::Kind::bspline;
  bspline.num_basis = 4;
  cfg.methods.push_back(bspline);
  cfg.num_bases = 3;
  cfg.seeds = {1};
  cfg.output_dir = (work_dir() / "case2").string();

  try {
    ExperimentSummary summary = run_experiment(cfg);
    const RunResult* ada = best_validation_adafnn(summary.runs);
    const RunResult* bs = best_validation(summary.runs, bspline);
    if (ada == nullptr || bs == nullptr) {
      gate.record(5, false, "case 2: a training run failed; see errors.log");
      return;
    }
    double secs = clock.seconds();
    bool ada_ok = ada->test_metric < 0.05;
    bool bs_ok = bs->test_metric > 0.5;
    bool pass = ada_ok && bs_ok && secs < 600.0;
    gate.record(
        5, pass,
        fmt("case 2: best-validation adafnn(%g,%g) test mse %.4g (< 0.05 "
            "%s); 4-function spline pipeline test mse %.4g (> 0.5 %s), "
            "%.0fs (< 600s)",
            ada->lambda1, ada->lambda2, ada->test_metric,
            ada_ok ? "ok" : "VIOLATED", bs->test_metric,
            bs_ok ? "ok" : "VIOLATED", secs));
  } catch (const std::exception& e) {
    gate.record(5, false, fmt("case 2: %s", e.what()));
  }
}

// ---------------------------------------------------------------------------
// 6. Benchmark case 4 signal recovery: the linear signal lies close to the
//    span of the learned bases, and both bases are quiet on the right
//    quarter of the domain where neither signal has support.

void check_case4(Gate& gate) {
  Clock clock;
  ExperimentConfig cfg;
  cfg.sim_case = 4;
  MethodSpec adafnn;
  cfg.methods = {adafnn};
  cfg.num_bases = 2;
  cfg.seeds = {1, 2, 3};
  cfg.output_dir = (work_dir() / "case4").string();

  try {
    ExperimentSummary summary = run_experiment(cfg);
    const RunResult* best = best_validation(summary.runs, adafnn);
    if (best == nullptr) {
      gate.record(6, false, "case 4: a training run failed; see errors.log");
      return;
    }
    BasisDump dump = load_run_bases(summary.dir, adafnn, best->seed);
    Grid g(dump.t);
    QuadratureRule q = make_quadrature(g, RuleKind::trapezoid);

    std::vector<double> target(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
      target[j] = beta_signal_2(g[j]);
    }

    // Least-squares projection of the linear signal onto the basis span.
    std::size_t d = dump.curves.size();
    Matrix gram(d, d);
    std::vector<double> rhs(d);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        gram(i, j) = inner_product(dump.curves[i], dump.curves[j], q);
      }
      rhs[i] = inner_product(dump.curves[i], target, q);
    }
    std::vector<double> coef = cholesky_solve(cholesky_factor(gram), rhs);
    std::vector<double> resid = target;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        resid[j] -= coef[i] * dump.curves[i][j];
      }
    }
    double rel = l2_norm(resid, q) / l2_norm(target, q);

    // Mean absolute level on the dead zone versus the active region.
    double worst_ratio = 0.0;
    for (const std::vector<double>& b : dump.curves) {
      double hi = 0.0, lo = 0.0;
      std::size_t nhi = 0, nlo = 0;
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (g[j] >= 0.75) {
          hi += std::abs(b[j]);
          ++nhi;
        } else {
          lo += std::abs(b[j]);
          ++nlo;
        }
      }
      worst_ratio = std::max(worst_ratio, (hi / nhi) / (lo / nlo));
    }

    double secs = clock.seconds();
    bool span_ok = rel < 0.3;
    bool dead_ok = worst_ratio < 0.25;
    bool pass = span_ok && dead_ok;
    gate.record(
        6, pass,
        fmt("case 4: linear-signal span residual %.3f (< 0.3 %s); dead-zone "
            "level ratio %.3f (< 0.25 %s) on the best run (seed %llu), "
            "%.0fs",
            rel, span_ok ? "ok" : "VIOLATED", worst_ratio,
            dead_ok ? "ok" : "VIOLATED",
            static_cast<unsigned long long>(best->seed), secs));
  } catch (const std::exception& e) {
    gate.record(6, false, fmt("case 4: %s", e.what()));
  }
}

// ---------------------------------------------------------------------------
// 7. Benchmark case 5: the two regularized configurations are expected to
//    beat the unregularized one by 15% on the median of five seeds, and the
//    orthogonality-regularized run must learn clearly separated bases. The
//    unregularized cosine is reported, not asserted. The margin halves
//    encode a degenerate-training phenomenon in the reference tables
//    (near-duplicate bases); the measured medians are printed either way.

void check_case5(Gate& gate) {
  Clock clock;
  ExperimentConfig cfg;
  cfg.sim_case = 5;
  MethodSpec plain;
  MethodSpec ortho;
  ortho.lambda1 = 0.5;
  MethodSpec sparse;
  sparse.lambda2 = 0.1;
  cfg.methods = {plain, ortho, sparse};
  cfg.num_bases = 2;
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.output_dir = (work_dir() / "case5").string();

  try {
    ExperimentSummary summary = run_experiment(cfg);
    auto tests_of = [&](const MethodSpec& m) {
      std::vector<double> out;
      for (const RunResult& r : summary.runs) {
        if (!r.failed && r.method == m.name() && r.lambda1 == m.lambda1 &&
            r.lambda2 == m.lambda2) {
          out.push_back(r.test_metric);
        }
      }
      return out;
    };
    std::vector<double> base_tests = tests_of(plain);
    std::vector<double> ortho_tests = tests_of(ortho);
    std::vector<double> sparse_tests = tests_of(sparse);
    if (base_tests.size() != 5 || ortho_tests.size() != 5 ||
        sparse_tests.size() != 5) {
      gate.record(7, false, "case 5: a training run failed; see errors.log");
      return;
    }
    double m0 = median(base_tests);
    double m1 = median(ortho_tests);
    double m2 = median(sparse_tests);
    bool ortho_margin = m1 <= 0.85 * m0;
    bool sparse_margin = m2 <= 0.85 * m0;

    const RunResult* best_ortho = best_validation(summary.runs, ortho);
    const RunResult* best_plain = best_validation(summary.runs, plain);
    BasisDump ob = load_run_bases(summary.dir, ortho, best_ortho->seed);
    BasisDump pb = load_run_bases(summary.dir, plain, best_plain->seed);
    double ortho_cos = std::abs(curve_cosine(ob, 0, 1));
    double plain_cos = std::abs(curve_cosine(pb, 0, 1));
    bool cos_ok = ortho_cos < 0.3;

    double secs = clock.seconds();
    bool pass = ortho_margin && sparse_margin && cos_ok;
    gate.record(
        7, pass,
        fmt("case 5: median test mse plain %.3f, orthogonality-regularized "
            "%.3f (need <= %.3f %s), sparsity-regularized %.3f (need <= %.3f "
            "%s); regularized basis |cos| %.3f (< 0.3 %s), unregularized "
            "|cos| %.3f (reported only), %.0fs",
            m0, m1, 0.85 * m0, ortho_margin ? "ok" : "VIOLATED", m2, 0.85 * m0,
            sparse_margin ? "ok" : "VIOLATED", ortho_cos,
            cos_ok ? "ok" : "VIOLATED", plain_cos, secs));
  } catch (const std::exception& e) {
    gate.record(7, false, fmt("case 5: %s", e.what()));
  }
}

// ---------------------------------------------------------------------------
// 8. Rank-based AUC equals the brute-force pair count exactly on random
//    instances with heavy ties.

void check_auc(Gate& gate) {
  Rng rng(1234);
  int exact = 0;
  const int kInstances = 50;
  for (int i = 0; i < kInstances; ++i) {
    std::size_t n = 2 + rng.below(39);
    std::vector<double> scores(n), labels(n);
    bool has0 = false, has1 = false;
    for (std::size_t k = 0; k < n; ++k) {
      scores[k] = i % 2 == 0 ? static_cast<double>(rng.below(6))
                             : rng.uniform(-1.0, 1.0);
      labels[k] = static_cast<double>(rng.below(2));
      (labels[k] == 1.0 ? has1 : has0) = true;
    }
    if (!has0) labels[0] = 0.0;
    if (!has1) labels[n - 1] = 1.0;

    double wins = 0.0, pairs = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (labels[a] != 1.0) continue;
      for (std::size_t b = 0; b < n; ++b) {
        if (labels[b] != 0.0) continue;
        pairs += 1.0;
        if (scores[a] > scores[b]) {
          wins += 1.0;
        } else if (scores[a] == scores[b]) {
          wins += 0.5;
        }
      }
    }
    if (roc_auc(scores, labels) == wins / pairs) ++exact;
  }
  bool pass = exact == kInstances;
  gate.record(8, pass,
              fmt("auc: rank form matched the brute-force pair count exactly "
                  "on %d of %d random tied instances",
                  exact, kInstances));
}

// ---------------------------------------------------------------------------
// 9. Rerunning an experiment with the same configuration and seeds yields a
//    byte-identical results.csv (which carries no timing fields), whatever
//    the worker count.

void check_reproducibility(Gate& gate) {
  Clock clock;
  auto tiny = [](const std::string& out) {
    ExperimentConfig cfg;
    cfg.sim_case = 1;
    cfg.n_train = 40;
    cfg.n_val = 10;
    cfg.n_test = 10;
    MethodSpec ada;
    ada.lambda1 = 0.5;
    ada.lambda2 = 1.0;
    MethodSpec raw;
    raw.kind = MethodSpec::Kind::raw;
    cfg.methods = {ada, raw};
    cfg.preset = ArchPreset::small;
    cfg.num_bases = 2;
    cfg.train.max_epochs = 3;
    cfg.train.patience = 2;
    cfg.train.batch_size = 16;
    cfg.seeds = {1, 2};
    cfg.output_dir = out;
    return cfg;
  };

  try {
    ExperimentSummary a = run_experiment(tiny((work_dir() / "repA").string()));
    ExperimentSummary b = run_experiment(tiny((work_dir() / "repB").string()));
    setenv("ADAFNN_THREADS", "2", 1);
    ExperimentSummary c = run_experiment(tiny((work_dir() / "repC").string()));
    unsetenv("ADAFNN_THREADS");

    std::string ra = read_file_bytes(a.dir / "results.csv");
    std::string rb = read_file_bytes(b.dir / "results.csv");
    std::string rc = read_file_bytes(c.dir / "results.csv");
    bool pass = !ra.empty() && ra == rb && ra == rc;
    gate.record(9, pass,
                fmt("reproducibility: rerun and 2-worker rerun produced "
                    "byte-identical results.csv (%zu bytes), %.0fs",
                    ra.size(), clock.seconds()));
  } catch (const std::exception& e) {
    unsetenv("ADAFNN_THREADS");
    gate.record(9, false, fmt("reproducibility: %s", e.what()));
  }
}

}  // namespace

int main() {
  Clock total;
  Gate gate;
  check_gradients(gate);
  check_quadrature(gate);
  check_fpca_oracle(gate);
  check_case1(gate);
  check_case2(gate);
  check_case4(gate);
  check_case5(gate);
  check_auc(gate);
  check_reproducibility(gate);
  std::printf("%d of %d criteria pass, total %.0fs\n", gate.passed,
              gate.passed + gate.failed, total.seconds());
  return gate.failed == 0 ? 0 : 1;
}
