#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "adafnn/dataset.hpp"
#include "adafnn/errors.hpp"
#include "adafnn/grid.hpp"
#include "adafnn/rng.hpp"

namespace adafnn {

inline constexpr std::size_t kNumCoefficients = 50;
inline constexpr double kRoot3 = 1.7320508075688772;

// Cosine expansion basis: phi_1 = 1, phi_k(t) = sqrt(2) cos((k-1) pi t).
inline double cosine_basis(std::size_t k, double t) {
  if (k == 1) return 1.0;
  return std::sqrt(2.0) *
         std::cos(static_cast<double>(k - 1) * 3.14159265358979323846 * t);
}

// Triangular signal supported on [0, 1/4].
inline double beta_signal_1(double t) {
  if (t < 0.0 || t > 0.25) return 0.0;
  return 4.0 - 16.0 * t;
}

// Triangular signal supported on [1/4, 3/4], peaked at 1/2.
inline double beta_signal_2(double t) {
  if (t < 0.25 || t > 0.75) return 0.0;
  return 4.0 - 16.0 * std::abs(0.5 - t);
}

// <beta_1, phi_k> in closed form: integrate (4-16t) cos((k-1) pi t) over
// [0, 1/4] by parts.
inline double beta1_coefficient(std::size_t k) {
  if (k == 1) return 0.5;
  double w = static_cast<double>(k - 1) * 3.14159265358979323846;
  return std::sqrt(2.0) * 16.0 * (1.0 - std::cos(w / 4.0)) / (w * w);
}

// <beta_2, phi_k>: the same triangle shifted to 1/2, so the integral picks
// up a cos(w/2) factor from the shift and doubles by symmetry.
inline double beta2_coefficient(std::size_t k) {
  if (k == 1) return 1.0;
  double w = static_cast<double>(k - 1) * 3.14159265358979323846;
  return std::sqrt(2.0) * 32.0 * std::cos(w / 2.0) *
         (1.0 - std::cos(w / 4.0)) / (w * w);
}

// Generator settings for one simulation case: coefficient scales, response
// rule (by case id), response-noise level, and the measurement-error
// signal-to-noise target (0 = clean curves).
struct SimCaseSpec {
  int case_id = 1;
  std::vector<double> z;
  double response_noise_sd = 0.0;
  double snr = 0.0;
  std::size_t grid_intervals = 50;
  std::size_t n_train = 1500;
  std::size_t n_val = 300;
  std::size_t n_test = 300;
};

// Curve coefficients c_k = z_k r_k with r_k iid Uniform[-sqrt(3), sqrt(3)]
// (unit variance), drawn in ascending k.
inline std::vector<double> draw_coefficients(const SimCaseSpec& spec, Rng& rng) {
  std::vector<double> c(spec.z.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    c[k] = spec.z[k] * rng.uniform(-kRoot3, kRoot3);
  }
  return c;
}

// Noiseless response from the true coefficients. Inner products against the
// signal functions are computed analytically through the basis coefficients,
// not by quadrature, so the target is exact.
inline double noiseless_response(const SimCaseSpec& spec,
                                 const std::vector<double>& c) {
  switch (spec.case_id) {
    case 1:
      return c[2] * c[2];
    case 2:
    case 3:
      return c[4] * c[4];
    case 4:
    case 5: {
      double lin = 0.0;
      double sq = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        lin += c[k] * beta2_coefficient(k + 1);
        sq += c[k] * beta1_coefficient(k + 1);
      }
      return lin + sq * sq;
    }
    default:
      throw config_error("unknown simulation case " +
                         std::to_string(spec.case_id));
  }
}

namespace detail {

// sd of the noiseless response, estimated once per case from a pinned
// Monte Carlo stream so the value is a reproducible constant. Cases 4 and 5
// share one stream (same rule, same scales), which keeps case 5's variance
// doubling exact rather than exact-up-to-resampling.
inline double response_sd_estimate(const SimCaseSpec& spec) {
  std::uint64_t rule = static_cast<std::uint64_t>(
      spec.case_id == 5 ? 4 : spec.case_id);
  Rng rng(Rng(20260816).derive("response-sd").derive(rule));
  const std::size_t draws = 100000;
  double sum = 0.0;
  double sumsq = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    std::vector<double> c = draw_coefficients(spec, rng);
    double y = noiseless_response(spec, c);
    sum += y;
    sumsq += y * y;
  }
  double mean = sum / static_cast<double>(draws);
  double var = sumsq / static_cast<double>(draws) - mean * mean;
  return std::sqrt(var);
}

}  // namespace detail

// Case presets. Scales z_k follow the case definitions; the response-noise
// sd for the noisy cases defaults to half the sd of the noiseless response
// (doubled variance for case 5), and curves in those cases carry
// measurement error at SNR sqrt(10).
inline SimCaseSpec sim_case_spec(int case_id) {
  SimCaseSpec spec;
  spec.case_id = case_id;
  spec.z.assign(kNumCoefficients, 1.0);
  switch (case_id) {
    case 1:
      spec.z[0] = 20.0;
      spec.z[1] = 5.0;
      spec.z[2] = 5.0;
      break;
    case 2:
    case 3:
      spec.z[0] = 5.0;
      spec.z[2] = 5.0;
      spec.z[4] = 3.0;
      spec.z[9] = 3.0;
      break;
    case 4:
    case 5:
      break;
    default:
      throw config_error("unknown simulation case " + std::to_string(case_id));
  }
  if (case_id >= 3) {
    spec.snr = std::sqrt(10.0);
    double sd = detail::response_sd_estimate(spec);
    spec.response_noise_sd = 0.5 * sd;
    if (case_id == 5) spec.response_noise_sd *= std::sqrt(2.0);
  }
  return spec;
}

// Standard deviation of the pointwise measurement error that hits the
// target SNR: sqrt(E integral X^2) / snr, where E integral X^2 = sum z_k^2
// because the r_k have unit variance and the basis is orthonormal.
inline double measurement_noise_sd(const SimCaseSpec& spec) {
  if (!(spec.snr > 0.0)) return 0.0;
  double total = 0.0;
  for (double z : spec.z) total += z * z;
  return std::sqrt(total) / spec.snr;
}

// One draw of the process on the grid, before any measurement noise. The
// true coefficients ride along for oracle checks and exact responses.
struct CurveDraw {
  std::vector<double> coefficients;
  std::vector<double> values;
};

inline CurveDraw generate_curve(const SimCaseSpec& spec, const Grid& grid,
                                Rng& rng) {
  CurveDraw draw;
  draw.coefficients = draw_coefficients(spec, rng);
  draw.values.assign(grid.size(), 0.0);
  for (std::size_t k = 0; k < draw.coefficients.size(); ++k) {
    double c = draw.coefficients[k];
    if (c == 0.0) continue;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      draw.values[j] += c * cosine_basis(k + 1, grid[j]);
    }
  }
  return draw;
}

inline double make_response(const SimCaseSpec& spec,
                            const std::vector<double>& c, Rng& rng) {
  double y = noiseless_response(spec, c);
  if (spec.response_noise_sd > 0.0) {
    y += rng.normal(0.0, spec.response_noise_sd);
  }
  return y;
}

inline void add_measurement_noise(std::vector<double>& values, double sd,
                                  Rng& rng) {
  if (!(sd > 0.0)) return;
  for (double& v : values) v += rng.normal(0.0, sd);
}

// A complete simulated experiment input: three splits with standardized
// responses and the scaler that maps back to raw response units.
struct SimulatedCase {
  SimCaseSpec spec;
  Grid grid;
  FunctionalDataset train;
  FunctionalDataset val;
  FunctionalDataset test;
  ResponseScaler scaler;
};

inline SimulatedCase build_case(const SimCaseSpec& spec, std::uint64_t seed) {
  Grid grid = Grid::uniform(spec.grid_intervals);
  Rng rng(seed);
  double noise_sd = measurement_noise_sd(spec);

  auto make_split = [&](std::size_t n) {
    FunctionalDataset data{grid, {}, Task::regression};
    data.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      CurveDraw draw = generate_curve(spec, grid, rng);
      FunctionalSample s;
      s.response = make_response(spec, draw.coefficients, rng);
      add_measurement_noise(draw.values, noise_sd, rng);
      s.values = std::move(draw.values);
      data.samples.push_back(std::move(s));
    }
    return data;
  };

  SimulatedCase out{spec,
                    grid,
                    make_split(spec.n_train),
                    make_split(spec.n_val),
                    make_split(spec.n_test),
                    {}};
  out.scaler = ResponseScaler::fit(out.train.responses());
  for (FunctionalDataset* d : {&out.train, &out.val, &out.test}) {
    for (FunctionalSample& s : d->samples) {
      s.response = out.scaler.standardize(*s.response);
    }
  }
  return out;
}

inline SimulatedCase build_case(int case_id, std::uint64_t seed) {
  return build_case(sim_case_spec(case_id), seed);
}

}  // namespace adafnn
