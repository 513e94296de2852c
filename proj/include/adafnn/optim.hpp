#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "adafnn/errors.hpp"
#include "adafnn/matrix.hpp"
#include "adafnn/tape.hpp"

namespace adafnn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment estimates are kept per parameter and
// keyed by position, so the same parameter list must be passed every step.
class Adam {
 public:
  using Config = AdamConfig;

  explicit Adam(Config cfg = {}) : cfg_(cfg) {
    if (cfg_.lr <= 0.0) throw config_error("adam: learning rate must be positive");
    if (cfg_.beta1 < 0.0 || cfg_.beta1 >= 1.0 || cfg_.beta2 < 0.0 || cfg_.beta2 >= 1.0) {
      throw config_error("adam: betas must lie in [0,1)");
    }
    if (cfg_.eps <= 0.0) throw config_error("adam: eps must be positive");
  }

  void step(std::span<Param* const> params) {
    if (m_.empty()) {
      for (Param* p : params) {
        m_.emplace_back(p->value.rows(), p->value.cols());
        v_.emplace_back(p->value.rows(), p->value.cols());
      }
    }
    if (m_.size() != params.size()) {
      throw config_error("adam: parameter list changed between steps");
    }
    ++t_;
    double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Param& p = *params[k];
      if (!m_[k].same_shape(p.value)) {
        throw config_error("adam: parameter " + std::to_string(k) +
                           " changed shape");
      }
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        double g = p.grad.data()[i];
        double& m = m_[k].data()[i];
        double& v = v_[k].data()[i];
        m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
        v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
        double mhat = m / c1;
        double vhat = v / c2;
        p.value.data()[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  std::size_t steps_taken() const { return t_; }

 private:
  Config cfg_;
  std::size_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

// One decayed gradient descent update at step index t >= 1. The rate is
//   rate(t) = min(lr, c / t)
// which is constant early on and decays like c/t once c/t drops below lr,
// so it is non-increasing in t.
inline void sgd_step(std::span<Param* const> params, std::size_t t, double lr,
                     double c) {
  if (t == 0) throw config_error("sgd: step index starts at 1");
  double a = std::min(lr, c / static_cast<double>(t));
  for (Param* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      p->value.data()[i] -= a * p->grad.data()[i];
    }
  }
}

struct DecaySgdConfig {
  double lr = 1e-3;
  double c = 1.0;
};

// Stateful wrapper that tracks the step counter.
class DecaySgd {
 public:
  using Config = DecaySgdConfig;

  explicit DecaySgd(Config cfg = {}) : cfg_(cfg) {
    if (cfg_.lr <= 0.0 || cfg_.c <= 0.0) {
      throw config_error("sgd: lr and c must be positive");
    }
  }

  double rate(std::size_t t) const {
    return std::min(cfg_.lr, cfg_.c / static_cast<double>(t));
  }

  void step(std::span<Param* const> params) {
    ++t_;
    sgd_step(params, t_, cfg_.lr, cfg_.c);
  }

  std::size_t steps_taken() const { return t_; }

 private:
  Config cfg_;
  std::size_t t_ = 0;
};

// Euclidean norm of the full parameter vector, treating all parameters as
// one flattened vector.
inline double weight_norm(std::span<Param* const> params) {
  double s = 0.0;
  for (const Param* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double v = p->value.data()[i];
      s += v * v;
    }
  }
  return std::sqrt(s);
}

// Adds the gradient of rho * ||theta||_2 to every parameter gradient and
// returns the penalty value. The norm is not squared, so the gradient is
// rho * theta / ||theta||; at theta = 0 the subgradient 0 is used.
inline double weight_norm_penalty(std::span<Param* const> params, double rho) {
  double norm = weight_norm(params);
  if (rho != 0.0 && norm > 0.0) {
    double scale = rho / norm;
    for (Param* p : params) {
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        p->grad.data()[i] += scale * p->value.data()[i];
      }
    }
  }
  return rho * norm;
}

inline void zero_grads(std::span<Param* const> params) {
  for (Param* p : params) p->zero_grad();
}

}  // namespace adafnn
