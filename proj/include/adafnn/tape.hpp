#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adafnn/errors.hpp"
#include "adafnn/matrix.hpp"

namespace adafnn {

enum class Activation { relu, tanh, sigmoid, identity };

// Added to the variance inside layer normalization. Small enough that the
// normalized output has variance 1 within 1e-6 for any input of variance
// above ~1e-2.
inline constexpr double kLayerNormEps = 1e-8;

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    default: return "identity";
  }
}

inline Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity") return Activation::identity;
  throw config_error("unknown activation: " + name);
}

// A trainable tensor. Gradients are accumulated here by Tape::backward and
// consumed by the optimizers.
struct Param {
  Matrix value;
  Matrix grad;

  Param() = default;
  explicit Param(Matrix v) : value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
  std::size_t size() const { return value.size(); }
};

// Handle to a node on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

// Reverse-mode differentiation tape. Operations record their result matrix
// together with a pull-back closure; backward() seeds the root with 1 and
// replays the closures in reverse creation order. Nodes operate on whole
// batches (columns are samples) so the expensive paths run as matrix
// kernels instead of per-scalar graph bookkeeping.
//
// A tape is single use: build a graph, call backward once, throw the tape
// away. Parameters are referenced by pointer and outlive the tape.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }

  double scalar(Var v) const {
    const Matrix& m = nodes_[v.id].value;
    if (m.size() != 1) {
      throw data_error("expected a scalar node, got shape " + m.shape_string());
    }
    return m(0, 0);
  }

  std::size_t node_count() const { return nodes_.size(); }

  // Leaf holding data that is not differentiated through.
  Var constant(Matrix m) { return push(std::move(m), nullptr); }

  // out = w.value * x + b.value broadcast over columns.
  // w: (r x k), x: (k x n), b: (r x 1).
  Var affine(Param* w, Param* b, Var x) {
    const Matrix& xv = value(x);
    if (b->value.rows() != w->value.rows() || b->value.cols() != 1) {
      throw data_error("affine: bias shape " + b->value.shape_string() +
                       " does not match weight " + w->value.shape_string());
    }
    Matrix out;
    matmul(w->value, xv, out);
    for (std::size_t i = 0; i < out.rows(); ++i) {
      double bi = b->value(i, 0);
      double* orow = out.row(i);
      for (std::size_t j = 0; j < out.cols(); ++j) orow[j] += bi;
    }
    std::size_t xid = x.id;
    return push(std::move(out), [w, b, xid](Tape& t, std::size_t self) {
      const Matrix& g = t.nodes_[self].grad;
      const Matrix& xval = t.nodes_[xid].value;
      matmul_nt_acc(g, xval, w->grad);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        const double* grow = g.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) s += grow[j];
        b->grad(i, 0) += s;
      }
      matmul_tn_acc(w->value, g, t.nodes_[xid].grad);
    });
  }

  Var activation(Var x, Activation kind) {
    if (kind == Activation::identity) return x;
    Matrix out = value(x);
    for (double& v : out.storage()) {
      switch (kind) {
        case Activation::relu: v = v > 0.0 ? v : 0.0; break;
        case Activation::tanh: v = std::tanh(v); break;
        case Activation::sigmoid: v = 1.0 / (1.0 + std::exp(-v)); break;
        default: break;
      }
    }
    std::size_t xid = x.id;
    return push(std::move(out), [xid, kind](Tape& t, std::size_t self) {
      const Matrix& g = t.nodes_[self].grad;
      const Matrix& o = t.nodes_[self].value;
      Matrix& gx = t.nodes_[xid].grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        double d = 0.0;
        double ov = o.data()[i];
        switch (kind) {
          case Activation::relu: d = ov > 0.0 ? 1.0 : 0.0; break;
          case Activation::tanh: d = 1.0 - ov * ov; break;
          case Activation::sigmoid: d = ov * (1.0 - ov); break;
          default: d = 1.0; break;
        }
        gx.data()[i] += g.data()[i] * d;
      }
    });
  }

  // Layer normalization over rows, independently per column (per sample):
  // out(:,n) = gain * (x(:,n) - mean) / sqrt(var + eps) + shift.
  // gain and shift are (rows x 1).
  Var layer_norm(Var x, Param* gain, Param* shift, double eps = kLayerNormEps) {
    const Matrix& xv = value(x);
    std::size_t m = xv.rows(), n = xv.cols();
    if (m < 2) throw data_error("layer_norm needs at least 2 rows");
    if (gain->value.rows() != m || shift->value.rows() != m) {
      throw data_error("layer_norm: gain/shift rows do not match input " +
                       xv.shape_string());
    }
    Matrix xhat(m, n);
    std::vector<double> inv(n);
    for (std::size_t j = 0; j < n; ++j) {
      double mu = 0.0;
      for (std::size_t i = 0; i < m; ++i) mu += xv(i, j);
      mu /= static_cast<double>(m);
      double var = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double c = xv(i, j) - mu;
        var += c * c;
      }
      var /= static_cast<double>(m);
      inv[j] = 1.0 / std::sqrt(var + eps);
      for (std::size_t i = 0; i < m; ++i) {
        xhat(i, j) = (xv(i, j) - mu) * inv[j];
      }
    }
    Matrix out(m, n);
    for (std::size_t i = 0; i < m; ++i) {
      double gi = gain->value(i, 0), si = shift->value(i, 0);
      for (std::size_t j = 0; j < n; ++j) {
        out(i, j) = gi * xhat(i, j) + si;
      }
    }
    std::size_t xid = x.id;
    return push(std::move(out), [gain, shift, xid, xhat = std::move(xhat),
                                 inv = std::move(inv)](Tape& t, std::size_t self) {
      const Matrix& g = t.nodes_[self].grad;
      Matrix& gx = t.nodes_[xid].grad;
      std::size_t m = g.rows(), n = g.cols();
      for (std::size_t i = 0; i < m; ++i) {
        double dg = 0.0, ds = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          dg += g(i, j) * xhat(i, j);
          ds += g(i, j);
        }
        gain->grad(i, 0) += dg;
        shift->grad(i, 0) += ds;
      }
      double md = static_cast<double>(m);
      for (std::size_t j = 0; j < n; ++j) {
        double sum1 = 0.0, sum2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          double dxh = g(i, j) * gain->value(i, 0);
          sum1 += dxh;
          sum2 += dxh * xhat(i, j);
        }
        for (std::size_t i = 0; i < m; ++i) {
          double dxh = g(i, j) * gain->value(i, 0);
          gx(i, j) += inv[j] / md * (md * dxh - sum1 - xhat(i, j) * sum2);
        }
      }
    });
  }

  // Elementwise product with a fixed matrix; used for dropout masks.
  Var hadamard_const(Var x, Matrix mask) {
    const Matrix& xv = value(x);
    if (!xv.same_shape(mask)) {
      throw data_error("hadamard_const: mask shape " + mask.shape_string() +
                       " does not match input " + xv.shape_string());
    }
    Matrix out = xv;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= mask.data()[i];
    std::size_t xid = x.id;
    return push(std::move(out), [xid, mask = std::move(mask)](Tape& t, std::size_t self) {
      const Matrix& g = t.nodes_[self].grad;
      Matrix& gx = t.nodes_[xid].grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        gx.data()[i] += g.data()[i] * mask.data()[i];
      }
    });
  }

  Var add(Var a, Var b) {
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (!av.same_shape(bv)) {
      throw data_error("add: shape mismatch " + av.shape_string() + " vs " +
                       bv.shape_string());
    }
    Matrix out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += bv.data()[i];
    std::size_t aid = a.id, bid = b.id;
    return push(std::move(out), [aid, bid](Tape& t, std::size_t self) {
      const Matrix& g = t.nodes_[self].grad;
      Matrix& ga = t.nodes_[aid].grad;
      Matrix& gb = t.nodes_[bid].grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga.data()[i] += g.data()[i];
        gb.data()[i] += g.data()[i];
      }
    });
  }

  // Stacks row vectors (1 x n each) into one (k x n) matrix.
  Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw data_error("concat_rows: no inputs");
    std::size_t n = value(parts[0]).cols();
    std::size_t total = 0;
    for (Var p : parts) {
      if (value(p).cols() != n) {
        throw data_error("concat_rows: column count mismatch");
      }
      total += value(p).rows();
    }
    Matrix out(total, n);
    std::vector<std::pair<std::size_t, std::size_t>> spans;  // (id, first row)
    std::size_t r = 0;
    for (Var p : parts) {
      const Matrix& pv = value(p);
      for (std::size_t i = 0; i < pv.rows(); ++i) {
        for (std::size_t j = 0; j < n; ++j) out(r + i, j) = pv(i, j);
      }
      spans.emplace_back(p.id, r);
      r += pv.rows();
    }
    return push(std::move(out), [spans = std::move(spans)](Tape& t, std::size_t self) {
      const Matrix& g = t.nodes_[self].grad;
      for (auto [id, first] : spans) {
        Matrix& gp = t.nodes_[id].grad;
        for (std::size_t i = 0; i < gp.rows(); ++i) {
          for (std::size_t j = 0; j < gp.cols(); ++j) {
            gp(i, j) += g(first + i, j);
          }
        }
      }
    });
  }

  // out = x * rhs with a fixed right factor.
  Var matmul_const(Var x, Matrix rhs) {
    Matrix out;
    matmul(value(x), rhs, out);
    std::size_t xid = x.id;
    return push(std::move(out), [xid, rhs = std::move(rhs)](Tape& t, std::size_t self) {
      matmul_nt_acc(t.nodes_[self].grad, rhs, t.nodes_[xid].grad);
    });
  }

  // Scalar node: sum_k w_k * x(i,k) * x(j,k). This is the quadrature inner
  // product of two rows of x.
  Var row_weighted_dot(Var x, std::size_t i, std::size_t j,
                       std::span<const double> w) {
    const Matrix& xv = value(x);
    check_row_op(xv, i, w);
    check_row_op(xv, j, w);
    double s = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * xv(i, k) * xv(j, k);
    std::size_t xid = x.id;
    std::vector<double> wcopy(w.begin(), w.end());
    return push(Matrix(1, 1, s), [xid, i, j, wcopy = std::move(wcopy)](
                                     Tape& t, std::size_t self) {
      double g = t.nodes_[self].grad(0, 0);
      const Matrix& xval = t.nodes_[xid].value;
      Matrix& gx = t.nodes_[xid].grad;
      for (std::size_t k = 0; k < wcopy.size(); ++k) {
        gx(i, k) += g * wcopy[k] * xval(j, k);
        gx(j, k) += g * wcopy[k] * xval(i, k);
      }
    });
  }

  // Scalar node: sum_k w_k * |x(i,k)|, the quadrature L1 norm of row i.
  // The sign convention at zero is sign(0) = 0.
  Var row_weighted_abs_sum(Var x, std::size_t i, std::span<const double> w) {
    const Matrix& xv = value(x);
    check_row_op(xv, i, w);
    double s = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * std::abs(xv(i, k));
    std::size_t xid = x.id;
    std::vector<double> wcopy(w.begin(), w.end());
    return push(Matrix(1, 1, s), [xid, i, wcopy = std::move(wcopy)](
                                     Tape& t, std::size_t self) {
      double g = t.nodes_[self].grad(0, 0);
      const Matrix& xval = t.nodes_[xid].value;
      Matrix& gx = t.nodes_[xid].grad;
      for (std::size_t k = 0; k < wcopy.size(); ++k) {
        double v = xval(i, k);
        double sgn = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        gx(i, k) += g * wcopy[k] * sgn;
      }
    });
  }

  Var s_add(Var a, Var b) {
    return push(Matrix(1, 1, scalar(a) + scalar(b)),
                [aid = a.id, bid = b.id](Tape& t, std::size_t self) {
                  double g = t.nodes_[self].grad(0, 0);
                  t.nodes_[aid].grad(0, 0) += g;
                  t.nodes_[bid].grad(0, 0) += g;
                });
  }

  Var s_mul(Var a, Var b) {
    return push(Matrix(1, 1, scalar(a) * scalar(b)),
                [aid = a.id, bid = b.id](Tape& t, std::size_t self) {
                  double g = t.nodes_[self].grad(0, 0);
                  t.nodes_[aid].grad(0, 0) += g * t.nodes_[bid].value(0, 0);
                  t.nodes_[bid].grad(0, 0) += g * t.nodes_[aid].value(0, 0);
                });
  }

  Var s_div(Var a, Var b) {
    double bv = scalar(b);
    if (bv == 0.0) throw data_error("s_div: division by zero");
    return push(Matrix(1, 1, scalar(a) / bv),
                [aid = a.id, bid = b.id](Tape& t, std::size_t self) {
                  double g = t.nodes_[self].grad(0, 0);
                  double av = t.nodes_[aid].value(0, 0);
                  double bv = t.nodes_[bid].value(0, 0);
                  t.nodes_[aid].grad(0, 0) += g / bv;
                  t.nodes_[bid].grad(0, 0) -= g * av / (bv * bv);
                });
  }

  Var s_sqrt(Var a) {
    double av = scalar(a);
    if (av < 0.0) throw data_error("s_sqrt: negative input");
    double out = std::sqrt(av);
    return push(Matrix(1, 1, out), [aid = a.id, out](Tape& t, std::size_t self) {
      if (out == 0.0) return;  // subgradient 0 at the kink
      t.nodes_[aid].grad(0, 0) += t.nodes_[self].grad(0, 0) * 0.5 / out;
    });
  }

  Var s_abs(Var a) {
    double av = scalar(a);
    return push(Matrix(1, 1, std::abs(av)), [aid = a.id](Tape& t, std::size_t self) {
      double v = t.nodes_[aid].value(0, 0);
      double sgn = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      t.nodes_[aid].grad(0, 0) += t.nodes_[self].grad(0, 0) * sgn;
    });
  }

  // Scalar node: sum_k coeff_k * terms_k.
  Var combine(const std::vector<Var>& terms, const std::vector<double>& coeffs) {
    if (terms.size() != coeffs.size() || terms.empty()) {
      throw data_error("combine: need matching, non-empty terms and coeffs");
    }
    double s = 0.0;
    std::vector<std::size_t> ids;
    ids.reserve(terms.size());
    for (std::size_t k = 0; k < terms.size(); ++k) {
      s += coeffs[k] * scalar(terms[k]);
      ids.push_back(terms[k].id);
    }
    return push(Matrix(1, 1, s), [ids = std::move(ids), coeffs](Tape& t,
                                                                std::size_t self) {
      double g = t.nodes_[self].grad(0, 0);
      for (std::size_t k = 0; k < ids.size(); ++k) {
        t.nodes_[ids[k]].grad(0, 0) += g * coeffs[k];
      }
    });
  }

  // Mean squared error between a (1 x n) prediction row and n targets.
  Var mse_loss(Var pred, std::vector<double> targets) {
    const Matrix& p = value(pred);
    if (p.rows() != 1 || p.cols() != targets.size()) {
      throw data_error("mse_loss: prediction shape " + p.shape_string() +
                       " vs " + std::to_string(targets.size()) + " targets");
    }
    double n = static_cast<double>(targets.size());
    double s = 0.0;
    for (std::size_t j = 0; j < targets.size(); ++j) {
      double d = p(0, j) - targets[j];
      s += d * d;
    }
    std::size_t pid = pred.id;
    return push(Matrix(1, 1, s / n), [pid, targets = std::move(targets), n](
                                         Tape& t, std::size_t self) {
      double g = t.nodes_[self].grad(0, 0);
      const Matrix& p = t.nodes_[pid].value;
      Matrix& gp = t.nodes_[pid].grad;
      for (std::size_t j = 0; j < targets.size(); ++j) {
        gp(0, j) += g * 2.0 / n * (p(0, j) - targets[j]);
      }
    });
  }

  // Mean binary cross entropy on logits, computed in the overflow-safe
  // softplus form: l = max(z, 0) - z y + log(1 + exp(-|z|)).
  Var bce_logits_loss(Var pred, std::vector<double> labels) {
    const Matrix& p = value(pred);
    if (p.rows() != 1 || p.cols() != labels.size()) {
      throw data_error("bce_logits_loss: prediction shape " + p.shape_string() +
                       " vs " + std::to_string(labels.size()) + " labels");
    }
    double n = static_cast<double>(labels.size());
    double s = 0.0;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      double z = p(0, j);
      s += std::max(z, 0.0) - z * labels[j] + std::log1p(std::exp(-std::abs(z)));
    }
    std::size_t pid = pred.id;
    return push(Matrix(1, 1, s / n), [pid, labels = std::move(labels), n](
                                         Tape& t, std::size_t self) {
      double g = t.nodes_[self].grad(0, 0);
      const Matrix& p = t.nodes_[pid].value;
      Matrix& gp = t.nodes_[pid].grad;
      for (std::size_t j = 0; j < labels.size(); ++j) {
        double sig = 1.0 / (1.0 + std::exp(-p(0, j)));
        gp(0, j) += g * (sig - labels[j]) / n;
      }
    });
  }

  // Seeds d(root)/d(root) = 1 and runs every pull-back in reverse order.
  // Gradients land in the parameter .grad fields referenced by the ops.
  void backward(Var root) {
    if (consumed_) {
      throw train_error("tape already consumed; build a fresh graph per step");
    }
    consumed_ = true;
    if (nodes_[root.id].value.size() != 1) {
      throw data_error("backward root must be a scalar, got shape " +
                       nodes_[root.id].value.shape_string());
    }
    nodes_[root.id].grad(0, 0) = 1.0;
    for (std::size_t k = root.id + 1; k-- > 0;) {
      if (backs_[k]) backs_[k](*this, k);
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
  };

  using Back = std::function<void(Tape&, std::size_t)>;

  static void check_row_op(const Matrix& x, std::size_t i,
                           std::span<const double> w) {
    if (i >= x.rows()) {
      throw data_error("row index " + std::to_string(i) + " out of range for " +
                       x.shape_string());
    }
    if (w.size() != x.cols()) {
      throw data_error("weight length " + std::to_string(w.size()) +
                       " does not match " + x.shape_string());
    }
  }

  Var push(Matrix value, Back back) {
    Node node;
    node.grad = Matrix(value.rows(), value.cols());
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    backs_.push_back(std::move(back));
    return Var{nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  std::vector<Back> backs_;
  bool consumed_ = false;
};

}  // namespace adafnn
