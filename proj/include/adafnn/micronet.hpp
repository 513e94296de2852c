#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "adafnn/errors.hpp"
#include "adafnn/matrix.hpp"
#include "adafnn/rng.hpp"
#include "adafnn/tape.hpp"

namespace adafnn {

enum class Normalization { none, layer_norm };

inline const char* normalization_name(Normalization n) {
  return n == Normalization::layer_norm ? "layer_norm" : "none";
}

inline Normalization normalization_from_name(const std::string& name) {
  if (name == "none") return Normalization::none;
  if (name == "layer_norm") return Normalization::layer_norm;
  throw config_error("unknown normalization: " + name);
}

enum class Mode { train, eval };

// One fully connected layer. Within a layer the order of operations is
// affine, normalization, activation, dropout, then the skip connection.
// A skip connection requires the layer width to equal its input width.
struct LayerSpec {
  std::size_t width = 0;
  Activation activation = Activation::relu;
  Normalization normalization = Normalization::none;
  double dropout_rate = 0.0;
  bool skip = false;
};

// Small dense feed-forward network. The same type serves as a basis
// function network (input 1, output 1) and as the prediction head on top
// of the basis scores.
class MicroNet {
 public:
  MicroNet() = default;

  MicroNet(std::size_t input_dim, std::vector<LayerSpec> layers, Rng& init_rng)
      : input_dim_(input_dim), specs_(std::move(layers)) {
    if (input_dim_ == 0) throw config_error("network input dimension is 0");
    if (specs_.empty()) throw config_error("network needs at least one layer");
    std::size_t fan_in = input_dim_;
    for (std::size_t l = 0; l < specs_.size(); ++l) {
      const LayerSpec& s = specs_[l];
      if (s.width == 0) {
        throw config_error("layer " + std::to_string(l) + " has width 0");
      }
      if (s.dropout_rate < 0.0 || s.dropout_rate >= 1.0) {
        throw config_error("layer " + std::to_string(l) +
                           " has dropout rate outside [0,1): " +
                           std::to_string(s.dropout_rate));
      }
      if (s.skip && s.width != fan_in) {
        throw config_error("layer " + std::to_string(l) +
                           " has a skip connection but width " +
                           std::to_string(s.width) + " != input width " +
                           std::to_string(fan_in));
      }
      layers_.push_back(make_layer(s, fan_in, init_rng));
      fan_in = s.width;
    }
  }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return specs_.back().width; }
  const std::vector<LayerSpec>& specs() const { return specs_; }

  std::vector<Param*> parameters() {
    std::vector<Param*> out;
    for (Layer& l : layers_) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
      if (l.has_norm) {
        out.push_back(&l.gain);
        out.push_back(&l.shift);
      }
    }
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers_) {
      n += l.weight.size() + l.bias.size();
      if (l.has_norm) n += l.gain.size() + l.shift.size();
    }
    return n;
  }

  // Taped forward pass over a batch, columns are samples. Dropout draws a
  // fresh mask from rng in train mode and is a no-op in eval mode, so eval
  // never touches the stream. Throws train_error if a layer produces a
  // non-finite value.
  Var forward(Tape& tape, Var x, Mode mode, Rng* rng = nullptr) {
    if (tape.value(x).rows() != input_dim_) {
      throw data_error("network expects " + std::to_string(input_dim_) +
                       " input rows, got " + tape.value(x).shape_string());
    }
    Var cur = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Layer& layer = layers_[l];
      const LayerSpec& s = specs_[l];
      Var z = tape.affine(&layer.weight, &layer.bias, cur);
      if (layer.has_norm) z = tape.layer_norm(z, &layer.gain, &layer.shift);
      z = tape.activation(z, s.activation);
      if (mode == Mode::train && s.dropout_rate > 0.0) {
        if (!rng) throw config_error("dropout requires an rng in train mode");
        z = tape.hadamard_const(z, dropout_mask(tape.value(z), s.dropout_rate, *rng));
      }
      if (s.skip) z = tape.add(z, cur);
      check_finite(tape.value(z), l);
      cur = z;
    }
    return cur;
  }

  // Plain forward pass without a tape, always in eval mode.
  Matrix forward_eval(const Matrix& x) const {
    if (x.rows() != input_dim_) {
      throw data_error("network expects " + std::to_string(input_dim_) +
                       " input rows, got " + x.shape_string());
    }
    Matrix cur = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& layer = layers_[l];
      const LayerSpec& s = specs_[l];
      Matrix z = affine_eval(layer, cur);
      if (layer.has_norm) layer_norm_eval(layer, z);
      apply_activation(z, s.activation);
      if (s.skip) {
        for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] += cur.data()[i];
      }
      check_finite(z, l);
      cur = std::move(z);
    }
    return cur;
  }

  std::vector<double> forward_eval(std::span<const double> input) const {
    Matrix x(input_dim_, 1);
    if (input.size() != input_dim_) {
      throw data_error("network expects " + std::to_string(input_dim_) +
                       " inputs, got " + std::to_string(input.size()));
    }
    for (std::size_t i = 0; i < input.size(); ++i) x(i, 0) = input[i];
    Matrix y = forward_eval(x);
    std::vector<double> out(y.rows());
    for (std::size_t i = 0; i < y.rows(); ++i) out[i] = y(i, 0);
    return out;
  }

  // Helper to describe a plain multilayer perceptron: hidden layers of one
  // width followed by a linear output layer.
  static std::vector<LayerSpec> mlp(std::size_t hidden_width,
                                    std::size_t hidden_layers,
                                    std::size_t output_dim,
                                    Activation activation = Activation::relu,
                                    Normalization norm = Normalization::none,
                                    double dropout_rate = 0.0,
                                    bool skip = false) {
    std::vector<LayerSpec> specs;
    for (std::size_t l = 0; l < hidden_layers; ++l) {
      LayerSpec s;
      s.width = hidden_width;
      s.activation = activation;
      s.normalization = norm;
      s.dropout_rate = dropout_rate;
      s.skip = skip && l > 0;  // first hidden layer usually changes width
      specs.push_back(s);
    }
    specs.push_back(LayerSpec{output_dim, Activation::identity,
                              Normalization::none, 0.0, false});
    return specs;
  }

  // Raw access for serialization.
  struct Layer {
    Param weight;  // (width x fan_in)
    Param bias;    // (width x 1)
    bool has_norm = false;
    Param gain;    // (width x 1), layer norm scale
    Param shift;   // (width x 1), layer norm offset
  };
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

 private:
  static Layer make_layer(const LayerSpec& s, std::size_t fan_in, Rng& rng) {
    Layer layer;
    // He style bound for relu, Glorot style otherwise; both uniform. Biases
    // start uniform in +-1/sqrt(fan_in) rather than at zero: with all-zero
    // biases an input of exactly 0 stays 0 through every layer, parking the
    // whole column on the relu kink and giving layer norm a zero-variance
    // column to divide by.
    double limit = s.activation == Activation::relu
                       ? std::sqrt(6.0 / static_cast<double>(fan_in))
                       : std::sqrt(6.0 / static_cast<double>(fan_in + s.width));
    Matrix w(s.width, fan_in);
    for (double& v : w.storage()) v = rng.uniform(-limit, limit);
    layer.weight = Param(std::move(w));
    double bias_limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix bias(s.width, 1);
    for (double& v : bias.storage()) v = rng.uniform(-bias_limit, bias_limit);
    layer.bias = Param(std::move(bias));
    if (s.normalization == Normalization::layer_norm) {
      layer.has_norm = true;
      layer.gain = Param(Matrix(s.width, 1, 1.0));
      layer.shift = Param(Matrix(s.width, 1, 0.0));
    }
    return layer;
  }

  static Matrix dropout_mask(const Matrix& shape_of, double rate, Rng& rng) {
    // Inverted scaling: kept units are multiplied by 1/(1-rate) so the
    // expected activation matches eval mode.
    Matrix mask(shape_of.rows(), shape_of.cols());
    double keep_scale = 1.0 / (1.0 - rate);
    for (double& v : mask.storage()) {
      v = rng.next_double() < rate ? 0.0 : keep_scale;
    }
    return mask;
  }

  static Matrix affine_eval(const Layer& layer, const Matrix& x) {
    Matrix z;
    matmul(layer.weight.value, x, z);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      double b = layer.bias.value(i, 0);
      double* row = z.row(i);
      for (std::size_t j = 0; j < z.cols(); ++j) row[j] += b;
    }
    return z;
  }

  static void layer_norm_eval(const Layer& layer, Matrix& z, double eps = kLayerNormEps) {
    std::size_t m = z.rows(), n = z.cols();
    for (std::size_t j = 0; j < n; ++j) {
      double mu = 0.0;
      for (std::size_t i = 0; i < m; ++i) mu += z(i, j);
      mu /= static_cast<double>(m);
      double var = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double c = z(i, j) - mu;
        var += c * c;
      }
      var /= static_cast<double>(m);
      double inv = 1.0 / std::sqrt(var + eps);
      for (std::size_t i = 0; i < m; ++i) {
        z(i, j) = layer.gain.value(i, 0) * (z(i, j) - mu) * inv +
                  layer.shift.value(i, 0);
      }
    }
  }

  static void apply_activation(Matrix& z, Activation kind) {
    if (kind == Activation::identity) return;
    for (double& v : z.storage()) {
      switch (kind) {
        case Activation::relu: v = v > 0.0 ? v : 0.0; break;
        case Activation::tanh: v = std::tanh(v); break;
        case Activation::sigmoid: v = 1.0 / (1.0 + std::exp(-v)); break;
        default: break;
      }
    }
  }

  static void check_finite(const Matrix& z, std::size_t layer_index) {
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += z.data()[i];
    if (std::isfinite(s)) return;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!std::isfinite(z.data()[i])) {
        throw train_error("non-finite value in layer " +
                          std::to_string(layer_index));
      }
    }
  }

  std::size_t input_dim_ = 0;
  std::vector<LayerSpec> specs_;
  std::vector<Layer> layers_;
};

}  // namespace adafnn
