#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "adafnn/dataset.hpp"
#include "adafnn/errors.hpp"
#include "adafnn/grid.hpp"
#include "adafnn/matrix.hpp"
#include "adafnn/metrics.hpp"
#include "adafnn/micronet.hpp"
#include "adafnn/model.hpp"
#include "adafnn/optim.hpp"
#include "adafnn/rng.hpp"
#include "adafnn/tape.hpp"

namespace adafnn {

enum class OptimizerKind { adam, decay_sgd };

struct TrainConfig {
  std::size_t max_epochs = 500;
  std::size_t patience = 200;
  std::size_t batch_size = 128;
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double sgd_decay_c = 1.0;      // numerator of the c/t schedule
  double weight_norm_rho = 0.0;  // optional norm penalty applied in the step
  std::uint64_t seed = 0;

  void validate() const {
    if (max_epochs == 0) throw config_error("train: max_epochs must be >= 1");
    if (patience == 0 || patience > max_epochs) {
      throw config_error("train: patience must lie in [1, max_epochs]");
    }
    if (batch_size == 0) throw config_error("train: batch_size must be >= 1");
    if (learning_rate <= 0.0) {
      throw config_error("train: learning rate must be positive");
    }
    if (weight_norm_rho < 0.0) {
      throw config_error("train: weight norm penalty must be >= 0");
    }
  }
};

struct FitReport {
  std::vector<double> train_losses;  // per epoch, sample-weighted batch mean
  std::vector<double> val_losses;    // per epoch, base loss in eval mode
  std::size_t best_epoch = 0;        // 1-based
  double best_val = std::numeric_limits<double>::infinity();
  double wall_seconds = 0.0;
  double test_metric = std::numeric_limits<double>::quiet_NaN();

  std::size_t epochs_run() const { return val_losses.size(); }
};

// What the training loop needs from a model: a taped batch objective on the
// training split, a regularizer-free validation score, and the parameter
// list for the optimizer and checkpoint snapshots.
class TrainableModel {
 public:
  virtual ~TrainableModel() = default;
  virtual std::vector<Param*> parameters() = 0;
  virtual std::size_t train_size() const = 0;
  virtual Var batch_loss(Tape& tape, std::span<const std::size_t> batch,
                         Rng& rng) = 0;
  virtual double validation_loss() = 0;
};

namespace detail {

// Mean of the data-fit term in eval mode, given predictions (logits for
// classification) and targets.
inline double base_loss(Task task, std::span<const double> predictions,
                        std::span<const double> targets) {
  if (task == Task::regression) return mse(predictions, targets);
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    double z = predictions[i];
    // softplus(z) - y z, in the overflow-safe arrangement
    s += std::max(z, 0.0) - targets[i] * z + std::log1p(std::exp(-std::abs(z)));
  }
  return s / static_cast<double>(predictions.size());
}

}  // namespace detail

// Runs the mini-batch loop with epoch-level early stopping. Mini-batches are
// reshuffled every epoch from a stream derived from config.seed; validation
// is scored after each epoch and the parameters of the best epoch are
// restored before returning, so the trained model never ends on a worse
// checkpoint than the one reported.
inline FitReport fit(TrainableModel& model, const TrainConfig& config) {
  config.validate();
  auto started = std::chrono::steady_clock::now();

  std::vector<Param*> params = model.parameters();
  if (params.empty()) throw config_error("train: model has no parameters");
  const std::size_t n = model.train_size();
  if (n == 0) throw data_error("train: empty training set");

  Adam adam(AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});
  DecaySgd sgd(DecaySgdConfig{config.learning_rate, config.sgd_decay_c});

  Rng shuffle_rng = Rng(config.seed).derive("shuffle");
  Rng dropout_rng = Rng(config.seed).derive("dropout");

  auto snapshot = [&]() {
    std::vector<double> flat;
    for (Param* p : params) {
      flat.insert(flat.end(), p->value.storage().begin(),
                  p->value.storage().end());
    }
    return flat;
  };
  auto restore = [&](const std::vector<double>& flat) {
    std::size_t at = 0;
    for (Param* p : params) {
      for (double& v : p->value.storage()) v = flat[at++];
    }
  };

  FitReport report;
  std::vector<double> best_params;
  std::size_t since_improvement = 0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      std::size_t stop = std::min(n, start + config.batch_size);
      std::span<const std::size_t> batch(order.data() + start, stop - start);
      Tape tape;
      Var loss;
      try {
        loss = model.batch_loss(tape, batch, dropout_rng);
      } catch (const train_error& e) {
        throw train_error("epoch " + std::to_string(epoch) + ", batch at " +
                          std::to_string(start) + ": " + e.what());
      }
      double value = tape.value(loss)(0, 0);
      if (!std::isfinite(value)) {
        throw train_error("epoch " + std::to_string(epoch) + ", batch at " +
                          std::to_string(start) + ": loss is not finite");
      }
      epoch_loss += value * static_cast<double>(batch.size());
      zero_grads(params);
      tape.backward(loss);
      if (config.weight_norm_rho > 0.0) {
        weight_norm_penalty(params, config.weight_norm_rho);
      }
      if (config.optimizer == OptimizerKind::adam) {
        adam.step(params);
      } else {
        sgd.step(params);
      }
    }
    report.train_losses.push_back(epoch_loss / static_cast<double>(n));

    double val = model.validation_loss();
    if (!std::isfinite(val)) {
      throw train_error("epoch " + std::to_string(epoch) +
                        ": validation loss is not finite");
    }
    report.val_losses.push_back(val);

    if (val < report.best_val) {
      report.best_val = val;
      report.best_epoch = epoch;
      best_params = snapshot();
      since_improvement = 0;
    } else {
      ++since_improvement;
      if (since_improvement >= config.patience) break;
    }
  }

  restore(best_params);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  return report;
}

// Basis-network model bound to its splits and quadrature rule.
class AdafnnTrainable : public TrainableModel {
 public:
  AdafnnTrainable(BasisNetModel& model, const FunctionalDataset& train,
                  const FunctionalDataset& val, QuadratureRule rule)
      : model_(model), train_(train), val_(val), rule_(std::move(rule)) {
    train_.validate();
    val_.validate();
    if (!(train_.grid == val_.grid)) {
      throw data_error("train and validation sets live on different grids");
    }
    if (!train_.fully_labeled() || !val_.fully_labeled()) {
      throw data_error("training requires labeled samples");
    }
  }

  std::vector<Param*> parameters() override { return model_.parameters(); }
  std::size_t train_size() const override { return train_.size(); }

  Var batch_loss(Tape& tape, std::span<const std::size_t> batch,
                 Rng& rng) override {
    return model_.total_loss(tape, train_, batch, rule_, Mode::train, rng);
  }

  double validation_loss() override {
    std::vector<double> pred = model_.predict(val_, rule_);
    return detail::base_loss(model_.task(), pred, val_.responses());
  }

  std::vector<double> predict(const FunctionalDataset& data) const {
    return model_.predict(data, rule_);
  }

 private:
  BasisNetModel& model_;
  const FunctionalDataset& train_;
  const FunctionalDataset& val_;
  QuadratureRule rule_;
};

// Head network over fixed vector features (raw values, spline coefficients,
// principal-component scores). Features are stored one sample per column.
class VectorTrainable : public TrainableModel {
 public:
  VectorTrainable(MicroNet& net, Task task, Matrix train_features,
                  std::vector<double> train_targets, Matrix val_features,
                  std::vector<double> val_targets)
      : net_(net),
        task_(task),
        train_x_(std::move(train_features)),
        train_y_(std::move(train_targets)),
        val_x_(std::move(val_features)),
        val_y_(std::move(val_targets)) {
    if (train_x_.cols() != train_y_.size() || val_x_.cols() != val_y_.size()) {
      throw data_error("feature columns and target counts differ");
    }
    if (train_x_.rows() != val_x_.rows()) {
      throw data_error("train and validation feature dimensions differ");
    }
    if (train_y_.empty()) throw data_error("no training samples");
  }

  std::vector<Param*> parameters() override { return net_.parameters(); }
  std::size_t train_size() const override { return train_y_.size(); }

  Var batch_loss(Tape& tape, std::span<const std::size_t> batch,
                 Rng& rng) override {
    Matrix x(train_x_.rows(), batch.size());
    std::vector<double> y(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      for (std::size_t r = 0; r < train_x_.rows(); ++r) {
        x(r, b) = train_x_(r, batch[b]);
      }
      y[b] = train_y_[batch[b]];
    }
    Var out = net_.forward(tape, tape.constant(std::move(x)), Mode::train, &rng);
    return task_ == Task::regression ? tape.mse_loss(out, y)
                                     : tape.bce_logits_loss(out, y);
  }

  double validation_loss() override {
    std::vector<double> pred = predict(val_x_);
    return detail::base_loss(task_, pred, val_y_);
  }

  std::vector<double> predict(const Matrix& features) const {
    if (features.rows() != train_x_.rows()) {
      throw data_error("feature dimension " + std::to_string(features.rows()) +
                       " does not match the trained model's " +
                       std::to_string(train_x_.rows()));
    }
    Matrix out = net_.forward_eval(features);
    return std::vector<double>(out.storage().begin(), out.storage().end());
  }

  Task task() const { return task_; }

 private:
  MicroNet& net_;
  Task task_;
  Matrix train_x_;
  std::vector<double> train_y_;
  Matrix val_x_;
  std::vector<double> val_y_;
};

}  // namespace adafnn
