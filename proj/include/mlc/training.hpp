#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mlc/label_space.hpp"
#include "mlc/losses.hpp"
#include "mlc/metrics.hpp"
#include "mlc/model.hpp"

namespace mlc {

struct NadamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

enum class Monitor { loss, f1 };

inline Monitor parse_monitor(const std::string& s) {
  if (s == "loss") return Monitor::loss;
  if (s == "f1") return Monitor::f1;
  throw std::invalid_argument("unknown monitor '" + s + "'");
}

struct PlateauPolicy {
  double factor = 0.2;
  std::size_t patience = 5;
  Monitor monitor = Monitor::f1;
};

struct EarlyStopping {
  std::size_t patience = 5;  // monitors validation F1
};

enum class Augmentation { none, hflip };

struct TrainingConfig {
  LossSpec loss;
  std::size_t batch_size = 32;
  double learning_rate = 1e-5;
  NadamConfig optimizer;
  Augmentation augmentation = Augmentation::none;
  std::optional<PlateauPolicy> lr_reduction;
  EarlyStopping early_stopping;
  std::size_t max_epochs = 100;
  double threshold = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (lr_reduction) {
      if (!(lr_reduction->factor > 0.0 && lr_reduction->factor < 1.0))
        throw std::invalid_argument("lr reduction factor must lie in (0,1)");
      if (lr_reduction->patience < 1)
        throw std::invalid_argument("lr reduction patience must be >= 1");
    }
    if (early_stopping.patience < 1)
      throw std::invalid_argument("early stopping patience must be >= 1");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  // counted from 0
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
  double learning_rate = 0.0;
};

// Strict improvement by more than this margin, to avoid float-noise resets.
inline constexpr double kImprovementMargin = 1e-6;

// Doubles the dataset: each original sample is followed by its horizontally
// flipped copy with identical labels and the id suffixed "-hflip".
inline Dataset augment_hflip(const Dataset& d) {
  Dataset out;
  out.vocabulary = d.vocabulary;
  out.samples.reserve(d.samples.size() * 2);
  for (const auto& s : d.samples) {
    if (!s.features.is_image())
      throw std::invalid_argument("augmentation requires images");
    out.samples.push_back(s);
    LabeledSample flipped = s;
    flipped.sample_id += "-hflip";
    flipped.features = s.features.hflip();
    out.samples.push_back(std::move(flipped));
  }
  return out;
}

// Seeded uniform shuffle then halve; the first ceil(n/2) samples go to val1.
inline std::pair<Dataset, Dataset> split_validation(const Dataset& d, std::uint64_t seed) {
  if (d.samples.size() < 2) throw std::invalid_argument("need at least 2 samples to split");
  std::vector<std::size_t> order(d.samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t half = (order.size() + 1) / 2;
  Dataset val1, val2;
  val1.vocabulary = d.vocabulary;
  val2.vocabulary = d.vocabulary;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < half ? val1 : val2).samples.push_back(d.samples[order[i]]);
  return {std::move(val1), std::move(val2)};
}

struct NadamState {
  std::vector<Matrix> m_weights, v_weights;
  std::vector<std::vector<double>> m_biases, v_biases;

  static NadamState zeros_like(const ModelParams& params) {
    NadamState s;
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
      s.m_weights.emplace_back(params.weights[l].rows, params.weights[l].cols);
      s.v_weights.emplace_back(params.weights[l].rows, params.weights[l].cols);
      s.m_biases.emplace_back(params.biases[l].size(), 0.0);
      s.v_biases.emplace_back(params.biases[l].size(), 0.0);
    }
    return s;
  }
};

namespace detail {
inline void nadam_update(double* theta, const double* g, double* m, double* v,
                         std::size_t n, std::size_t t, double lr, const NadamConfig& c) {
  const double b1t = std::pow(c.beta1, static_cast<double>(t));
  const double b2t = std::pow(c.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
    const double m_hat = m[i] / (1.0 - b1t);
    const double v_hat = v[i] / (1.0 - b2t);
    theta[i] -= lr * (c.beta1 * m_hat + (1.0 - c.beta1) * g[i] / (1.0 - b1t)) /
                (std::sqrt(v_hat) + c.epsilon);
  }
}
}  // namespace detail

// One NAdam update, t counting from 1.
inline void nadam_step(ModelParams& params, const ParamGrads& grads, NadamState& state,
                       std::size_t t, double lr, const NadamConfig& cfg = {}) {
  if (t < 1) throw std::invalid_argument("nadam_step: t must be >= 1");
  if (grads.weights.size() != params.layer_count())
    throw std::invalid_argument("nadam_step: gradient shape mismatch");
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    if (!grads.weights[l].same_shape(params.weights[l]) ||
        grads.biases[l].size() != params.biases[l].size())
      throw std::invalid_argument("nadam_step: gradient shape mismatch");
    detail::nadam_update(params.weights[l].data.data(), grads.weights[l].data.data(),
                         state.m_weights[l].data.data(), state.v_weights[l].data.data(),
                         params.weights[l].data.size(), t, lr, cfg);
    detail::nadam_update(params.biases[l].data(), grads.biases[l].data(),
                         state.m_biases[l].data(), state.v_biases[l].data(),
                         params.biases[l].size(), t, lr, cfg);
  }
}

// Replays the scripted history: when the monitored metric has not improved
// for `patience` consecutive epochs the lr is multiplied by `factor`, then a
// cooldown of `patience` epochs applies before the next possible reduction.
inline double reduce_lr_on_plateau(const std::vector<EpochRecord>& history,
                                   const PlateauPolicy& policy, double initial_lr) {
  double lr = initial_lr;
  double best = policy.monitor == Monitor::f1
                    ? -std::numeric_limits<double>::infinity()
                    : std::numeric_limits<double>::infinity();
  std::size_t bad = 0, cooldown = 0;
  for (const auto& rec : history) {
    const double value = policy.monitor == Monitor::f1 ? rec.val_f1 : rec.val_loss;
    const bool improved = policy.monitor == Monitor::f1
                              ? value > best + kImprovementMargin
                              : value < best - kImprovementMargin;
    if (improved) {
      best = value;
      bad = 0;
    } else if (cooldown > 0) {
      --cooldown;
    } else if (++bad >= policy.patience) {
      lr *= policy.factor;
      bad = 0;
      cooldown = policy.patience;
    }
  }
  return lr;
}

struct TrainResult {
  ModelParams best_params;
  std::vector<EpochRecord> history;
};

// Epoch loop: seeded shuffle, fixed-size batches (last partial batch kept),
// forward/loss/backward/NAdam per batch; per-epoch validation loss and
// mean F1 at cfg.threshold; keeps the parameters of the best-val-F1 epoch
// (ties -> earliest) and stops early when val F1 stagnates.
inline TrainResult train(const ModelParams& initial, const Dataset& train_set,
                         const Dataset& val_set, const TrainingConfig& cfg) {
  cfg.validate();
  if (train_set.samples.empty() || val_set.samples.empty())
    throw std::invalid_argument("train: datasets must be non-empty");

  const Dataset& effective_train =
      cfg.augmentation == Augmentation::hflip ? augment_hflip(train_set) : train_set;

  const Matrix val_x = features_to_matrix(val_set.samples);
  const Matrix val_y = labels_to_matrix(val_set.samples);
  std::vector<MultiHotVector> val_truth;
  for (const auto& s : val_set.samples) val_truth.push_back(s.labels);

  TrainResult result;
  result.best_params = initial;
  ModelParams params = initial;
  NadamState state = NadamState::zeros_like(params);
  std::mt19937_64 shuffle_rng(cfg.seed);
  std::mt19937_64 dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  double best_f1 = -1.0;
  std::size_t epochs_since_best = 0;
  std::size_t step = 0;
  double lr = cfg.learning_rate;

  std::vector<std::size_t> order(effective_train.samples.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, order.size());
      std::vector<LabeledSample> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i)
        batch.push_back(effective_train.samples[order[i]]);
      const Matrix x = features_to_matrix(batch);
      const Matrix y = labels_to_matrix(batch);
      ForwardCache cache;
      const Matrix pred = forward(params, x, RunMode::train, &dropout_rng, &cache);
      const LossOutput loss = evaluate_loss(cfg.loss, y, pred);
      const ParamGrads grads = backward(params, cache, loss.gradient);
      nadam_step(params, grads, state, ++step, lr, cfg.optimizer);
      loss_sum += loss.value * static_cast<double>(end - begin);
      seen += end - begin;
    }

    const Matrix val_pred = forward(params, val_x, RunMode::eval);
    const double val_loss = evaluate_loss(cfg.loss, val_y, val_pred).value;
    std::vector<MultiHotVector> val_hard;
    val_hard.reserve(val_pred.rows);
    for (std::size_t i = 0; i < val_pred.rows; ++i) {
      PredictionVector row(val_pred.data.begin() + i * val_pred.cols,
                           val_pred.data.begin() + (i + 1) * val_pred.cols);
      val_hard.push_back(threshold_predictions(row, cfg.threshold));
    }
    const double val_f1 = mean_f1(val_truth, val_hard);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    rec.val_loss = val_loss;
    rec.val_f1 = val_f1;
    rec.learning_rate = lr;
    result.history.push_back(rec);

    if (val_f1 > best_f1 + kImprovementMargin) {
      best_f1 = val_f1;
      result.best_params = params;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    if (epochs_since_best >= cfg.early_stopping.patience) break;

    if (cfg.lr_reduction)
      lr = reduce_lr_on_plateau(result.history, *cfg.lr_reduction, cfg.learning_rate);
  }
  return result;
}

// `epoch,train_loss,val_loss,val_f1,lr` with 17-significant-digit floats.
inline std::string history_to_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,val_loss,val_f1,lr\n";
  char buf[160];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", r.epoch,
                  r.train_loss, r.val_loss, r.val_f1, r.learning_rate);
    out += buf;
  }
  return out;
}

}  // namespace mlc
