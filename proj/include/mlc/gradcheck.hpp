#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "mlc/losses.hpp"
#include "mlc/model.hpp"

namespace mlc {

// Central-difference step. Loss values are O(1), so the finite-difference
// roundoff (~eps/h) stays around 1e-10 absolute.
inline constexpr double kFiniteDiffStep = 1e-6;

// |a-b| / max(|a|, |b|, 1e-4): relative for meaningful magnitudes, absolute
// (scaled) where both gradients are tiny and relative error is ill-posed.
inline double gradcheck_rel_error(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-4});
  return std::fabs(analytic - numeric) / denom;
}

// Max relative error between the analytic prediction-gradient of a loss and
// central finite differences, on one random (truth, pred) batch with
// predictions strictly inside (0,1).
inline double loss_gradient_max_rel_error(const LossSpec& spec, std::size_t batch,
                                          std::size_t k, std::mt19937_64& rng,
                                          double h = kFiniteDiffStep) {
  std::uniform_real_distribution<double> uni(0.05, 0.95);
  std::bernoulli_distribution coin(0.3);
  Matrix truth(batch, k), pred(batch, k);
  for (auto& y : truth.data) y = coin(rng) ? 1.0 : 0.0;
  for (auto& p : pred.data) p = uni(rng);

  const LossOutput out = evaluate_loss(spec, truth, pred);
  double max_err = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    Matrix plus = pred, minus = pred;
    plus.data[i] += h;
    minus.data[i] -= h;
    const double numeric =
        (evaluate_loss(spec, truth, plus).value - evaluate_loss(spec, truth, minus).value) /
        (2.0 * h);
    max_err = std::max(max_err, gradcheck_rel_error(out.gradient.data[i], numeric));
  }
  return max_err;
}

// Max relative error of the full-pipeline parameter gradient
// (loss of forward(x)) versus finite differences, dropout off.
inline double model_gradient_max_rel_error(const LossSpec& spec, const HeadConfig& cfg,
                                           std::size_t input_dim, std::size_t batch,
                                           std::mt19937_64& rng,
                                           double h = kFiniteDiffStep) {
  ModelParams params = init_model(cfg, input_dim);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::bernoulli_distribution coin(0.3);
  for (auto& w : params.weights)
    for (auto& x : w.data) x = uni(rng);
  for (auto& b : params.biases)
    for (auto& x : b) x = 0.1 * uni(rng);
  Matrix x(batch, input_dim);
  for (auto& v : x.data) v = uni(rng);
  Matrix y(batch, cfg.output_size);
  for (auto& v : y.data) v = coin(rng) ? 1.0 : 0.0;

  ForwardCache cache;
  const Matrix pred = forward(params, x, RunMode::train, &rng, &cache);
  const LossOutput loss = evaluate_loss(spec, y, pred);
  const ParamGrads grads = backward(params, cache, loss.gradient);

  const auto loss_at = [&](const ModelParams& p) {
    return evaluate_loss(spec, y, forward(p, x, RunMode::eval)).value;
  };

  double max_err = 0.0;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    for (std::size_t i = 0; i < params.weights[l].data.size(); ++i) {
      ModelParams plus = params, minus = params;
      plus.weights[l].data[i] += h;
      minus.weights[l].data[i] -= h;
      const double numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
      max_err = std::max(max_err, gradcheck_rel_error(grads.weights[l].data[i], numeric));
    }
    for (std::size_t i = 0; i < params.biases[l].size(); ++i) {
      ModelParams plus = params, minus = params;
      plus.biases[l][i] += h;
      minus.biases[l][i] -= h;
      const double numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
      max_err = std::max(max_err, gradcheck_rel_error(grads.biases[l][i], numeric));
    }
  }
  return max_err;
}

}  // namespace mlc
