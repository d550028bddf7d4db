#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "mlc/label_space.hpp"
#include "mlc/matrix.hpp"
#include "mlc/metrics.hpp"

namespace mlc {

// Shape of the fully-connected classification head: hidden layers with ReLU
// and dropout, then k sigmoid output units.
struct HeadConfig {
  std::vector<std::size_t> hidden_sizes;
  double dropout_p = 0.0;
  std::size_t output_size = 0;
  std::uint64_t seed = 0;
};

struct ModelParams {
  HeadConfig config;
  std::size_t input_dim = 0;
  std::vector<Matrix> weights;              // weights[l] has shape (in_l, out_l)
  std::vector<std::vector<double>> biases;  // biases[l] has length out_l

  std::size_t layer_count() const { return weights.size(); }
};

// Branching form so extreme pre-activations cannot overflow.
inline double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero. Deterministic
// for a fixed seed.
inline ModelParams init_model(const HeadConfig& cfg, std::size_t input_dim) {
  if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
  if (cfg.output_size < 1) throw std::invalid_argument("output_size must be >= 1");
  for (auto w : cfg.hidden_sizes)
    if (w < 1) throw std::invalid_argument("zero-width hidden layer");
  if (!(cfg.dropout_p >= 0.0 && cfg.dropout_p < 1.0))
    throw std::invalid_argument("dropout_p must lie in [0,1)");

  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), cfg.hidden_sizes.begin(), cfg.hidden_sizes.end());
  dims.push_back(cfg.output_size);

  ModelParams params;
  params.config = cfg;
  params.input_dim = input_dim;
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t fan_in = dims[l];
    const std::size_t fan_out = dims[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> uni(-limit, limit);
    Matrix w(fan_in, fan_out);
    for (auto& x : w.data) x = uni(rng);
    params.weights.push_back(std::move(w));
    params.biases.emplace_back(fan_out, 0.0);
  }
  return params;
}

enum class RunMode { train, eval };

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre_activations;   // z_l = a_{l-1} W_l + b_l, per layer
  std::vector<Matrix> activations;       // post ReLU+dropout (hidden) / sigmoid (output)
  std::vector<Matrix> dropout_masks;     // per hidden layer; scale factor or 0
  std::size_t layer_count = 0;
};

namespace detail {
inline Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
  if (x.cols != w.rows) throw std::invalid_argument("forward: shape mismatch");
  Matrix z(x.rows, w.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t k = 0; k < x.cols; ++k) {
      const double xv = x(i, k);
      if (xv == 0.0) continue;
      for (std::size_t j = 0; j < w.cols; ++j) z(i, j) += xv * w(k, j);
    }
  for (std::size_t i = 0; i < z.rows; ++i)
    for (std::size_t j = 0; j < z.cols; ++j) z(i, j) += b[j];
  return z;
}
}  // namespace detail

// Returns sigmoid outputs of shape (batch, k). Hidden layers apply ReLU then
// inverted dropout (train mode only). Eval mode is deterministic and never
// consumes the rng.
inline Matrix forward(const ModelParams& params, const Matrix& batch, RunMode mode,
                      std::mt19937_64* dropout_rng = nullptr,
                      ForwardCache* cache = nullptr) {
  if (batch.cols != params.input_dim)
    throw std::invalid_argument("forward: feature width does not match model input_dim");
  const std::size_t layers = params.layer_count();
  const double p = params.config.dropout_p;
  const bool use_dropout = mode == RunMode::train && p > 0.0;
  if (use_dropout && dropout_rng == nullptr)
    throw std::invalid_argument("forward: train mode with dropout needs an rng");

  if (cache) {
    *cache = ForwardCache{};
    cache->input = batch;
    cache->layer_count = layers;
  }

  Matrix act = batch;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = detail::affine(act, params.weights[l], params.biases[l]);
    if (cache) cache->pre_activations.push_back(z);
    const bool is_output = l + 1 == layers;
    if (is_output) {
      for (auto& v : z.data) v = stable_sigmoid(v);
    } else {
      for (auto& v : z.data) v = v > 0.0 ? v : 0.0;
      Matrix mask(z.rows, z.cols, 1.0);
      if (use_dropout) {
        const double scale = 1.0 / (1.0 - p);
        for (auto& m : mask.data) m = uni(*dropout_rng) < p ? 0.0 : scale;
        for (std::size_t i = 0; i < z.data.size(); ++i) z.data[i] *= mask.data[i];
      }
      if (cache) cache->dropout_masks.push_back(std::move(mask));
    }
    if (cache) cache->activations.push_back(z);
    act = std::move(z);
  }
  return act;
}

struct ParamGrads {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

// Backpropagation through sigmoid, affine layers, dropout masks and ReLU.
// loss_gradient is d(loss)/d(predictions), shape (batch, k).
inline ParamGrads backward(const ModelParams& params, const ForwardCache& cache,
                           const Matrix& loss_gradient) {
  const std::size_t layers = params.layer_count();
  if (cache.layer_count != layers || cache.activations.size() != layers)
    throw std::invalid_argument("backward: cache does not match model");
  const Matrix& output = cache.activations.back();
  require_same_shape(output, loss_gradient, "backward");
  if (cache.input.cols != params.input_dim)
    throw std::invalid_argument("backward: cache does not match model");

  ParamGrads grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);

  // delta at the output pre-activation: g * s(1-s)
  Matrix delta(output.rows, output.cols);
  for (std::size_t i = 0; i < delta.data.size(); ++i) {
    const double s = output.data[i];
    delta.data[i] = loss_gradient.data[i] * s * (1.0 - s);
  }

  for (std::size_t li = layers; li-- > 0;) {
    const Matrix& prev_act = li == 0 ? cache.input : cache.activations[li - 1];
    Matrix& gw = grads.weights[li];
    gw = Matrix(params.weights[li].rows, params.weights[li].cols);
    for (std::size_t i = 0; i < prev_act.rows; ++i)
      for (std::size_t k = 0; k < prev_act.cols; ++k) {
        const double a = prev_act(i, k);
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < delta.cols; ++j) gw(k, j) += a * delta(i, j);
      }
    auto& gb = grads.biases[li];
    gb.assign(delta.cols, 0.0);
    for (std::size_t i = 0; i < delta.rows; ++i)
      for (std::size_t j = 0; j < delta.cols; ++j) gb[j] += delta(i, j);

    if (li == 0) break;

    // d loss / d prev_act, then back through dropout mask and ReLU
    const Matrix& w = params.weights[li];
    Matrix prev_delta(delta.rows, w.rows);
    for (std::size_t i = 0; i < delta.rows; ++i)
      for (std::size_t j = 0; j < delta.cols; ++j) {
        const double dv = delta(i, j);
        if (dv == 0.0) continue;
        for (std::size_t k = 0; k < w.rows; ++k) prev_delta(i, k) += dv * w(k, j);
      }
    const Matrix& mask = cache.dropout_masks[li - 1];
    const Matrix& pre = cache.pre_activations[li - 1];
    for (std::size_t i = 0; i < prev_delta.data.size(); ++i) {
      prev_delta.data[i] *= mask.data[i];
      if (pre.data[i] <= 0.0) prev_delta.data[i] = 0.0;
    }
    delta = std::move(prev_delta);
  }
  return grads;
}

// Forward in eval mode, then per-sample thresholding.
inline std::vector<MultiHotVector> predict(const ModelParams& params, const Matrix& batch,
                                           double threshold) {
  const Matrix scores = forward(params, batch, RunMode::eval);
  std::vector<MultiHotVector> out;
  out.reserve(scores.rows);
  for (std::size_t i = 0; i < scores.rows; ++i) {
    PredictionVector row(scores.data.begin() + i * scores.cols,
                         scores.data.begin() + (i + 1) * scores.cols);
    out.push_back(threshold_predictions(row, threshold));
  }
  return out;
}

// Stacks sample features into a (batch, dim) matrix.
inline Matrix features_to_matrix(const std::vector<LabeledSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("empty batch");
  const std::size_t dim = samples.front().features.dim();
  Matrix m(samples.size(), dim);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].features.dim() != dim)
      throw std::invalid_argument("samples disagree on feature shape");
    for (std::size_t j = 0; j < dim; ++j) m(i, j) = samples[i].features.values[j];
  }
  return m;
}

inline Matrix labels_to_matrix(const std::vector<LabeledSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("empty batch");
  const std::size_t k = samples.front().labels.size();
  Matrix m(samples.size(), k);
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = 0; j < k; ++j) m(i, j) = samples[i].labels.bits[j];
  return m;
}

}  // namespace mlc
