#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "mlc/checkpoint.hpp"
#include "mlc/gradcheck.hpp"
#include "mlc/model.hpp"
#include "test_helpers.hpp"

using namespace mlc;
using Catch::Matchers::WithinAbs;

TEST_CASE("init_model shapes and determinism") {
  HeadConfig cfg;
  cfg.hidden_sizes = {8};
  cfg.output_size = 3;
  cfg.seed = 42;
  auto a = init_model(cfg, 4);
  REQUIRE(a.weights.size() == 2);
  REQUIRE(a.weights[0].rows == 4);
  REQUIRE(a.weights[0].cols == 8);
  REQUIRE(a.biases[0].size() == 8);
  REQUIRE(a.weights[1].rows == 8);
  REQUIRE(a.weights[1].cols == 3);
  REQUIRE(a.biases[1].size() == 3);

  auto b = init_model(cfg, 4);
  REQUIRE(a.weights[0].data == b.weights[0].data);
  REQUIRE(a.weights[1].data == b.weights[1].data);

  for (const auto& bias : a.biases)
    for (double v : bias) REQUIRE(v == 0.0);

  cfg.hidden_sizes = {0};
  REQUIRE_THROWS_AS(init_model(cfg, 4), std::invalid_argument);
}

TEST_CASE("init_model weight mean is near zero") {
  HeadConfig cfg;
  cfg.hidden_sizes = {100};
  cfg.output_size = 100;
  cfg.seed = 5;
  auto params = init_model(cfg, 100);
  // layer 0: 10k uniform draws in +-limit, variance limit^2/3
  const double limit = std::sqrt(6.0 / 200.0);
  const double se = limit / std::sqrt(3.0 * 10000.0);
  double mean = 0.0;
  for (double w : params.weights[0].data) mean += w;
  mean /= 10000.0;
  REQUIRE(std::fabs(mean) < 3.0 * se);
}

TEST_CASE("forward with zero parameters outputs 0.5 everywhere") {
  HeadConfig cfg;
  cfg.hidden_sizes = {4};
  cfg.output_size = 3;
  auto params = init_model(cfg, 2);
  for (auto& w : params.weights) w.data.assign(w.data.size(), 0.0);
  Matrix x(2, 2);
  x.data = {0.3, -0.1, 1.0, 2.0};
  auto out = forward(params, x, RunMode::eval);
  for (double v : out.data) REQUIRE(v == 0.5);
}

TEST_CASE("eval forward is deterministic and outputs stay in (0,1)") {
  HeadConfig cfg;
  cfg.hidden_sizes = {6, 5};
  cfg.output_size = 4;
  cfg.seed = 9;
  auto params = init_model(cfg, 3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    Matrix x(1, 3);
    for (auto& v : x.data) v = uni(rng);
    auto a = forward(params, x, RunMode::eval);
    auto b = forward(params, x, RunMode::eval);
    REQUIRE(a.data == b.data);
    for (double v : a.data) {
      REQUIRE(v > 0.0);
      REQUIRE(v < 1.0);
    }
  }
}

TEST_CASE("stable sigmoid handles extreme pre-activations") {
  REQUIRE(stable_sigmoid(1000.0) == 1.0);
  REQUIRE(stable_sigmoid(-1000.0) >= 0.0);
  REQUIRE(std::isfinite(stable_sigmoid(-1000.0)));
  REQUIRE_THAT(stable_sigmoid(0.0), WithinAbs(0.5, 1e-15));
}

TEST_CASE("dropout: p=0 in train mode equals eval mode") {
  HeadConfig cfg;
  cfg.hidden_sizes = {8};
  cfg.output_size = 3;
  cfg.seed = 2;
  cfg.dropout_p = 0.0;
  auto params = init_model(cfg, 4);
  Matrix x(2, 4, 0.5);
  std::mt19937_64 rng(0);
  auto train_out = forward(params, x, RunMode::train, &rng);
  auto eval_out = forward(params, x, RunMode::eval);
  REQUIRE(train_out.data == eval_out.data);
}

TEST_CASE("inverted dropout preserves the expected pre-activation") {
  // single hidden unit feeding one output; expectation over masks should
  // match the undropped activation within 1%
  HeadConfig cfg;
  cfg.hidden_sizes = {16};
  cfg.output_size = 1;
  cfg.seed = 3;
  cfg.dropout_p = 0.4;
  auto params = init_model(cfg, 4);
  Matrix x(1, 4);
  x.data = {0.7, -0.2, 0.9, 0.1};

  ForwardCache ref_cache;
  auto params_nodrop = params;
  params_nodrop.config.dropout_p = 0.0;
  forward(params_nodrop, x, RunMode::eval, nullptr, &ref_cache);
  const Matrix& hidden_ref = ref_cache.activations[0];

  std::mt19937_64 rng(7);
  std::vector<double> sums(16, 0.0);
  const int n_masks = 100000;
  for (int i = 0; i < n_masks; ++i) {
    ForwardCache cache;
    forward(params, x, RunMode::train, &rng, &cache);
    for (int j = 0; j < 16; ++j) sums[j] += cache.activations[0](0, j);
  }
  for (int j = 0; j < 16; ++j) {
    const double expected = hidden_ref(0, j);
    if (expected < 0.05) continue;  // dead/near-dead units: 1% is meaningless
    REQUIRE_THAT(sums[j] / n_masks, WithinAbs(expected, 0.01 * expected));
  }
}

TEST_CASE("backward: zero loss gradient gives zero parameter gradients") {
  HeadConfig cfg;
  cfg.hidden_sizes = {5};
  cfg.output_size = 3;
  cfg.seed = 4;
  auto params = init_model(cfg, 4);
  Matrix x(2, 4, 0.3);
  ForwardCache cache;
  forward(params, x, RunMode::eval, nullptr, &cache);
  Matrix zero_grad(2, 3);
  auto grads = backward(params, cache, zero_grad);
  for (const auto& gw : grads.weights)
    for (double v : gw.data) REQUIRE(v == 0.0);
  for (const auto& gb : grads.biases)
    for (double v : gb) REQUIRE(v == 0.0);
}

TEST_CASE("backward rejects a mismatched cache") {
  HeadConfig cfg;
  cfg.hidden_sizes = {5};
  cfg.output_size = 3;
  auto params = init_model(cfg, 4);
  HeadConfig other = cfg;
  other.hidden_sizes = {5, 5};
  auto params2 = init_model(other, 4);
  Matrix x(2, 4, 0.3);
  ForwardCache cache;
  forward(params, x, RunMode::eval, nullptr, &cache);
  REQUIRE_THROWS_AS(backward(params2, cache, Matrix(2, 3)), std::invalid_argument);
}

TEST_CASE("full-pipeline parameter gradients match finite differences") {
  std::mt19937_64 rng(11);
  HeadConfig cfg;
  cfg.hidden_sizes = {3};
  cfg.output_size = 2;
  cfg.dropout_p = 0.0;
  for (auto kind : {LossKind::bce, LossKind::one_minus_soft_f1, LossKind::product,
                    LossKind::sum}) {
    LossSpec spec{kind, 1e-7};
    double max_err = 0.0;
    for (int trial = 0; trial < 10; ++trial)
      max_err = std::max(max_err, model_gradient_max_rel_error(spec, cfg, 2, 4, rng));
    INFO("loss kind " << loss_kind_name(kind));
    REQUIRE(max_err < 1e-4);
  }
}

TEST_CASE("gradient is zero through dropped units") {
  HeadConfig cfg;
  cfg.hidden_sizes = {6};
  cfg.output_size = 2;
  cfg.seed = 8;
  cfg.dropout_p = 0.5;
  auto params = init_model(cfg, 3);
  Matrix x(1, 3);
  x.data = {0.4, 0.6, -0.3};
  std::mt19937_64 rng(99);
  ForwardCache cache;
  auto pred = forward(params, x, RunMode::train, &rng, &cache);
  Matrix g(1, 2, 1.0);
  auto grads = backward(params, cache, g);
  const Matrix& mask = cache.dropout_masks[0];
  for (std::size_t j = 0; j < 6; ++j) {
    if (mask(0, j) == 0.0) {
      // weights into a dropped unit receive no gradient
      for (std::size_t i = 0; i < 3; ++i) REQUIRE(grads.weights[0](i, j) == 0.0);
      REQUIRE(grads.biases[0][j] == 0.0);
    }
  }
}

TEST_CASE("predict composes eval forward with thresholding") {
  HeadConfig cfg;
  cfg.hidden_sizes = {4};
  cfg.output_size = 3;
  cfg.seed = 6;
  auto zero = init_model(cfg, 2);
  for (auto& w : zero.weights) w.data.assign(w.data.size(), 0.0);
  Matrix x(2, 2, 0.5);

  // sigmoid(0) = 0.5 and the threshold is inclusive
  for (const auto& v : predict(zero, x, 0.5))
    REQUIRE(v.count_ones() == 3);
  for (const auto& v : predict(zero, x, 0.9))
    REQUIRE(v.count_ones() == 0);

  auto params = init_model(cfg, 2);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix xi(3, 2);
    for (auto& v : xi.data) v = uni(rng);
    auto direct = predict(params, xi, 0.4);
    auto scores = forward(params, xi, RunMode::eval);
    for (std::size_t i = 0; i < 3; ++i) {
      PredictionVector row(scores.data.begin() + i * 3, scores.data.begin() + (i + 1) * 3);
      REQUIRE(direct[i] == threshold_predictions(row, 0.4));
    }
  }
}

TEST_CASE("checkpoint round trip preserves parameters and vocabulary") {
  HeadConfig cfg;
  cfg.hidden_sizes = {5, 4};
  cfg.output_size = 3;
  cfg.seed = 77;
  cfg.dropout_p = 0.25;
  auto params = init_model(cfg, 6);
  LabelVocabulary vocab({"C1", "C2", "C3"});

  const auto path = std::filesystem::temp_directory_path() / "mlc_test_ckpt.bin";
  save_checkpoint(path.string(), params, vocab, 0.4);
  auto ckpt = load_checkpoint(path.string());

  REQUIRE(ckpt.vocabulary.concepts() == vocab.concepts());
  REQUIRE(ckpt.threshold == 0.4);
  REQUIRE(ckpt.params.input_dim == 6);
  REQUIRE(ckpt.params.config.hidden_sizes == cfg.hidden_sizes);
  REQUIRE(ckpt.params.config.dropout_p == 0.25);
  REQUIRE(ckpt.params.weights.size() == params.weights.size());
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    REQUIRE(ckpt.params.weights[l].data == params.weights[l].data);
    REQUIRE(ckpt.params.biases[l] == params.biases[l]);
  }
  std::filesystem::remove(path);
}
