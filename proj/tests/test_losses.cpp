#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mlc/gradcheck.hpp"
#include "mlc/losses.hpp"

using namespace mlc;
using Catch::Matchers::WithinAbs;

namespace {
Matrix row(std::vector<double> v) {
  Matrix m(1, v.size());
  m.data = std::move(v);
  return m;
}
}  // namespace

TEST_CASE("bce hand values") {
  const double eps = 1e-7;
  REQUIRE_THAT(bce(row({1.0}), row({1.0 - eps}), eps).value, WithinAbs(0.0, 1e-6));
  REQUIRE_THAT(bce(row({1.0}), row({0.5}), eps).value,
               WithinAbs(-std::log(0.5), 1e-12));
  REQUIRE_THROWS_AS(bce(row({1.0}), Matrix(1, 2), eps), std::invalid_argument);
}

TEST_CASE("bce is finite at the extremes and clamps gradients") {
  const double eps = 1e-7;
  auto out = bce(row({1.0, 0.0}), row({0.0, 1.0}), eps);
  REQUIRE(std::isfinite(out.value));
  REQUIRE(out.gradient.data[0] == 0.0);  // clamp active at p=0
  REQUIRE(out.gradient.data[1] == 0.0);  // clamp active at p=1
}

TEST_CASE("soft_f1_components hand values") {
  const double eps = 1e-7;

  auto exact = soft_f1_components(row({1, 0}), row({1, 0}), eps);
  REQUIRE_THAT(exact[0].tp, WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(exact[0].fp, WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(exact[0].fn, WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(exact[0].f1, WithinAbs(1.0, 1e-6));

  auto mid = soft_f1_components(row({1, 0, 0}), row({0.5, 0.5, 0}), eps);
  REQUIRE_THAT(mid[0].tp, WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(mid[0].fp, WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(mid[0].fn, WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(mid[0].precision, WithinAbs(0.5, 1e-6));
  REQUIRE_THAT(mid[0].recall, WithinAbs(0.5, 1e-6));
  REQUIRE_THAT(mid[0].f1, WithinAbs(0.5, 1e-6));

  // degenerate row: epsilon keeps everything finite
  auto deg = soft_f1_components(row({0, 0}), row({0.3, 0.3}), eps);
  REQUIRE_THAT(deg[0].tp, WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(deg[0].fn, WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(deg[0].fp, WithinAbs(0.6, 1e-12));
  REQUIRE_THAT(deg[0].f1, WithinAbs(0.0, 1e-6));
}

TEST_CASE("one_minus_soft_f1 hand values and monotonicity") {
  const double eps = 1e-7;
  REQUIRE_THAT(one_minus_soft_f1(row({1, 0}), row({1, 0}), eps).value,
               WithinAbs(0.0, 2 * eps + 1e-9));
  REQUIRE_THAT(one_minus_soft_f1(row({1, 0, 0}), row({0.5, 0.5, 0}), eps).value,
               WithinAbs(0.5, 1e-6));

  // increasing the score of the single positive label strictly lowers the loss
  double prev = one_minus_soft_f1(row({1, 0, 0}), row({0.1, 0.2, 0.2}), eps).value;
  for (double p = 0.2; p < 1.0; p += 0.1) {
    const double cur = one_minus_soft_f1(row({1, 0, 0}), row({p, 0.2, 0.2}), eps).value;
    REQUIRE(cur < prev);
    prev = cur;
  }
}

TEST_CASE("product and sum hand values") {
  const double eps = 1e-7;
  const Matrix y = row({1, 0});
  const Matrix p = row({0.5, 0.5});
  const double f1loss = one_minus_soft_f1(y, p, eps).value;
  const double ce = bce(y, p, eps).value;
  REQUIRE_THAT(f1loss, WithinAbs(0.5, 1e-6));
  REQUIRE_THAT(ce, WithinAbs(0.6931471805599453, 1e-12));
  REQUIRE_THAT(product_loss(y, p, eps).value, WithinAbs(0.34657, 1e-4));
  REQUIRE_THAT(sum_loss(y, p, eps).value, WithinAbs(1.193147, 1e-4));

  // perfect prediction drives both factors to ~0
  REQUIRE_THAT(product_loss(row({1, 0}), row({1, 0}), eps).value, WithinAbs(0.0, 1e-6));
  REQUIRE_THAT(sum_loss(row({1, 0}), row({1, 0}), eps).value, WithinAbs(0.0, 1e-5));
}

TEST_CASE("loss gradients match central finite differences") {
  std::mt19937_64 rng(17);
  for (auto kind : {LossKind::bce, LossKind::one_minus_soft_f1, LossKind::product,
                    LossKind::sum}) {
    LossSpec spec{kind, 1e-7};
    double max_err = 0.0;
    for (int trial = 0; trial < 20; ++trial)
      max_err = std::max(max_err, loss_gradient_max_rel_error(spec, 4, 6, rng));
    INFO("loss kind " << loss_kind_name(kind));
    REQUIRE(max_err < 1e-4);
  }
}

TEST_CASE("loss values stay in range and finite everywhere in [0,1]") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix y(3, 8), p(3, 8);
    for (auto& v : y.data) v = coin(rng) ? 1.0 : 0.0;
    for (auto& v : p.data) v = uni(rng);
    // include the corners
    if (trial % 3 == 0) { p.data[0] = 0.0; p.data[1] = 1.0; }
    if (trial % 5 == 0)
      for (std::size_t j = 0; j < 8; ++j) y(0, j) = 0.0;  // all-zero truth row

    const auto f1 = one_minus_soft_f1(y, p);
    const auto ce = bce(y, p);
    const auto prod = product_loss(y, p);
    const auto sum = sum_loss(y, p);

    for (const auto& rows : soft_f1_components(y, p)) {
      REQUIRE(rows.f1 >= 0.0);
      REQUIRE(rows.f1 <= 1.0);
    }
    REQUIRE(f1.value >= 0.0);
    REQUIRE(f1.value <= 1.0);
    REQUIRE(prod.value >= 0.0);
    REQUIRE(sum.value >= f1.value - 1e-15);
    REQUIRE(sum.value >= ce.value - 1e-15);
    for (const auto* out : {&f1, &ce, &prod, &sum}) {
      REQUIRE(std::isfinite(out->value));
      for (double g : out->gradient.data) REQUIRE(std::isfinite(g));
    }
  }
}

TEST_CASE("loss spec parsing") {
  REQUIRE(parse_loss_kind("bce") == LossKind::bce);
  REQUIRE(parse_loss_kind("soft_f1") == LossKind::one_minus_soft_f1);
  REQUIRE(parse_loss_kind("product") == LossKind::product);
  REQUIRE(parse_loss_kind("sum") == LossKind::sum);
  REQUIRE_THROWS_AS(parse_loss_kind("hinge"), std::invalid_argument);
}
