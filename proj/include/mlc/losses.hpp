#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlc/matrix.hpp"

namespace mlc {

// Scalar loss value plus the gradient with respect to the predictions
// (the sigmoid outputs), shape (batch, k).
struct LossOutput {
  double value = 0.0;
  Matrix gradient;
};

enum class LossKind { bce, one_minus_soft_f1, product, sum };

struct LossSpec {
  LossKind kind = LossKind::bce;
  double epsilon = 1e-7;
};

inline LossKind parse_loss_kind(const std::string& name) {
  if (name == "bce") return LossKind::bce;
  if (name == "soft_f1" || name == "one_minus_soft_f1") return LossKind::one_minus_soft_f1;
  if (name == "product") return LossKind::product;
  if (name == "sum") return LossKind::sum;
  throw std::invalid_argument("unknown loss kind '" + name + "'");
}

inline const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::bce: return "bce";
    case LossKind::one_minus_soft_f1: return "soft_f1";
    case LossKind::product: return "product";
    case LossKind::sum: return "sum";
  }
  return "?";
}

// Mean over all batch*k elements of -[y ln(p) + (1-y) ln(1-p)] with
// predictions clamped to [eps, 1-eps]. Gradient is zero where the clamp
// is active.
inline LossOutput bce(const Matrix& truth, const Matrix& pred, double eps = 1e-7) {
  require_same_shape(truth, pred, "bce");
  const std::size_t n = truth.rows * truth.cols;
  if (n == 0) throw std::invalid_argument("bce: empty batch");
  LossOutput out;
  out.gradient = Matrix(pred.rows, pred.cols);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = truth.data[i];
    const double p = pred.data[i];
    const double pc = p < eps ? eps : (p > 1.0 - eps ? 1.0 - eps : p);
    sum += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
    if (p >= eps && p <= 1.0 - eps)
      out.gradient.data[i] = (-y / pc + (1.0 - y) / (1.0 - pc)) / static_cast<double>(n);
  }
  out.value = sum / static_cast<double>(n);
  return out;
}

// Per-sample soft counts and soft F1, row-wise over the label axis:
//   tp = sum y*p,  fp = sum (1-y)*p,  fn = sum y*(1-p)
//   p = tp/(tp+fp+eps), r = tp/(tp+fn+eps), f1 = 2pr/(p+r+eps)
// Any NaN f1 is replaced by 0.
struct SoftF1Row {
  double tp = 0.0, fp = 0.0, fn = 0.0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

inline std::vector<SoftF1Row> soft_f1_components(const Matrix& truth, const Matrix& pred,
                                                 double eps = 1e-7) {
  require_same_shape(truth, pred, "soft_f1_components");
  std::vector<SoftF1Row> rows(truth.rows);
  for (std::size_t i = 0; i < truth.rows; ++i) {
    SoftF1Row& row = rows[i];
    for (std::size_t j = 0; j < truth.cols; ++j) {
      const double y = truth(i, j);
      const double p = pred(i, j);
      row.tp += y * p;
      row.fp += (1.0 - y) * p;
      row.fn += y * (1.0 - p);
    }
    row.precision = row.tp / (row.tp + row.fp + eps);
    row.recall = row.tp / (row.tp + row.fn + eps);
    row.f1 = 2.0 * row.precision * row.recall / (row.precision + row.recall + eps);
    if (std::isnan(row.f1)) row.f1 = 0.0;
  }
  return rows;
}

// 1 - mean over the batch of per-sample soft F1, with the analytic
// gradient obtained by the quotient rule through precision, recall and f1.
inline LossOutput one_minus_soft_f1(const Matrix& truth, const Matrix& pred,
                                    double eps = 1e-7) {
  require_same_shape(truth, pred, "one_minus_soft_f1");
  if (truth.rows == 0) throw std::invalid_argument("one_minus_soft_f1: empty batch");
  const auto rows = soft_f1_components(truth, pred, eps);
  const double batch = static_cast<double>(truth.rows);

  LossOutput out;
  out.gradient = Matrix(pred.rows, pred.cols);
  double f1_sum = 0.0;
  for (std::size_t i = 0; i < truth.rows; ++i) {
    const SoftF1Row& row = rows[i];
    f1_sum += row.f1;
    if (std::isnan(2.0 * row.precision * row.recall /
                   (row.precision + row.recall + eps)))
      continue;  // NaN-guarded row contributes zero gradient
    const double den_p = row.tp + row.fp + eps;
    const double den_r = row.tp + row.fn + eps;
    const double den_f = row.precision + row.recall + eps;
    for (std::size_t j = 0; j < truth.cols; ++j) {
      const double y = truth(i, j);
      // d tp/dp_j = y, d fp/dp_j = 1-y, d fn/dp_j = -y
      const double dp = (y * den_p - row.tp) / (den_p * den_p);
      const double dr = y / den_r;
      const double df1 = 2.0 *
                         ((dp * row.recall + row.precision * dr) * den_f -
                          row.precision * row.recall * (dp + dr)) /
                         (den_f * den_f);
      out.gradient(i, j) = -df1 / batch;
    }
  }
  out.value = 1.0 - f1_sum / batch;
  return out;
}

// Scalar soft-F1 loss times scalar mean bce; gradient by the product rule.
inline LossOutput product_loss(const Matrix& truth, const Matrix& pred, double eps = 1e-7) {
  const LossOutput f1 = one_minus_soft_f1(truth, pred, eps);
  const LossOutput ce = bce(truth, pred, eps);
  LossOutput out;
  out.value = f1.value * ce.value;
  out.gradient = Matrix(pred.rows, pred.cols);
  for (std::size_t i = 0; i < out.gradient.data.size(); ++i)
    out.gradient.data[i] = f1.value * ce.gradient.data[i] + ce.value * f1.gradient.data[i];
  return out;
}

inline LossOutput sum_loss(const Matrix& truth, const Matrix& pred, double eps = 1e-7) {
  const LossOutput f1 = one_minus_soft_f1(truth, pred, eps);
  const LossOutput ce = bce(truth, pred, eps);
  LossOutput out;
  out.value = f1.value + ce.value;
  out.gradient = Matrix(pred.rows, pred.cols);
  for (std::size_t i = 0; i < out.gradient.data.size(); ++i)
    out.gradient.data[i] = f1.gradient.data[i] + ce.gradient.data[i];
  return out;
}

inline LossOutput evaluate_loss(const LossSpec& spec, const Matrix& truth, const Matrix& pred) {
  switch (spec.kind) {
    case LossKind::bce: return bce(truth, pred, spec.epsilon);
    case LossKind::one_minus_soft_f1: return one_minus_soft_f1(truth, pred, spec.epsilon);
    case LossKind::product: return product_loss(truth, pred, spec.epsilon);
    case LossKind::sum: return sum_loss(truth, pred, spec.epsilon);
  }
  throw std::logic_error("unreachable loss kind");
}

}  // namespace mlc
