#pragma once

#include <stdexcept>
#include <vector>

#include "mlc/label_space.hpp"

namespace mlc {

// Sigmoid activations for one sample, all in [0,1], length k.
using PredictionVector = std::vector<double>;

struct SampleScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// output[i] = 1 iff scores[i] >= threshold. The boundary is inclusive.
inline MultiHotVector threshold_predictions(const PredictionVector& scores, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("threshold must lie strictly inside (0,1)");
  MultiHotVector out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    out.bits[i] = scores[i] >= threshold ? 1 : 0;
  return out;
}

// Per-sample precision/recall/F1 from positional tp/fp/fn counts.
// Degenerate cases: both sets empty -> 1.0, one side empty -> 0.0.
inline SampleScore sample_f1(const MultiHotVector& truth, const MultiHotVector& pred) {
  if (truth.size() != pred.size())
    throw std::invalid_argument("sample_f1: length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth.bits[i] && pred.bits[i]) ++tp;
    else if (!truth.bits[i] && pred.bits[i]) ++fp;
    else if (truth.bits[i] && !pred.bits[i]) ++fn;
  }
  SampleScore s;
  if (tp + fp == 0 && tp + fn == 0) {
    s.precision = s.recall = s.f1 = 1.0;  // both empty: perfect agreement
    return s;
  }
  s.precision = (tp + fp == 0) ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  s.recall = (tp + fn == 0) ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.f1 = (s.precision + s.recall > 0.0)
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

// Arithmetic mean of per-sample F1, reduced in input order.
inline double mean_f1(const std::vector<MultiHotVector>& truths,
                      const std::vector<MultiHotVector>& preds) {
  if (truths.empty() || truths.size() != preds.size())
    throw std::invalid_argument("mean_f1: lists must be non-empty and equal length");
  double sum = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i)
    sum += sample_f1(truths[i], preds[i]).f1;
  return sum / static_cast<double>(truths.size());
}

}  // namespace mlc
