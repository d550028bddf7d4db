#pragma once

#include <random>
#include <set>
#include <string>
#include <vector>

#include "mlc/label_space.hpp"

namespace mlc_test {

inline std::string cid(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "C%07d", i);
  return buf;
}

inline std::set<mlc::ConceptId> random_label_set(std::mt19937_64& rng, int pool,
                                                 int max_size) {
  std::uniform_int_distribution<int> size_dist(0, max_size);
  std::uniform_int_distribution<int> id_dist(0, pool - 1);
  std::set<mlc::ConceptId> s;
  const int n = size_dist(rng);
  for (int i = 0; i < n; ++i) s.insert(cid(id_dist(rng)));
  return s;
}

// Dataset of vector-backed samples with the given label counts per sample,
// over a vocabulary of k concepts.
inline mlc::Dataset dataset_with_label_counts(const std::vector<std::size_t>& counts,
                                              std::size_t k) {
  std::vector<mlc::ConceptId> ids;
  for (std::size_t i = 0; i < k; ++i) ids.push_back(cid(static_cast<int>(i)));
  mlc::Dataset d;
  d.vocabulary = mlc::LabelVocabulary(ids);
  for (std::size_t s = 0; s < counts.size(); ++s) {
    mlc::LabeledSample sample;
    sample.sample_id = "s" + std::to_string(s);
    sample.features = mlc::FeatureData::vector({1.0});
    sample.labels = mlc::MultiHotVector(k);
    for (std::size_t j = 0; j < counts[s]; ++j) sample.labels.bits[j] = 1;
    d.samples.push_back(std::move(sample));
  }
  return d;
}

}  // namespace mlc_test
