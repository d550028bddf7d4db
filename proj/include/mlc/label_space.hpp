#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mlc/feature_data.hpp"

namespace mlc {

// One concept label (a CUI such as "C0040398"). Opaque token; whitespace,
// semicolons and tabs are reserved as file delimiters.
using ConceptId = std::string;

inline void validate_concept_id(const ConceptId& id) {
  if (id.empty()) throw std::invalid_argument("concept id must be non-empty");
  for (char ch : id) {
    if (ch == ';' || ch == '\t' || ch == ' ' || ch == '\n' || ch == '\r' ||
        ch == '\v' || ch == '\f')
      throw std::invalid_argument("concept id '" + id + "' contains a reserved character");
  }
}

inline const std::vector<std::string>& category_codes() {
  static const std::vector<std::string> codes = {"DRAN", "DRCO", "DRCT", "DRMR",
                                                 "DRPE", "DRUS", "DRXR"};
  return codes;
}

inline bool is_category_code(const std::string& s) {
  const auto& codes = category_codes();
  return std::find(codes.begin(), codes.end(), s) != codes.end();
}

// The sorted unique concept set with bidirectional id<->index mapping.
// Concepts are strictly ascending in lexicographic byte order.
class LabelVocabulary {
 public:
  LabelVocabulary() = default;

  explicit LabelVocabulary(std::vector<ConceptId> sorted_unique) {
    for (const auto& id : sorted_unique) validate_concept_id(id);
    for (std::size_t i = 1; i < sorted_unique.size(); ++i)
      if (!(sorted_unique[i - 1] < sorted_unique[i]))
        throw std::invalid_argument("vocabulary must be strictly ascending");
    if (sorted_unique.empty()) throw std::invalid_argument("no concepts");
    concepts_ = std::move(sorted_unique);
    for (std::size_t i = 0; i < concepts_.size(); ++i) index_[concepts_[i]] = i;
  }

  std::size_t size() const { return concepts_.size(); }
  const std::vector<ConceptId>& concepts() const { return concepts_; }
  const ConceptId& at(std::size_t i) const { return concepts_.at(i); }

  std::optional<std::size_t> find(const ConceptId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<ConceptId> concepts_;
  std::unordered_map<ConceptId, std::size_t> index_;
};

// Deduplicated union of the given label sets, sorted ascending by bytes.
inline LabelVocabulary build_vocabulary(const std::vector<std::set<ConceptId>>& label_sets) {
  std::set<ConceptId> all;
  for (const auto& s : label_sets) all.insert(s.begin(), s.end());
  if (all.empty()) throw std::invalid_argument("no concepts");
  return LabelVocabulary(std::vector<ConceptId>(all.begin(), all.end()));
}

// Fixed-length 0/1 vector over a vocabulary; length equals vocabulary size.
struct MultiHotVector {
  std::vector<std::uint8_t> bits;

  MultiHotVector() = default;
  explicit MultiHotVector(std::size_t k) : bits(k, 0) {}

  std::size_t size() const { return bits.size(); }
  std::size_t count_ones() const {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }
  bool operator==(const MultiHotVector& o) const { return bits == o.bits; }
};

inline MultiHotVector encode(const std::set<ConceptId>& labels, const LabelVocabulary& vocab) {
  MultiHotVector out(vocab.size());
  for (const auto& id : labels) {
    auto pos = vocab.find(id);
    if (!pos) throw std::invalid_argument("unknown concept '" + id + "'");
    out.bits[*pos] = 1;
  }
  return out;
}

inline std::set<ConceptId> decode(const MultiHotVector& vec, const LabelVocabulary& vocab) {
  if (vec.size() != vocab.size())
    throw std::invalid_argument("multi-hot length does not match vocabulary size");
  std::set<ConceptId> out;
  for (std::size_t i = 0; i < vec.size(); ++i)
    if (vec.bits[i]) out.insert(vocab.at(i));
  return out;
}

struct LabeledSample {
  std::string sample_id;
  FeatureData features;
  MultiHotVector labels;
  std::optional<std::string> category;  // one of the 7 codes when present
};

struct Dataset {
  LabelVocabulary vocabulary;
  std::vector<LabeledSample> samples;

  std::size_t size() const { return samples.size(); }
};

// Mean number of labels per sample.
inline double label_cardinality(const Dataset& d) {
  if (d.samples.empty()) throw std::invalid_argument("empty dataset");
  std::size_t total = 0;
  for (const auto& s : d.samples) total += s.labels.count_ones();
  return static_cast<double>(total) / static_cast<double>(d.samples.size());
}

// Label cardinality divided by the number of unique labels.
inline double label_density(const Dataset& d) {
  return label_cardinality(d) / static_cast<double>(d.vocabulary.size());
}

// Top-n concepts by the number of samples containing them, ties broken by
// ascending concept id.
inline std::vector<std::pair<ConceptId, std::size_t>> concept_frequency_histogram(
    const Dataset& d, std::size_t top_n) {
  if (top_n < 1) throw std::invalid_argument("top_n must be >= 1");
  std::vector<std::size_t> counts(d.vocabulary.size(), 0);
  for (const auto& s : d.samples)
    for (std::size_t i = 0; i < s.labels.size(); ++i)
      if (s.labels.bits[i]) ++counts[i];

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] > 0) order.push_back(i);
  // vocabulary indices are already in ascending id order, so a stable sort
  // on count yields the id tie-break for free
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  if (order.size() > top_n) order.resize(top_n);

  std::vector<std::pair<ConceptId, std::size_t>> out;
  out.reserve(order.size());
  for (auto i : order) out.emplace_back(d.vocabulary.at(i), counts[i]);
  return out;
}

// entry[c] = number of samples with exactly c labels, for 1 <= c <= max_count.
inline std::map<std::size_t, std::size_t> cui_count_histogram(const Dataset& d,
                                                              std::size_t max_count) {
  if (max_count < 1) throw std::invalid_argument("max_count must be >= 1");
  std::map<std::size_t, std::size_t> out;
  for (const auto& s : d.samples) {
    std::size_t c = s.labels.count_ones();
    if (c >= 1 && c <= max_count) ++out[c];
  }
  return out;
}

}  // namespace mlc
