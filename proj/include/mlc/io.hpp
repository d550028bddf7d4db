#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mlc/label_space.hpp"
#include "mlc/matrix.hpp"
#include "mlc/training.hpp"

namespace mlc {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Concepts / submission files
//
// Canonical line format, UTF-8 with LF endings:
//   sample_id<TAB>CUI1;CUI2;...
// Writers emit records sorted by ascending sample_id.
// ---------------------------------------------------------------------------

struct ConceptsRow {
  std::string sample_id;
  std::vector<ConceptId> concepts;  // deduplicated, input order preserved
};

inline std::vector<ConceptsRow> parse_concepts_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open concepts file: " + path);
  std::vector<ConceptsRow> rows;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": missing tab separator");
    ConceptsRow row;
    row.sample_id = line.substr(0, tab);
    if (row.sample_id.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty sample id");
    if (!seen_ids.insert(row.sample_id).second)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": duplicate sample id '" +
                               row.sample_id + "'");
    std::set<ConceptId> dedup;
    std::stringstream ss(line.substr(tab + 1));
    std::string tok;
    while (std::getline(ss, tok, ';')) {
      if (tok.empty()) continue;
      validate_concept_id(tok);
      if (dedup.insert(tok).second) row.concepts.push_back(tok);
    }
    if (row.concepts.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": sample '" + row.sample_id + "' has no concepts");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("concepts file is empty: " + path);
  return rows;
}

struct SubmissionRecord {
  std::string sample_id;
  std::vector<ConceptId> concepts;
};

inline void write_submission(const std::vector<SubmissionRecord>& records,
                             const std::string& path) {
  std::vector<const SubmissionRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->sample_id < b->sample_id; });
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open submission file for writing: " + path);
  for (const auto* r : sorted) {
    os << r->sample_id << '\t';
    for (std::size_t i = 0; i < r->concepts.size(); ++i) {
      if (i) os << ';';
      os << r->concepts[i];
    }
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

// Thresholded concepts per sample as submission records. The challenge cap
// and non-emptiness are enforced here: above 100 concepts keep the 100
// highest-scoring (ties by ascending id), an empty prediction keeps the
// single highest-scoring concept.
inline std::vector<SubmissionRecord> predictions_to_records(
    const Matrix& scores, const std::vector<std::string>& sample_ids,
    const LabelVocabulary& vocab, double threshold) {
  if (scores.rows != sample_ids.size() || scores.cols != vocab.size())
    throw std::invalid_argument("predictions_to_records: shape mismatch");
  std::vector<SubmissionRecord> records;
  for (std::size_t i = 0; i < scores.rows; ++i) {
    std::vector<std::size_t> hits;
    for (std::size_t j = 0; j < scores.cols; ++j)
      if (scores(i, j) >= threshold) hits.push_back(j);
    if (hits.empty()) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < scores.cols; ++j)
        if (scores(i, j) > scores(i, best)) best = j;
      hits.push_back(best);
    } else if (hits.size() > 100) {
      // vocabulary order is id order, so a stable sort breaks score ties
      // by ascending concept id
      std::stable_sort(hits.begin(), hits.end(), [&](std::size_t a, std::size_t b) {
        return scores(i, a) > scores(i, b);
      });
      hits.resize(100);
      std::sort(hits.begin(), hits.end());
    }
    SubmissionRecord rec;
    rec.sample_id = sample_ids[i];
    for (auto j : hits) rec.concepts.push_back(vocab.at(j));
    records.push_back(std::move(rec));
  }
  return records;
}

// Checks the challenge constraints: at most 100 non-repeating concepts per
// image, no repeated sample ids, and (when a vocabulary is given) no unknown
// concepts. Returns a human-readable violation list; empty means ok.
inline std::vector<std::string> validate_submission(const std::string& path,
                                                    const LabelVocabulary* vocab = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open submission file: " + path);
  std::vector<std::string> violations;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      violations.push_back(where + ": missing tab separator");
      continue;
    }
    const std::string id = line.substr(0, tab);
    if (!seen_ids.insert(id).second)
      violations.push_back(where + ": repeated sample_id '" + id + "'");
    std::set<ConceptId> seen;
    std::size_t count = 0;
    std::stringstream ss(line.substr(tab + 1));
    std::string tok;
    while (std::getline(ss, tok, ';')) {
      if (tok.empty()) continue;
      ++count;
      if (!seen.insert(tok).second)
        violations.push_back(where + ": repeated concept '" + tok + "'");
      else if (vocab && !vocab->find(tok))
        violations.push_back(where + ": unknown concept '" + tok + "'");
    }
    if (count > 100) violations.push_back(where + ": concept limit exceeded (" +
                                          std::to_string(count) + " > 100)");
    if (count == 0) violations.push_back(where + ": no concepts");
  }
  return violations;
}

// ---------------------------------------------------------------------------
// Images: 8-bit binary portable graymap (magic "P5", maxval 255)
// ---------------------------------------------------------------------------

namespace detail {
inline int pgm_next_token(std::istream& is, std::string& tok) {
  tok.clear();
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {}
      continue;
    }
    if (!std::isspace(c)) break;
  }
  if (c == EOF) return EOF;
  do {
    tok.push_back(static_cast<char>(c));
  } while ((c = is.get()) != EOF && !std::isspace(c) && c != '#');
  if (c == '#') is.unget();
  return 0;
}
}  // namespace detail

inline FeatureData read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open image: " + path);
  std::string tok;
  if (detail::pgm_next_token(is, tok) == EOF || tok != "P5")
    throw std::runtime_error("not a binary graymap (expected P5): " + path);
  std::size_t dims[3];
  for (auto& d : dims) {
    if (detail::pgm_next_token(is, tok) == EOF)
      throw std::runtime_error("truncated graymap header: " + path);
    d = std::stoull(tok);
  }
  const std::size_t width = dims[0], height = dims[1], maxval = dims[2];
  if (maxval != 255) throw std::runtime_error("graymap must be 8-bit (maxval 255): " + path);
  std::vector<unsigned char> raw(width * height);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!is) throw std::runtime_error("truncated graymap data: " + path);
  std::vector<double> pixels(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) pixels[i] = raw[i] / 255.0;
  return FeatureData::image(height, width, std::move(pixels));
}

inline void write_pgm(const FeatureData& img, const std::string& path) {
  if (!img.is_image()) throw std::invalid_argument("write_pgm: not an image");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open image for writing: " + path);
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  for (double v : img.values) {
    const double scaled = v * 255.0;
    const int q = scaled < 0.0 ? 0 : (scaled > 255.0 ? 255 : static_cast<int>(scaled + 0.5));
    os.put(static_cast<char>(static_cast<unsigned char>(q)));
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Dataset directory layout
//
//   root/concepts.tsv          ground truth, canonical concepts format
//   root/<id>.pgm              images, optionally under the 7 category dirs
//   root/DRXR/<id>.pgm           (DRAN DRCO DRCT DRMR DRPE DRUS DRXR)
//   root/features.csv          alternative: rows "sample_id,v1,v2,..."
// ---------------------------------------------------------------------------

inline const char* kConceptsFileName = "concepts.tsv";
inline const char* kFeaturesFileName = "features.csv";

inline Dataset load_dataset(const std::string& root,
                            const LabelVocabulary* vocab = nullptr) {
  const fs::path base(root);
  const auto rows = parse_concepts_file((base / kConceptsFileName).string());

  // feature vectors, when present
  std::map<std::string, std::vector<double>> feature_rows;
  if (fs::exists(base / kFeaturesFileName)) {
    std::ifstream is(base / kFeaturesFileName);
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string id, tok;
      std::getline(ss, id, ',');
      std::vector<double> v;
      while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
      feature_rows[id] = std::move(v);
    }
  }

  Dataset d;
  if (vocab) {
    d.vocabulary = *vocab;
  } else {
    std::vector<std::set<ConceptId>> sets;
    for (const auto& r : rows) sets.emplace_back(r.concepts.begin(), r.concepts.end());
    d.vocabulary = build_vocabulary(sets);
  }

  for (const auto& row : rows) {
    LabeledSample sample;
    sample.sample_id = row.sample_id;
    sample.labels =
        encode(std::set<ConceptId>(row.concepts.begin(), row.concepts.end()), d.vocabulary);

    if (auto it = feature_rows.find(row.sample_id); it != feature_rows.end()) {
      sample.features = FeatureData::vector(it->second);
    } else {
      const std::string fname = row.sample_id + ".pgm";
      fs::path found;
      if (fs::exists(base / fname)) {
        found = base / fname;
      } else {
        for (const auto& cat : category_codes()) {
          if (fs::exists(base / cat / fname)) {
            found = base / cat / fname;
            sample.category = cat;
            break;
          }
        }
      }
      if (found.empty())
        throw std::runtime_error("no sample file for '" + row.sample_id + "' under " + root);
      sample.features = read_pgm(found.string());
    }
    d.samples.push_back(std::move(sample));
  }

  std::sort(d.samples.begin(), d.samples.end(),
            [](const LabeledSample& a, const LabeledSample& b) {
              return a.sample_id < b.sample_id;
            });
  return d;
}

// Writes concepts.tsv plus one pgm per image sample (category dirs preserved)
// or features.csv for vector-backed samples.
inline void save_dataset(const Dataset& d, const std::string& root) {
  const fs::path base(root);
  fs::create_directories(base);
  std::vector<SubmissionRecord> records;
  for (const auto& s : d.samples) {
    SubmissionRecord r;
    r.sample_id = s.sample_id;
    for (const auto& c : decode(s.labels, d.vocabulary)) r.concepts.push_back(c);
    records.push_back(std::move(r));
  }
  write_submission(records, (base / kConceptsFileName).string());

  std::ofstream features;
  for (const auto& s : d.samples) {
    if (s.features.is_image()) {
      fs::path dir = base;
      if (s.category) {
        dir /= *s.category;
        fs::create_directories(dir);
      }
      write_pgm(s.features, (dir / (s.sample_id + ".pgm")).string());
    } else {
      if (!features.is_open()) features.open(base / kFeaturesFileName, std::ios::binary);
      features << s.sample_id;
      char buf[32];
      for (double v : s.features.values) {
        std::snprintf(buf, sizeof(buf), ",%.17g", v);
        features << buf;
      }
      features << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Training config as a flat key=value file
// ---------------------------------------------------------------------------

struct CliTrainConfig {
  TrainingConfig training;
  std::vector<std::size_t> hidden_sizes = {64};
  double dropout = 0.5;
};

inline std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line is not key=value: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline void apply_config_entry(CliTrainConfig& cfg, const std::string& key,
                               const std::string& value) {
  TrainingConfig& t = cfg.training;
  if (key == "loss") t.loss.kind = parse_loss_kind(value);
  else if (key == "epsilon") t.loss.epsilon = std::stod(value);
  else if (key == "batch_size") t.batch_size = std::stoull(value);
  else if (key == "learning_rate") t.learning_rate = std::stod(value);
  else if (key == "beta1") t.optimizer.beta1 = std::stod(value);
  else if (key == "beta2") t.optimizer.beta2 = std::stod(value);
  else if (key == "epsilon_opt") t.optimizer.epsilon = std::stod(value);
  else if (key == "augmentation") {
    if (value == "none") t.augmentation = Augmentation::none;
    else if (value == "hflip") t.augmentation = Augmentation::hflip;
    else throw std::runtime_error("unknown augmentation '" + value + "'");
  } else if (key == "lr_factor") {
    if (!t.lr_reduction) t.lr_reduction = PlateauPolicy{};
    t.lr_reduction->factor = std::stod(value);
  } else if (key == "lr_patience") {
    if (!t.lr_reduction) t.lr_reduction = PlateauPolicy{};
    t.lr_reduction->patience = std::stoull(value);
  } else if (key == "lr_monitor") {
    if (!t.lr_reduction) t.lr_reduction = PlateauPolicy{};
    t.lr_reduction->monitor = parse_monitor(value);
  } else if (key == "es_patience") t.early_stopping.patience = std::stoull(value);
  else if (key == "max_epochs") t.max_epochs = std::stoull(value);
  else if (key == "threshold") t.threshold = std::stod(value);
  else if (key == "seed") t.seed = std::stoull(value);
  else if (key == "hidden_sizes") {
    cfg.hidden_sizes.clear();
    std::stringstream ss(value);
    std::string tok;
    while (std::getline(ss, tok, ',')) cfg.hidden_sizes.push_back(std::stoull(tok));
  } else if (key == "dropout") cfg.dropout = std::stod(value);
  else throw std::runtime_error("unknown config key '" + key + "'");
}

inline CliTrainConfig load_train_config(const std::string& path) {
  CliTrainConfig cfg;
  for (const auto& [k, v] : parse_kv_file(path)) apply_config_entry(cfg, k, v);
  return cfg;
}

// ---------------------------------------------------------------------------
// Stats CSV (label cardinality/density, both histograms)
// ---------------------------------------------------------------------------

inline std::string stats_to_csv(const Dataset& d, std::size_t top_n, std::size_t max_count) {
  char buf[96];
  std::string out = "metric,value\n";
  std::snprintf(buf, sizeof(buf), "label_cardinality,%.17g\n", label_cardinality(d));
  out += buf;
  std::snprintf(buf, sizeof(buf), "label_density,%.17g\n", label_density(d));
  out += buf;
  std::snprintf(buf, sizeof(buf), "samples,%zu\nunique_concepts,%zu\n", d.samples.size(),
                d.vocabulary.size());
  out += buf;
  out += "\nconcept,count\n";
  for (const auto& [id, n] : concept_frequency_histogram(d, top_n))
    out += id + "," + std::to_string(n) + "\n";
  out += "\ncui_count,images\n";
  for (const auto& [c, n] : cui_count_histogram(d, max_count))
    out += std::to_string(c) + "," + std::to_string(n) + "\n";
  return out;
}

}  // namespace mlc
