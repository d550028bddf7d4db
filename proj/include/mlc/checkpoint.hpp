#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlc/label_space.hpp"
#include "mlc/model.hpp"

namespace mlc {

// Model checkpoint container, stable layout:
//   bytes 0..7   magic "MLCCKPT1"
//   bytes 8..15  little-endian u64 manifest length N
//   N bytes      UTF-8 JSON manifest: head config, vocabulary (list + FNV-1a
//                hash), and a layer manifest of shapes in order
//   rest         parameter arrays as little-endian IEEE-754 f64, in manifest
//                order, each layer as weights (row-major) then biases

inline constexpr char kCheckpointMagic[8] = {'M', 'L', 'C', 'C', 'K', 'P', 'T', '1'};

inline std::uint64_t fnv1a_hash(const std::vector<ConceptId>& concepts) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& c : concepts) {
    for (unsigned char ch : c) {
      h ^= ch;
      h *= 1099511628211ull;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 1099511628211ull;
  }
  return h;
}

namespace detail {
inline void write_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t read_u64_le(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

inline void write_f64_le(std::ostream& os, const double* data, std::size_t n) {
  static_assert(sizeof(double) == 8);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &data[i], 8);
    write_u64_le(os, bits);
  }
}

inline void read_f64_le(std::istream& is, double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t bits = read_u64_le(is);
    std::memcpy(&data[i], &bits, 8);
  }
}
}  // namespace detail

inline void save_checkpoint(const std::string& path, const ModelParams& params,
                            const LabelVocabulary& vocab, double threshold = 0.5) {
  nlohmann::json manifest;
  manifest["format"] = "mlc-checkpoint";
  manifest["version"] = 1;
  manifest["input_dim"] = params.input_dim;
  manifest["hidden_sizes"] = params.config.hidden_sizes;
  manifest["dropout_p"] = params.config.dropout_p;
  manifest["output_size"] = params.config.output_size;
  manifest["seed"] = params.config.seed;
  manifest["threshold"] = threshold;
  manifest["vocabulary"] = vocab.concepts();
  manifest["vocabulary_hash"] = fnv1a_hash(vocab.concepts());
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    layers.push_back({{"name", "dense_" + std::to_string(l)},
                      {"weight_shape", {params.weights[l].rows, params.weights[l].cols}},
                      {"bias_len", params.biases[l].size()}});
  }
  manifest["layers"] = layers;

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open checkpoint file for writing: " + path);
  os.write(kCheckpointMagic, 8);
  const std::string text = manifest.dump();
  detail::write_u64_le(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    detail::write_f64_le(os, params.weights[l].data.data(), params.weights[l].data.size());
    detail::write_f64_le(os, params.biases[l].data(), params.biases[l].size());
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

struct Checkpoint {
  ModelParams params;
  LabelVocabulary vocabulary;
  double threshold = 0.5;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint file: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  const std::uint64_t len = detail::read_u64_le(is);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("truncated checkpoint manifest: " + path);
  const nlohmann::json manifest = nlohmann::json::parse(text);

  Checkpoint ckpt;
  HeadConfig cfg;
  cfg.hidden_sizes = manifest.at("hidden_sizes").get<std::vector<std::size_t>>();
  cfg.dropout_p = manifest.at("dropout_p").get<double>();
  cfg.output_size = manifest.at("output_size").get<std::size_t>();
  cfg.seed = manifest.at("seed").get<std::uint64_t>();
  ckpt.threshold = manifest.value("threshold", 0.5);
  ckpt.vocabulary =
      LabelVocabulary(manifest.at("vocabulary").get<std::vector<ConceptId>>());
  if (manifest.at("vocabulary_hash").get<std::uint64_t>() !=
      fnv1a_hash(ckpt.vocabulary.concepts()))
    throw std::runtime_error("checkpoint vocabulary hash mismatch: " + path);

  ModelParams& params = ckpt.params;
  params.config = cfg;
  params.input_dim = manifest.at("input_dim").get<std::size_t>();
  for (const auto& layer : manifest.at("layers")) {
    const auto shape = layer.at("weight_shape").get<std::vector<std::size_t>>();
    Matrix w(shape.at(0), shape.at(1));
    detail::read_f64_le(is, w.data.data(), w.data.size());
    params.weights.push_back(std::move(w));
    std::vector<double> b(layer.at("bias_len").get<std::size_t>());
    detail::read_f64_le(is, b.data(), b.size());
    params.biases.push_back(std::move(b));
  }
  if (!is) throw std::runtime_error("truncated checkpoint parameters: " + path);
  return ckpt;
}

}  // namespace mlc
