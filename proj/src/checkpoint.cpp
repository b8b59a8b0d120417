#include "keyspoof/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "keyspoof/errors.hpp"

namespace keyspoof {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& doc, const char* key) {
  if (!doc.contains(key)) throw CorruptCheckpointError(std::string("missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw CorruptCheckpointError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

json checkpoint_to_json(const Checkpoint& ckpt) {
  validate_shapes(ckpt.params);
  json specs = json::array();
  json weights = json::array();
  json biases = json::array();
  for (std::size_t k = 0; k < ckpt.params.layers.size(); ++k) {
    const auto& s = ckpt.params.specs[k];
    const auto& l = ckpt.params.layers[k];
    if (!l.weights.allFinite() || !l.biases.allFinite())
      throw NumericError("checkpoint: non-finite parameter in layer " + std::to_string(k));
    specs.push_back({{"in_dim", s.in_dim},
                     {"out_dim", s.out_dim},
                     {"activation", std::string(to_string(s.activation))}});
    json rows = json::array();
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) row.push_back(l.weights(r, c));
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
    json b = json::array();
    for (Eigen::Index i = 0; i < l.biases.size(); ++i) b.push_back(l.biases(i));
    biases.push_back(std::move(b));
  }
  return json{{"format_version", kCheckpointFormatVersion},
              {"model_kind", ckpt.model_kind},
              {"layer_specs", std::move(specs)},
              {"weights", std::move(weights)},
              {"biases", std::move(biases)},
              {"embed_seed", ckpt.embed_seed},
              {"rng_seed", ckpt.rng_seed},
              {"trained_epochs", ckpt.trained_epochs},
              {"metadata", ckpt.metadata}};
}

Checkpoint checkpoint_from_json(const json& doc) {
  if (!doc.is_object()) throw CorruptCheckpointError("checkpoint is not a JSON object");
  const auto version = field<int>(doc, "format_version");
  if (version != kCheckpointFormatVersion) {
    throw CheckpointVersionError("unsupported checkpoint format_version " +
                                 std::to_string(version) + " (expected " +
                                 std::to_string(kCheckpointFormatVersion) + ")");
  }
  Checkpoint ckpt;
  ckpt.model_kind = field<std::string>(doc, "model_kind");
  ckpt.embed_seed = field<std::uint64_t>(doc, "embed_seed");
  ckpt.rng_seed = field<std::uint64_t>(doc, "rng_seed");
  ckpt.trained_epochs = field<std::int64_t>(doc, "trained_epochs");
  if (doc.contains("metadata")) ckpt.metadata = doc.at("metadata");

  const auto specs = field<json>(doc, "layer_specs");
  const auto weights = field<json>(doc, "weights");
  const auto biases = field<json>(doc, "biases");
  if (!specs.is_array() || !weights.is_array() || !biases.is_array())
    throw CorruptCheckpointError("layer_specs, weights and biases must be arrays");
  if (specs.empty()) throw CorruptCheckpointError("checkpoint has no layers");
  if (weights.size() != specs.size() || biases.size() != specs.size())
    throw CheckpointShapeError("weights/biases layer count does not match layer_specs");

  try {
    for (std::size_t k = 0; k < specs.size(); ++k) {
      LayerSpec s;
      s.in_dim = specs[k].at("in_dim").get<int>();
      s.out_dim = specs[k].at("out_dim").get<int>();
      s.activation = activation_from_string(specs[k].at("activation").get<std::string>());
      if (s.in_dim < 1 || s.out_dim < 1)
        throw CheckpointShapeError("layer " + std::to_string(k) + ": dimensions must be >= 1");
      if (k > 0 && ckpt.params.specs.back().out_dim != s.in_dim)
        throw CheckpointShapeError("layer " + std::to_string(k) + ": broken dimension chain");

      const auto& w = weights[k];
      const auto& b = biases[k];
      if (!w.is_array() || static_cast<int>(w.size()) != s.out_dim)
        throw CheckpointShapeError("layer " + std::to_string(k) + ": weight row count");
      if (!b.is_array() || static_cast<int>(b.size()) != s.out_dim)
        throw CheckpointShapeError("layer " + std::to_string(k) + ": bias length");
      DenseLayer layer;
      layer.weights.resize(s.out_dim, s.in_dim);
      layer.biases.resize(s.out_dim);
      for (int r = 0; r < s.out_dim; ++r) {
        if (!w[r].is_array() || static_cast<int>(w[r].size()) != s.in_dim)
          throw CheckpointShapeError("layer " + std::to_string(k) + ": weight column count");
        for (int c = 0; c < s.in_dim; ++c) layer.weights(r, c) = w[r][c].get<double>();
        layer.biases(r) = b[r].get<double>();
      }
      ckpt.params.specs.push_back(s);
      ckpt.params.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw CorruptCheckpointError(std::string("malformed layer data: ") + e.what());
  } catch (const ConfigError& e) {
    throw CorruptCheckpointError(e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto text = checkpoint_to_json(ckpt).dump(1);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out << text << '\n';
  if (!out) throw CheckpointError("write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CorruptCheckpointError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
  auto ckpt = checkpoint_from_json(doc);
  if (expected_kind && ckpt.model_kind != *expected_kind) {
    throw CheckpointError("checkpoint " + path.string() + " holds model_kind '" +
                          ckpt.model_kind + "', expected '" + *expected_kind + "'");
  }
  return ckpt;
}

std::string fingerprint(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return fingerprint(bytes);
}

}  // namespace keyspoof
