#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "keyspoof/attack.hpp"
#include "keyspoof/cgan.hpp"
#include "keyspoof/char_embed.hpp"
#include "keyspoof/verifier.hpp"

namespace keyspoof {

struct PathsConfig {
  std::string corpus = "run/corpus.tsv";
  std::string checkpoints = "run/checkpoints";
  std::string reports = "run/reports";
};

/// Sub-seeds left unset are derived from the global seed.
struct SeedsConfig {
  std::uint64_t global = 7;
  std::uint64_t embedding = kDefaultEmbedSeed;
  std::optional<std::uint64_t> data;
  std::optional<std::uint64_t> verifier;
  std::optional<std::uint64_t> gan;
  std::optional<std::uint64_t> attack;
  std::optional<std::uint64_t> eval;
};

struct DataConfig {
  int users = 25;
  int sentences = 15;
  std::string target_user = "u0";
};

struct AttackSettings {
  int n_sequences = 20;
  bool fit_space_model = true;
  SpaceModel space;
  std::vector<std::string> conditions = {"ordered", "random"};
};

struct RunConfig {
  PathsConfig paths;
  SeedsConfig seeds;
  DataConfig data;
  VerifierConfig verifier;
  GanConfig gan;
  AttackSettings attack;

  std::uint64_t data_seed() const;
  std::uint64_t verifier_seed() const;
  std::uint64_t gan_seed() const;
  std::uint64_t attack_seed() const;
  std::uint64_t eval_seed() const;
};

/// Overlays `doc` on the defaults. Unknown keys and wrongly typed values are
/// rejected with ConfigError.
RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Full document, defaults included, with resolved seeds.
nlohmann::json config_to_json(const RunConfig& config);

/// Fingerprint of the canonical config document.
std::string config_hash(const RunConfig& config);

void validate(const RunConfig& config);

}  // namespace keyspoof
