#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "keyspoof/network.hpp"

namespace keyspoof {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  std::string model_kind;
  NetworkParams params;
  std::uint64_t embed_seed = 0;
  std::uint64_t rng_seed = 0;
  std::int64_t trained_epochs = 0;
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);

/// Throws CheckpointVersionError, CheckpointShapeError or
/// CorruptCheckpointError depending on what is wrong with the document.
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// When `expected_kind` is set, a different model_kind is rejected with
/// CheckpointError.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_kind = std::nullopt);

/// FNV-1a 64 over the file bytes, rendered as 16 hex digits.
std::string file_fingerprint(const std::filesystem::path& path);
std::string fingerprint(std::string_view bytes);

}  // namespace keyspoof
