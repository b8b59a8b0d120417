#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string_view>

namespace keyspoof {

inline constexpr int kEmbeddingDim = 100;
inline constexpr std::uint64_t kDefaultEmbedSeed = 0x5EED;
inline constexpr std::size_t kMaxWordLength = 15;

using EmbeddingVector = std::array<double, kEmbeddingDim>;

/// Seeded position-weighted bag-of-characters word embedding.
///
/// Every byte value owns a fixed pseudo-random unit vector. A word maps to
/// sum_i c(ch_i) / (1 + i), rescaled to unit length. The table is immutable
/// after construction and safe to share across threads.
class CharEmbedding {
 public:
  explicit CharEmbedding(std::uint64_t seed = kDefaultEmbedSeed);

  /// Throws ValidationError for empty text or text longer than 15 chars.
  EmbeddingVector embed(std::string_view text) const;
  const EmbeddingVector& char_vector(unsigned char ch) const { return table_[ch]; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Shared table for the given seed, built on first use.
  static std::shared_ptr<const CharEmbedding> shared(std::uint64_t seed = kDefaultEmbedSeed);

 private:
  std::uint64_t seed_;
  std::array<EmbeddingVector, 256> table_{};
};

/// embed with the default 0x5EED table.
EmbeddingVector embed_word(std::string_view text);

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace keyspoof
