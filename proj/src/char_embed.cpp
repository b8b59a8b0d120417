#include "keyspoof/char_embed.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "keyspoof/errors.hpp"
#include "keyspoof/random.hpp"

namespace keyspoof {

namespace {

void normalize_in_place(EmbeddingVector& v) {
  double sq = 0.0;
  for (const double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  for (double& x : v) x /= norm;
}

}  // namespace

CharEmbedding::CharEmbedding(std::uint64_t seed) : seed_(seed) {
  for (std::size_t ch = 0; ch < table_.size(); ++ch) {
    Rng rng = make_rng(seed, ch);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (double& x : table_[ch]) x = unit(rng);
    normalize_in_place(table_[ch]);
  }
}

EmbeddingVector CharEmbedding::embed(std::string_view text) const {
  if (text.empty() || text.size() > kMaxWordLength) {
    throw ValidationError("embed_word: text must have 1-15 characters, got " +
                          std::to_string(text.size()));
  }
  EmbeddingVector out{};
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto& c = table_[static_cast<unsigned char>(text[i])];
    const double w = 1.0 / (1.0 + static_cast<double>(i));
    for (int d = 0; d < kEmbeddingDim; ++d) out[d] += w * c[d];
  }
  normalize_in_place(out);
  return out;
}

std::shared_ptr<const CharEmbedding> CharEmbedding::shared(std::uint64_t seed) {
  static std::mutex mutex;
  static std::map<std::uint64_t, std::shared_ptr<const CharEmbedding>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[seed];
  if (!slot) slot = std::make_shared<const CharEmbedding>(seed);
  return slot;
}

EmbeddingVector embed_word(std::string_view text) {
  static const auto table = CharEmbedding::shared(kDefaultEmbedSeed);
  return table->embed(text);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (int d = 0; d < kEmbeddingDim; ++d) {
    ab += a[d] * b[d];
    aa += a[d] * a[d];
    bb += b[d] * b[d];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace keyspoof
