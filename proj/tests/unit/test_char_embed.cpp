#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "keyspoof/char_embed.hpp"
#include "keyspoof/errors.hpp"

using namespace keyspoof;

namespace {

double norm(const EmbeddingVector& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST(CharEmbedding, UnitLengthAndDeterministic) {
  for (const char* w : {"a", "password", "the", "zzzzzzzzzzzzzzz"}) {
    const auto v = embed_word(w);
    EXPECT_NEAR(norm(v), 1.0, 1e-6) << w;
    EXPECT_EQ(v, embed_word(w));
  }
}

TEST(CharEmbedding, CharacterVectorsAreUnit) {
  const CharEmbedding e;
  for (int ch = 0; ch < 256; ++ch) EXPECT_NEAR(norm(e.char_vector(ch)), 1.0, 1e-12);
}

TEST(CharEmbedding, RejectsEmptyAndLong) {
  EXPECT_THROW(embed_word(""), ValidationError);
  EXPECT_THROW(embed_word("abcdefghijklmnop"), ValidationError);
  EXPECT_NO_THROW(embed_word("abcdefghijklmno"));
}

TEST(CharEmbedding, MatchesWeightedSumDefinition) {
  const CharEmbedding e;
  const std::string w = "hello";
  EmbeddingVector ref{};
  for (std::size_t i = 0; i < w.size(); ++i)
    for (int d = 0; d < kEmbeddingDim; ++d)
      ref[d] += e.char_vector(static_cast<unsigned char>(w[i]))[d] / (1.0 + i);
  const double n = norm(ref);
  const auto got = e.embed(w);
  for (int d = 0; d < kEmbeddingDim; ++d) EXPECT_NEAR(got[d], ref[d] / n, 1e-12);
}

TEST(CharEmbedding, ListedExamples) {
  const auto hello = embed_word("hello");
  EXPECT_GT(cosine_similarity(hello, embed_word("hellp")),
            cosine_similarity(hello, embed_word("zzzzz")));
  EXPECT_NE(embed_word("ab"), embed_word("ba"));
  std::string w = "keyboard";
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::string v = w;
    v[i] = 'q';
    EXPECT_NE(embed_word(v), embed_word(w)) << i;
  }
}

TEST(CharEmbedding, SharedPrefixIsCloser) {
  // "password"/"passw0rd" share most leading characters, "zebra" none.
  const auto a = embed_word("password");
  EXPECT_GT(cosine_similarity(a, embed_word("passw0rd")), cosine_similarity(a, embed_word("zebra")));
  EXPECT_GT(cosine_similarity(a, embed_word("passwords")),
            cosine_similarity(a, embed_word("drowssap")));
}

TEST(CharEmbedding, NoNearDuplicatesAmongRandomWords) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> len(3, 10);
  std::uniform_int_distribution<int> letter(0, 25);
  std::set<std::string> words;
  while (words.size() < 1000) {
    std::string w(static_cast<std::size_t>(len(rng)), 'a');
    for (auto& c : w) c = static_cast<char>('a' + letter(rng));
    words.insert(w);
  }
  std::vector<EmbeddingVector> vecs;
  for (const auto& w : words) vecs.push_back(embed_word(w));
  double closest = 1e9;
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    for (std::size_t j = i + 1; j < vecs.size(); ++j) {
      double d2 = 0;
      for (int d = 0; d < kEmbeddingDim; ++d) d2 += (vecs[i][d] - vecs[j][d]) * (vecs[i][d] - vecs[j][d]);
      closest = std::min(closest, std::sqrt(d2));
    }
  }
  EXPECT_GT(closest, 1e-3);
}

TEST(CharEmbedding, SeedChangesTable) {
  const CharEmbedding a(1);
  const CharEmbedding b(2);
  EXPECT_NE(a.embed("abc"), b.embed("abc"));
  EXPECT_EQ(CharEmbedding::shared(1)->embed("abc"), a.embed("abc"));
  EXPECT_EQ(CharEmbedding::shared(1).get(), CharEmbedding::shared(1).get());
}
