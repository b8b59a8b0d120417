#pragma once

// Rebuilds full typing streams from generated words and slices them into
// verifier windows.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "keyspoof/cgan.hpp"
#include "keyspoof/keystroke_data.hpp"
#include "keyspoof/random.hpp"

namespace keyspoof {

enum class AttackCondition { ordered, random };

std::string_view to_string(AttackCondition c) noexcept;
/// Throws ConfigError listing the valid names.
AttackCondition condition_from_string(std::string_view name);

struct Gaussian {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Timing of the space key inserted between words, in seconds.
struct SpaceModel {
  Gaussian pre_gap{0.110, 0.030};
  Gaussian hold{0.080, 0.015};
  Gaussian post_gap{0.110, 0.030};
  bool fitted = false;
};

/// Fits the space model to the spaces observed in `user`; keeps the defaults
/// when fewer than two spaces with neighbours on both sides exist.
SpaceModel fit_space_model(const UserLog& user);

struct AttackConfig {
  AttackCondition condition = AttackCondition::ordered;
  int n_sequences = 20;
  std::uint64_t seed = 0;
  SpaceModel space;
  bool allow_regeneration = true;
};

struct PlannedWord {
  std::size_t source = 0;  // index in the corpus word list
  std::string text;
};

/// ordered: input order; random: a seeded permutation.
std::vector<PlannedWord> plan_words(std::span<const std::string> corpus_words,
                                    AttackCondition condition, Rng& rng);

struct StitchedStream {
  std::vector<KeyEvent> events;
  std::vector<FeatureRow> rows;             // re-extracted over the whole stream
  std::vector<NormalizedRow> normalized;
};

inline constexpr double kMinPressStepSeconds = 0.001;

/// Integrates each word's hold/inter-key chain into absolute events, joins
/// words with one synthesized space and re-extracts features. Presses are
/// kept strictly increasing by at least 1 ms.
StitchedStream stitch(std::span<const WordSample> words, const SpaceModel& space, Rng& rng,
                      double start_ms = 0.0);

struct AttackResult {
  std::vector<PlannedWord> plan;       // every planned word, all rounds
  std::vector<WordSample> words;       // generated sample per planned word
  std::vector<KeyEvent> events;        // stitched stream, 15 * n + 1 events at most
  std::vector<CharSequenceSample> sequences;
};

/// Generates planned words with per-word random streams keyed by (round,
/// source index), so both conditions produce identical words in a different
/// order. Extra planning rounds run until n_sequences windows exist.
AttackResult build_attack_sequences(const GanBundle& gan, std::span<const std::string> corpus_words,
                                    const AttackConfig& config);

/// Word texts of a user's sentences, in corpus order.
std::vector<std::string> corpus_word_texts(const UserLog& user);

/// Attack streams as a log under user id "attacker", one sentence per set.
Corpus attack_corpus(const std::vector<std::pair<std::string, std::vector<KeyEvent>>>& sets);

}  // namespace keyspoof
