#pragma once

// Keystroke logs, latency features and the fixed-size matrices consumed by
// the generator, discriminator and verifier.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace keyspoof {

inline constexpr int kSequenceRows = 15;
inline constexpr int kFeatureCols = 5;
inline constexpr int kFlatFeatures = kSequenceRows * kFeatureCols;
inline constexpr double kMaxLatencySeconds = 5.0;
inline constexpr int kMaxKeycode = 255;
inline constexpr int kSpaceKeycode = 32;

/// Column layout of every normalized feature row.
enum FeatureColumn : int { kHold = 0, kInterKey = 1, kPress = 2, kRelease = 3, kKeycode = 4 };

/// One keystroke. Times are milliseconds.
struct KeyEvent {
  int keycode = 0;
  double press_ms = 0.0;
  double release_ms = 0.0;

  bool operator==(const KeyEvent&) const = default;
};

/// Latencies in seconds for one key relative to the next one.
struct FeatureRow {
  double hl = 0.0;
  double il = 0.0;
  double pl = 0.0;
  double rl = 0.0;
  int keycode = 0;

  bool operator==(const FeatureRow&) const = default;
};

using NormalizedRow = std::array<double, kFeatureCols>;
using FeatureMatrix = Eigen::Matrix<double, kSequenceRows, kFeatureCols, Eigen::RowMajor>;

/// One word as a padded 15x5 matrix. Rows at or beyond valid_len are zero.
struct WordSample {
  std::string text;
  FeatureMatrix matrix = FeatureMatrix::Zero();
  int valid_len = 0;
};

enum class SampleSource { real, synthetic };

/// A full 15-key window as seen by the verifier.
struct CharSequenceSample {
  FeatureMatrix matrix = FeatureMatrix::Zero();
  SampleSource source = SampleSource::real;
  std::string user_id;
};

struct Sentence {
  std::string id;
  std::vector<KeyEvent> events;
};

struct UserLog {
  std::string id;
  std::vector<Sentence> sentences;
};

struct Corpus {
  std::vector<UserLog> users;

  /// nullptr when the user is absent.
  const UserLog* find_user(std::string_view id) const;
  std::size_t event_count() const;
};

/// Reads the five-column TSV log (header required). Users and sentences keep
/// their first-appearance order; events are sorted by press time.
Corpus ingest_log(const std::filesystem::path& path);
Corpus parse_log(std::istream& in);

void write_log(std::ostream& out, const Corpus& corpus);
void write_log(const std::filesystem::path& path, const Corpus& corpus);

/// Throws ValidationError naming the offending event.
void validate_events(std::span<const KeyEvent> events);

std::vector<FeatureRow> extract_features(std::span<const KeyEvent> events);

NormalizedRow normalize(const FeatureRow& row);
std::vector<NormalizedRow> normalize(std::span<const FeatureRow> rows);
FeatureRow denormalize(const NormalizedRow& row);
std::vector<FeatureRow> denormalize(const WordSample& sample);

/// Cell range for a normalized column: [-1, 1] for inter-key latency,
/// [0, 1] otherwise.
double column_min(int column) noexcept;
inline constexpr double column_max(int) noexcept { return 1.0; }

/// Splits a sentence on spaces and packs every word into a padded sample.
std::vector<WordSample> words_from_sentence(std::span<const KeyEvent> events);

/// Builds a padded sample from up to 15 events of a single word.
WordSample make_word_sample(std::span<const KeyEvent> word_events);

/// Keycodes of `text`, normalized to [0, 1].
std::vector<double> normalized_keycodes(std::string_view text);

/// Flattened (row-major) per-cell scale: `gain` on the four timing columns,
/// 1 on the keycode column. Networks multiply their inputs by this.
Eigen::VectorXd timing_gain_cells(double gain);

/// Deterministic multi-user corpus with user-specific hold and gap profiles.
Corpus synth_corpus(int n_users, int sentences_per_user, std::uint64_t seed);

}  // namespace keyspoof
