#pragma once

// Siamese keystroke authenticator over 15-key windows.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "keyspoof/adam.hpp"
#include "keyspoof/checkpoint.hpp"
#include "keyspoof/keystroke_data.hpp"
#include "keyspoof/network.hpp"
#include "keyspoof/random.hpp"

namespace keyspoof {

enum class PairLabel { same_user, different_user };

struct SequencePair {
  CharSequenceSample a;
  CharSequenceSample b;
  PairLabel label = PairLabel::same_user;
};

struct UserSequences {
  std::string user_id;
  std::vector<CharSequenceSample> sequences;
};

struct VerifierConfig {
  std::vector<int> hidden = {128};
  int embedding_dim = 64;
  double margin = 1.0;
  int epochs = 50;
  int batch_size = 32;
  int train_pairs = 2000;
  int validation_pairs = 2000;
  double holdout_fraction = 1.0 / 3.0;
  double timing_gain = 1.0;  // input scale on timing cells, see timing_gain_cells
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
};

struct VerifierBundle {
  NetworkParams embedding;
  double threshold = 0.0;
  bool calibrated = false;
  double margin = 1.0;
  double timing_gain = 1.0;
  std::uint64_t seed = 0;
  int epochs_trained = 0;
  std::vector<double> epoch_losses;
};

struct Calibration {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
  double eer = 0.0;
};

/// Non-overlapping 15-row windows over one sentence; the remainder is dropped.
std::vector<CharSequenceSample> sequences_from_events(std::span<const KeyEvent> events,
                                                      const std::string& user_id,
                                                      SampleSource source);

/// Per-user windows in corpus order. Users with fewer than 15 events per
/// sentence contribute nothing; throws ValidationError if no window exists.
std::vector<UserSequences> sequences_from_corpus(const Corpus& corpus);

/// Splits each user's sentences: the leading share trains, the rest is held
/// out.
struct CorpusSplit {
  Corpus train;
  Corpus holdout;
};
CorpusSplit split_corpus(const Corpus& corpus, double holdout_fraction);

/// Balanced genuine/impostor pairs drawn uniformly. Throws when no user has
/// two windows or fewer than two users have any.
std::vector<SequencePair> make_pairs(std::span<const UserSequences> users, int n_pairs, Rng& rng);

VerifierBundle make_verifier(const VerifierConfig& config, std::uint64_t seed);

/// Embedding of one window.
Eigen::VectorXd embed_sequence(const VerifierBundle& bundle, const CharSequenceSample& s);

double distance(const VerifierBundle& bundle, const CharSequenceSample& a,
                const CharSequenceSample& b);

/// Minimizes mean contrastive loss with Adam. Throws ValidationError when
/// the pair set lacks either label.
VerifierBundle train_verifier(std::span<const SequencePair> pairs, const VerifierConfig& config,
                              std::uint64_t seed);

/// Equal-error-rate threshold over the observed distances: the candidate
/// minimizing |FAR - FRR|, ties resolved toward the smaller distance.
Calibration calibrate_threshold(std::span<const double> genuine, std::span<const double> impostor);
Calibration calibrate_threshold(VerifierBundle& bundle, std::span<const SequencePair> pairs);

/// Throws ValidationError for an uncalibrated bundle.
PairLabel verify(const VerifierBundle& bundle, const CharSequenceSample& a,
                 const CharSequenceSample& b);

/// Fraction of pairs whose decision matches the label.
double pair_accuracy(const VerifierBundle& bundle, std::span<const SequencePair> pairs);

Checkpoint verifier_checkpoint(const VerifierBundle& bundle);
VerifierBundle verifier_from_checkpoint(const Checkpoint& ckpt);

}  // namespace keyspoof
