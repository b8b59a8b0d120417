#pragma once

// Conditional generator/discriminator pair trained on one user's words.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "keyspoof/adam.hpp"
#include "keyspoof/char_embed.hpp"
#include "keyspoof/checkpoint.hpp"
#include "keyspoof/keystroke_data.hpp"
#include "keyspoof/network.hpp"
#include "keyspoof/random.hpp"

namespace keyspoof {

inline constexpr int kLatentDim = 500;
inline constexpr int kGeneratorInput = kLatentDim + kEmbeddingDim;  // 600
inline constexpr int kDiscriminatorInput = kFlatFeatures + kEmbeddingDim;  // 175

struct GanConfig {
  std::vector<int> generator_hidden = {512, 512};
  std::vector<int> discriminator_hidden = {256, 128};
  int batch_size = 32;
  int max_epochs = 5000;
  int check_interval = 50;
  int check_subsets = 5;
  int check_subset_size = 32;
  double stop_threshold = 0.85;
  // Timing cells are multiplied by this before entering the discriminator.
  // Normalized latencies sit near 0.02, too small for Glorot-scaled weights.
  double timing_gain = 20.0;
  double latent_stddev = 0.02;
  AdamConfig generator_adam{};
  AdamConfig discriminator_adam{};
};

struct StopCheckResult {
  int epoch = 0;
  bool stop = false;
  double real_accuracy = 0.0;
  double fake_accuracy = 0.0;
  std::vector<double> subset_real_accuracy;
  std::vector<double> subset_fake_accuracy;
};

struct EpochStats {
  double d_loss = 0.0;
  double g_loss = 0.0;
  double d_real_acc = 0.0;
  double d_fake_acc = 0.0;
};

struct GanBundle {
  NetworkParams generator;
  NetworkParams discriminator;
  AdamState generator_state;
  AdamState discriminator_state;
  std::shared_ptr<const CharEmbedding> embedding;
  std::uint64_t seed = 0;
  double timing_gain = 1.0;
  double latent_stddev = 1.0;
  int epochs_trained = 0;
  bool converged = false;
  std::vector<StopCheckResult> history;
};

/// Fresh bundle: generator 600 -> hidden -> 75 (leaky ReLU, sigmoid output),
/// discriminator 175 -> hidden -> 1 (leaky ReLU, sigmoid output).
GanBundle make_gan(const GanConfig& config, std::uint64_t seed,
                   std::uint64_t embed_seed = kDefaultEmbedSeed);

/// Flattened 75-vector, row-major.
Eigen::VectorXd flatten(const FeatureMatrix& m);
FeatureMatrix unflatten(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Cells the generator controls for a word of `valid_len` keys: timing cells
/// of real rows. Padding rows and the keycode column are fixed; the last real
/// row keeps only its hold time.
Eigen::VectorXd generator_mask(int valid_len);

/// Post-processing applied to raw generator output for `text`.
WordSample shape_generated(const Eigen::Ref<const Eigen::VectorXd>& raw, std::string_view text);

WordSample generate_word(const GanBundle& bundle, std::string_view text, Rng& rng);

/// Discriminator probability that (sample, condition) is a real pair.
double discriminate(const GanBundle& bundle, const WordSample& sample,
                    const EmbeddingVector& condition);

/// One pass over shuffled batches: discriminator step on real (target 1) and
/// generated (target 0) pairs, then a generator step through the updated
/// discriminator with target 1.
EpochStats train_epoch(GanBundle& bundle, std::span<const WordSample> words, int batch_size,
                       Rng& rng);

using DiscriminatorFn = std::function<double(const WordSample&, const EmbeddingVector&)>;
using GeneratorFn = std::function<WordSample(std::string_view, Rng&)>;

/// Draws `subsets` subsets of `subset_size` real words (with replacement when
/// fewer are available) plus one synthetic sample per drawn word, scores all
/// of them and averages the per-subset accuracies. Scores above 0.5 count as
/// real; ties count as synthetic.
StopCheckResult stop_check(const DiscriminatorFn& discriminator, const GeneratorFn& generator,
                           std::span<const WordSample> real_words, const GanConfig& config,
                           const CharEmbedding& embedding, Rng& rng);
StopCheckResult stop_check(const GanBundle& bundle, std::span<const WordSample> real_words,
                           const GanConfig& config, Rng& rng);

/// Optional per-epoch observer, e.g. for progress logging.
using EpochCallback = std::function<void(int epoch, const EpochStats&, const StopCheckResult*)>;

/// Trains until the stop criterion holds at a check or max_epochs is reached.
void train(GanBundle& bundle, std::span<const WordSample> words, const GanConfig& config,
           Rng& rng, const EpochCallback& on_epoch = {});

Checkpoint generator_checkpoint(const GanBundle& bundle);
Checkpoint discriminator_checkpoint(const GanBundle& bundle);
/// Rebuilds a frozen bundle (fresh optimizer state) from the two checkpoints.
GanBundle bundle_from_checkpoints(const Checkpoint& generator, const Checkpoint& discriminator,
                                  const GanConfig& config);

}  // namespace keyspoof
