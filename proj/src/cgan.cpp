#include "keyspoof/cgan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "keyspoof/errors.hpp"
#include "keyspoof/losses.hpp"

namespace keyspoof {

namespace {

Eigen::VectorXd to_eigen(const EmbeddingVector& e) {
  return Eigen::Map<const Eigen::VectorXd>(e.data(), kEmbeddingDim);
}

// Flattened keycode column for `text`, zero elsewhere.
Eigen::VectorXd keycode_cells(std::string_view text) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kFlatFeatures);
  const auto codes = normalized_keycodes(text);
  for (std::size_t r = 0; r < codes.size() && r < kSequenceRows; ++r)
    out(static_cast<Eigen::Index>(r) * kFeatureCols + kKeycode) = codes[r];
  return out;
}

void check_text(std::string_view text) {
  if (text.empty() || text.size() > kMaxWordLength) {
    throw ValidationError("word text must have 1-15 characters, got " +
                          std::to_string(text.size()));
  }
}

void fill_latent(Eigen::Ref<Eigen::VectorXd> z, double stddev, Rng& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = stddev * unit(rng);
}

nlohmann::json history_to_json(const std::vector<StopCheckResult>& history) {
  auto out = nlohmann::json::array();
  for (const auto& h : history) {
    out.push_back({{"epoch", h.epoch},
                   {"stop", h.stop},
                   {"real_accuracy", h.real_accuracy},
                   {"fake_accuracy", h.fake_accuracy},
                   {"subset_real_accuracy", h.subset_real_accuracy},
                   {"subset_fake_accuracy", h.subset_fake_accuracy}});
  }
  return out;
}

std::vector<StopCheckResult> history_from_json(const nlohmann::json& doc) {
  std::vector<StopCheckResult> out;
  if (!doc.is_array()) return out;
  for (const auto& h : doc) {
    StopCheckResult r;
    r.epoch = h.value("epoch", 0);
    r.stop = h.value("stop", false);
    r.real_accuracy = h.value("real_accuracy", 0.0);
    r.fake_accuracy = h.value("fake_accuracy", 0.0);
    r.subset_real_accuracy = h.value("subset_real_accuracy", std::vector<double>{});
    r.subset_fake_accuracy = h.value("subset_fake_accuracy", std::vector<double>{});
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<int> widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

}  // namespace

GanBundle make_gan(const GanConfig& config, std::uint64_t seed, std::uint64_t embed_seed) {
  GanBundle bundle;
  const auto g_widths = widths(kGeneratorInput, config.generator_hidden, kFlatFeatures);
  const auto d_widths = widths(kDiscriminatorInput, config.discriminator_hidden, 1);
  bundle.generator = init_network(
      chain_specs(g_widths, Activation::leaky_relu, Activation::sigmoid), derive_seed(seed, 1));
  bundle.discriminator = init_network(
      chain_specs(d_widths, Activation::leaky_relu, Activation::sigmoid), derive_seed(seed, 2));
  bundle.generator_state = make_adam_state(bundle.generator, config.generator_adam);
  bundle.discriminator_state = make_adam_state(bundle.discriminator, config.discriminator_adam);
  bundle.embedding = CharEmbedding::shared(embed_seed);
  bundle.seed = seed;
  bundle.timing_gain = config.timing_gain;
  bundle.latent_stddev = config.latent_stddev;
  return bundle;
}

Eigen::VectorXd flatten(const FeatureMatrix& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), kFlatFeatures);
}

FeatureMatrix unflatten(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != kFlatFeatures) throw ShapeError("unflatten: expected 75 values");
  FeatureMatrix m;
  for (int r = 0; r < kSequenceRows; ++r)
    for (int c = 0; c < kFeatureCols; ++c) m(r, c) = v(r * kFeatureCols + c);
  return m;
}

Eigen::VectorXd generator_mask(int valid_len) {
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(kFlatFeatures);
  for (int r = 0; r < valid_len && r < kSequenceRows; ++r) {
    mask(r * kFeatureCols + kHold) = 1.0;
    if (r + 1 < valid_len) {
      mask(r * kFeatureCols + kInterKey) = 1.0;
      mask(r * kFeatureCols + kPress) = 1.0;
      mask(r * kFeatureCols + kRelease) = 1.0;
    }
  }
  return mask;
}

WordSample shape_generated(const Eigen::Ref<const Eigen::VectorXd>& raw, std::string_view text) {
  check_text(text);
  if (raw.size() != kFlatFeatures) throw ShapeError("generator output must have 75 values");
  const int len = static_cast<int>(text.size());
  const Eigen::VectorXd mask = generator_mask(len);
  const auto codes = normalized_keycodes(text);
  WordSample sample;
  sample.text = std::string(text);
  sample.valid_len = len;
  sample.matrix.setZero();
  for (int r = 0; r < len; ++r) {
    for (int c = 0; c < kKeycode; ++c) {
      const int i = r * kFeatureCols + c;
      sample.matrix(r, c) = mask(i) * std::clamp(raw(i), column_min(c), column_max(c));
    }
    sample.matrix(r, kKeycode) = codes[r];
  }
  return sample;
}

WordSample generate_word(const GanBundle& bundle, std::string_view text, Rng& rng) {
  check_text(text);
  Eigen::VectorXd input(kGeneratorInput);
  fill_latent(input.head(kLatentDim), bundle.latent_stddev, rng);
  input.tail(kEmbeddingDim) = to_eigen(bundle.embedding->embed(text));
  const Eigen::VectorXd raw = forward(bundle.generator, input);
  return shape_generated(raw, text);
}

double discriminate(const GanBundle& bundle, const WordSample& sample,
                    const EmbeddingVector& condition) {
  if (sample.valid_len < 1 || sample.valid_len > kSequenceRows)
    throw ShapeError("discriminate: valid_len outside 1-15");
  Eigen::VectorXd input(kDiscriminatorInput);
  input.head(kFlatFeatures) = flatten(sample.matrix).cwiseProduct(timing_gain_cells(bundle.timing_gain));
  input.tail(kEmbeddingDim) = to_eigen(condition);
  return forward(bundle.discriminator, input)(0);
}

EpochStats train_epoch(GanBundle& bundle, std::span<const WordSample> words, int batch_size,
                       Rng& rng) {
  if (words.empty()) throw ValidationError("train_epoch: no word samples");
  if (batch_size < 1) throw ValidationError("train_epoch: batch_size must be >= 1");

  const auto n = static_cast<int>(words.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  const Eigen::VectorXd gain = timing_gain_cells(bundle.timing_gain);
  EpochStats stats;
  int batches = 0;
  int real_correct = 0;
  int fake_correct = 0;
  for (int start = 0; start < n; start += batch_size) {
    const int b = std::min(batch_size, n - start);
    Eigen::MatrixXd real(kDiscriminatorInput, b);
    Eigen::MatrixXd latent(kGeneratorInput, b);
    Eigen::MatrixXd mask(kFlatFeatures, b);
    Eigen::MatrixXd fixed(kFlatFeatures, b);
    for (int j = 0; j < b; ++j) {
      const auto& w = words[order[start + j]];
      const Eigen::VectorXd cond = to_eigen(bundle.embedding->embed(w.text));
      real.col(j).head(kFlatFeatures) = flatten(w.matrix).cwiseProduct(gain);
      real.col(j).tail(kEmbeddingDim) = cond;
      fill_latent(latent.col(j).head(kLatentDim), bundle.latent_stddev, rng);
      latent.col(j).tail(kEmbeddingDim) = cond;
      mask.col(j) = generator_mask(w.valid_len);
      fixed.col(j) = keycode_cells(w.text);
    }

    Tape g_tape;
    const Eigen::MatrixXd raw = forward(bundle.generator, latent, &g_tape);
    Eigen::MatrixXd fake(kDiscriminatorInput, b);
    fake.topRows(kFlatFeatures) = (raw.cwiseProduct(mask) + fixed).array().colwise() * gain.array();
    fake.bottomRows(kEmbeddingDim) = latent.bottomRows(kEmbeddingDim);

    // Discriminator step.
    Eigen::MatrixXd d_input(kDiscriminatorInput, 2 * b);
    d_input << real, fake;
    Tape d_tape;
    const Eigen::MatrixXd scores = forward(bundle.discriminator, d_input, &d_tape);
    Eigen::MatrixXd d_grad(1, 2 * b);
    double d_loss = 0.0;
    for (int j = 0; j < 2 * b; ++j) {
      const bool is_real = j < b;
      const auto l = bce_loss(scores(0, j), is_real ? 1.0 : 0.0);
      d_loss += l.loss / b;
      d_grad(0, j) = l.gradient / b;
      if (is_real && scores(0, j) > 0.5) ++real_correct;
      if (!is_real && scores(0, j) <= 0.5) ++fake_correct;
    }
    if (!std::isfinite(d_loss)) {
      std::ostringstream msg;
      msg << "discriminator loss became non-finite at epoch " << bundle.epochs_trained + 1
          << ", batch " << batches;
      throw TrainingError(msg.str());
    }
    adam_step(bundle.discriminator, backward(bundle.discriminator, d_tape, d_grad).params,
              bundle.discriminator_state);

    // Generator step through the updated discriminator.
    Tape df_tape;
    const Eigen::MatrixXd fake_scores = forward(bundle.discriminator, fake, &df_tape);
    Eigen::MatrixXd g_out_grad(1, b);
    double g_loss = 0.0;
    for (int j = 0; j < b; ++j) {
      const auto l = bce_loss(fake_scores(0, j), 1.0);
      g_loss += l.loss / b;
      g_out_grad(0, j) = l.gradient / b;
    }
    if (!std::isfinite(g_loss)) {
      std::ostringstream msg;
      msg << "generator loss became non-finite at epoch " << bundle.epochs_trained + 1
          << ", batch " << batches;
      throw TrainingError(msg.str());
    }
    const auto through_d = backward(bundle.discriminator, df_tape, g_out_grad);
    const Eigen::MatrixXd raw_grad =
        (through_d.input_gradient.topRows(kFlatFeatures).array().colwise() * gain.array())
            .matrix()
            .cwiseProduct(mask);
    adam_step(bundle.generator, backward(bundle.generator, g_tape, raw_grad).params,
              bundle.generator_state);

    stats.d_loss += d_loss;
    stats.g_loss += g_loss;
    ++batches;
  }
  stats.d_loss /= batches;
  stats.g_loss /= batches;
  stats.d_real_acc = static_cast<double>(real_correct) / n;
  stats.d_fake_acc = static_cast<double>(fake_correct) / n;
  return stats;
}

StopCheckResult stop_check(const DiscriminatorFn& discriminator, const GeneratorFn& generator,
                           std::span<const WordSample> real_words, const GanConfig& config,
                           const CharEmbedding& embedding, Rng& rng) {
  if (real_words.empty()) throw ValidationError("stop_check: no real samples");
  const auto n_real = real_words.size();
  const auto subset = static_cast<std::size_t>(config.check_subset_size);

  StopCheckResult result;
  std::vector<std::size_t> pool(n_real);
  for (int s = 0; s < config.check_subsets; ++s) {
    std::vector<std::size_t> picks;
    if (n_real >= subset) {
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t i = 0; i < subset; ++i) {
        std::uniform_int_distribution<std::size_t> d(i, n_real - 1);
        std::swap(pool[i], pool[d(rng)]);
      }
      picks.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(subset));
    } else {
      std::uniform_int_distribution<std::size_t> d(0, n_real - 1);
      for (std::size_t i = 0; i < subset; ++i) picks.push_back(d(rng));
    }

    int real_hits = 0;
    int fake_hits = 0;
    for (const auto idx : picks) {
      const auto& w = real_words[idx];
      const auto cond = embedding.embed(w.text);
      if (discriminator(w, cond) > 0.5) ++real_hits;
      const auto fake = generator(w.text, rng);
      if (discriminator(fake, cond) <= 0.5) ++fake_hits;
    }
    result.subset_real_accuracy.push_back(static_cast<double>(real_hits) / picks.size());
    result.subset_fake_accuracy.push_back(static_cast<double>(fake_hits) / picks.size());
  }
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  result.real_accuracy = mean(result.subset_real_accuracy);
  result.fake_accuracy = mean(result.subset_fake_accuracy);
  result.stop = result.real_accuracy >= config.stop_threshold &&
                result.fake_accuracy >= config.stop_threshold;
  return result;
}

StopCheckResult stop_check(const GanBundle& bundle, std::span<const WordSample> real_words,
                           const GanConfig& config, Rng& rng) {
  auto d = [&](const WordSample& s, const EmbeddingVector& c) {
    return discriminate(bundle, s, c);
  };
  auto g = [&](std::string_view text, Rng& r) { return generate_word(bundle, text, r); };
  auto result = stop_check(d, g, real_words, config, *bundle.embedding, rng);
  result.epoch = bundle.epochs_trained;
  return result;
}

void train(GanBundle& bundle, std::span<const WordSample> words, const GanConfig& config,
           Rng& rng, const EpochCallback& on_epoch) {
  if (config.check_interval < 1) throw ConfigError("check_interval must be >= 1");
  while (bundle.epochs_trained < config.max_epochs) {
    const auto stats = train_epoch(bundle, words, config.batch_size, rng);
    ++bundle.epochs_trained;
    if (bundle.epochs_trained % config.check_interval != 0) {
      if (on_epoch) on_epoch(bundle.epochs_trained, stats, nullptr);
      continue;
    }
    bundle.history.push_back(stop_check(bundle, words, config, rng));
    if (on_epoch) on_epoch(bundle.epochs_trained, stats, &bundle.history.back());
    if (bundle.history.back().stop) {
      bundle.converged = true;
      return;
    }
  }
}

Checkpoint generator_checkpoint(const GanBundle& bundle) {
  Checkpoint c;
  c.model_kind = "generator";
  c.params = bundle.generator;
  c.embed_seed = bundle.embedding->seed();
  c.rng_seed = bundle.seed;
  c.trained_epochs = bundle.epochs_trained;
  c.metadata = {{"converged", bundle.converged},
                {"latent_dim", kLatentDim},
                {"timing_gain", bundle.timing_gain},
                {"latent_stddev", bundle.latent_stddev},
                {"stop_history", history_to_json(bundle.history)}};
  return c;
}

Checkpoint discriminator_checkpoint(const GanBundle& bundle) {
  Checkpoint c = generator_checkpoint(bundle);
  c.model_kind = "discriminator";
  c.params = bundle.discriminator;
  return c;
}

GanBundle bundle_from_checkpoints(const Checkpoint& generator, const Checkpoint& discriminator,
                                  const GanConfig& config) {
  if (generator.model_kind != "generator" || discriminator.model_kind != "discriminator")
    throw CheckpointError("expected generator and discriminator checkpoints");
  if (generator.params.input_dim() != kGeneratorInput ||
      generator.params.output_dim() != kFlatFeatures)
    throw CheckpointShapeError("generator must map 600 inputs to 75 outputs");
  if (discriminator.params.input_dim() != kDiscriminatorInput ||
      discriminator.params.output_dim() != 1)
    throw CheckpointShapeError("discriminator must map 175 inputs to 1 output");
  if (generator.embed_seed != discriminator.embed_seed)
    throw CheckpointError("generator and discriminator use different embedding seeds");
  GanBundle bundle;
  bundle.generator = generator.params;
  bundle.discriminator = discriminator.params;
  bundle.generator_state = make_adam_state(bundle.generator, config.generator_adam);
  bundle.discriminator_state = make_adam_state(bundle.discriminator, config.discriminator_adam);
  bundle.embedding = CharEmbedding::shared(generator.embed_seed);
  bundle.seed = generator.rng_seed;
  bundle.epochs_trained = static_cast<int>(generator.trained_epochs);
  bundle.converged = generator.metadata.value("converged", false);
  bundle.timing_gain = generator.metadata.value("timing_gain", 1.0);
  bundle.latent_stddev = generator.metadata.value("latent_stddev", 1.0);
  if (generator.metadata.contains("stop_history"))
    bundle.history = history_from_json(generator.metadata.at("stop_history"));
  return bundle;
}

}  // namespace keyspoof
