#include "keyspoof/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "keyspoof/cgan.hpp"
#include "keyspoof/char_embed.hpp"
#include "keyspoof/errors.hpp"
#include "keyspoof/losses.hpp"

namespace keyspoof {

std::vector<CharSequenceSample> sequences_from_events(std::span<const KeyEvent> events,
                                                      const std::string& user_id,
                                                      SampleSource source) {
  std::vector<CharSequenceSample> out;
  if (events.size() < static_cast<std::size_t>(kSequenceRows)) return out;
  const auto rows = normalize(extract_features(events));
  for (std::size_t start = 0; start + kSequenceRows <= rows.size(); start += kSequenceRows) {
    CharSequenceSample s;
    s.source = source;
    s.user_id = user_id;
    for (int r = 0; r < kSequenceRows; ++r)
      for (int c = 0; c < kFeatureCols; ++c) s.matrix(r, c) = rows[start + r][c];
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<UserSequences> sequences_from_corpus(const Corpus& corpus) {
  if (corpus.users.empty()) throw ValidationError("sequences_from_corpus: empty corpus");
  std::vector<UserSequences> out;
  std::size_t total = 0;
  for (const auto& user : corpus.users) {
    UserSequences us{user.id, {}};
    for (const auto& sentence : user.sentences) {
      auto windows = sequences_from_events(sentence.events, user.id, SampleSource::real);
      for (auto& w : windows) us.sequences.push_back(std::move(w));
    }
    total += us.sequences.size();
    out.push_back(std::move(us));
  }
  if (total == 0) throw ValidationError("corpus yields no 15-key sequences");
  return out;
}

CorpusSplit split_corpus(const Corpus& corpus, double holdout_fraction) {
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
    throw ConfigError("holdout_fraction must lie in [0, 1)");
  CorpusSplit split;
  for (const auto& user : corpus.users) {
    const auto n = user.sentences.size();
    auto n_hold = static_cast<std::size_t>(std::lround(holdout_fraction * static_cast<double>(n)));
    if (n_hold >= n) n_hold = n > 0 ? n - 1 : 0;
    const auto n_train = static_cast<std::ptrdiff_t>(n - n_hold);
    split.train.users.push_back(
        UserLog{user.id, {user.sentences.begin(), user.sentences.begin() + n_train}});
    split.holdout.users.push_back(
        UserLog{user.id, {user.sentences.begin() + n_train, user.sentences.end()}});
  }
  return split;
}

std::vector<SequencePair> make_pairs(std::span<const UserSequences> users, int n_pairs, Rng& rng) {
  std::vector<std::size_t> with_two;
  std::vector<std::size_t> with_one;
  for (std::size_t u = 0; u < users.size(); ++u) {
    if (users[u].sequences.size() >= 2) with_two.push_back(u);
    if (!users[u].sequences.empty()) with_one.push_back(u);
  }
  if (with_two.empty()) throw ValidationError("no user has two sequences for genuine pairs");
  if (with_one.size() < 2) throw ValidationError("need two users with sequences for impostor pairs");

  auto pick = [&rng](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };
  std::vector<SequencePair> pairs;
  pairs.reserve(static_cast<std::size_t>(std::max(n_pairs, 0)));
  for (int i = 0; i < n_pairs; ++i) {
    if (i % 2 == 0) {
      const auto& seqs = users[with_two[pick(with_two.size())]].sequences;
      const auto a = pick(seqs.size());
      auto b = pick(seqs.size() - 1);
      if (b >= a) ++b;
      pairs.push_back(SequencePair{seqs[a], seqs[b], PairLabel::same_user});
    } else {
      const auto ua = pick(with_one.size());
      auto ub = pick(with_one.size() - 1);
      if (ub >= ua) ++ub;
      const auto& sa = users[with_one[ua]].sequences;
      const auto& sb = users[with_one[ub]].sequences;
      pairs.push_back(SequencePair{sa[pick(sa.size())], sb[pick(sb.size())],
                                   PairLabel::different_user});
    }
  }
  return pairs;
}

VerifierBundle make_verifier(const VerifierConfig& config, std::uint64_t seed) {
  std::vector<int> w{kFlatFeatures};
  w.insert(w.end(), config.hidden.begin(), config.hidden.end());
  w.push_back(config.embedding_dim);
  VerifierBundle bundle;
  bundle.embedding =
      init_network(chain_specs(w, Activation::relu, Activation::identity), derive_seed(seed, 1));
  bundle.margin = config.margin;
  bundle.timing_gain = config.timing_gain;
  bundle.seed = seed;
  return bundle;
}

Eigen::VectorXd embed_sequence(const VerifierBundle& bundle, const CharSequenceSample& s) {
  const Eigen::VectorXd x = flatten(s.matrix).cwiseProduct(timing_gain_cells(bundle.timing_gain));
  return forward(bundle.embedding, x);
}

double distance(const VerifierBundle& bundle, const CharSequenceSample& a,
                const CharSequenceSample& b) {
  return (embed_sequence(bundle, a) - embed_sequence(bundle, b)).norm();
}

VerifierBundle train_verifier(std::span<const SequencePair> pairs, const VerifierConfig& config,
                              std::uint64_t seed) {
  const bool has_same = std::any_of(pairs.begin(), pairs.end(), [](const SequencePair& p) {
    return p.label == PairLabel::same_user;
  });
  const bool has_diff = std::any_of(pairs.begin(), pairs.end(), [](const SequencePair& p) {
    return p.label == PairLabel::different_user;
  });
  if (!has_same || !has_diff)
    throw ValidationError("train_verifier: pair set must contain both labels");
  if (config.batch_size < 1) throw ConfigError("verifier batch_size must be >= 1");

  VerifierBundle bundle = make_verifier(config, seed);
  AdamState state = make_adam_state(bundle.embedding, config.adam);
  Rng rng = make_rng(seed, 2);

  const auto n = static_cast<int>(pairs.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd gain = timing_gain_cells(bundle.timing_gain);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += config.batch_size) {
      const int b = std::min(config.batch_size, n - start);
      Eigen::MatrixXd xa(kFlatFeatures, b);
      Eigen::MatrixXd xb(kFlatFeatures, b);
      for (int j = 0; j < b; ++j) {
        xa.col(j) = flatten(pairs[order[start + j]].a.matrix).cwiseProduct(gain);
        xb.col(j) = flatten(pairs[order[start + j]].b.matrix).cwiseProduct(gain);
      }
      Tape ta;
      Tape tb;
      const Eigen::MatrixXd ea = forward(bundle.embedding, xa, &ta);
      const Eigen::MatrixXd eb = forward(bundle.embedding, xb, &tb);
      Eigen::MatrixXd ga(ea.rows(), b);
      for (int j = 0; j < b; ++j) {
        const Eigen::VectorXd diff = ea.col(j) - eb.col(j);
        const double d = diff.norm();
        const bool same = pairs[order[start + j]].label == PairLabel::same_user;
        const auto l = contrastive_loss(d, same, bundle.margin);
        epoch_loss += l.loss;
        // d loss / d ea = (d loss / d d) * diff / d; for genuine pairs this is diff.
        if (same)
          ga.col(j) = diff / b;
        else
          ga.col(j) = d > 0.0 ? Eigen::VectorXd(l.gradient * diff / (d * b))
                              : Eigen::VectorXd::Zero(diff.size());
      }
      auto grad = backward(bundle.embedding, ta, ga).params;
      const auto grad_b = backward(bundle.embedding, tb, -ga).params;
      for (std::size_t k = 0; k < grad.size(); ++k) {
        grad[k].weights += grad_b[k].weights;
        grad[k].biases += grad_b[k].biases;
      }
      adam_step(bundle.embedding, grad, state);
    }
    if (!std::isfinite(epoch_loss))
      throw TrainingError("verifier loss became non-finite at epoch " + std::to_string(epoch + 1));
    bundle.epoch_losses.push_back(epoch_loss / n);
    ++bundle.epochs_trained;
  }
  return bundle;
}

Calibration calibrate_threshold(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty())
    throw ValidationError("calibrate_threshold: need genuine and impostor distances");
  std::vector<double> gen(genuine.begin(), genuine.end());
  std::vector<double> imp(impostor.begin(), impostor.end());
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  std::vector<double> candidates = gen;
  candidates.insert(candidates.end(), imp.begin(), imp.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  Calibration best;
  double best_gap = 2.0;
  for (const double t : candidates) {
    const auto accepted_imp = std::upper_bound(imp.begin(), imp.end(), t) - imp.begin();
    const auto accepted_gen = std::upper_bound(gen.begin(), gen.end(), t) - gen.begin();
    const double far = static_cast<double>(accepted_imp) / static_cast<double>(imp.size());
    const double frr =
        static_cast<double>(gen.size() - accepted_gen) / static_cast<double>(gen.size());
    const double gap = std::abs(far - frr);
    if (gap < best_gap) {
      best_gap = gap;
      best = Calibration{t, far, frr, 0.5 * (far + frr)};
    }
  }
  return best;
}

Calibration calibrate_threshold(VerifierBundle& bundle, std::span<const SequencePair> pairs) {
  std::vector<double> genuine;
  std::vector<double> impostor;
  for (const auto& p : pairs) {
    const double d = distance(bundle, p.a, p.b);
    (p.label == PairLabel::same_user ? genuine : impostor).push_back(d);
  }
  const auto cal = calibrate_threshold(genuine, impostor);
  bundle.threshold = cal.threshold;
  bundle.calibrated = true;
  return cal;
}

PairLabel verify(const VerifierBundle& bundle, const CharSequenceSample& a,
                 const CharSequenceSample& b) {
  if (!bundle.calibrated) throw ValidationError("verify: verifier threshold not calibrated");
  return distance(bundle, a, b) <= bundle.threshold ? PairLabel::same_user
                                                    : PairLabel::different_user;
}

double pair_accuracy(const VerifierBundle& bundle, std::span<const SequencePair> pairs) {
  if (pairs.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& p : pairs)
    if (verify(bundle, p.a, p.b) == p.label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

Checkpoint verifier_checkpoint(const VerifierBundle& bundle) {
  Checkpoint c;
  c.model_kind = "verifier";
  c.params = bundle.embedding;
  c.embed_seed = kDefaultEmbedSeed;
  c.rng_seed = bundle.seed;
  c.trained_epochs = bundle.epochs_trained;
  c.metadata = {{"threshold", bundle.threshold},
                {"calibrated", bundle.calibrated},
                {"margin", bundle.margin},
                {"timing_gain", bundle.timing_gain},
                {"epoch_losses", bundle.epoch_losses}};
  return c;
}

VerifierBundle verifier_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.model_kind != "verifier")
    throw CheckpointError("expected a verifier checkpoint, got '" + ckpt.model_kind + "'");
  if (ckpt.params.input_dim() != kFlatFeatures)
    throw CheckpointShapeError("verifier embedding network must take 75 inputs");
  VerifierBundle bundle;
  bundle.embedding = ckpt.params;
  bundle.seed = ckpt.rng_seed;
  bundle.epochs_trained = static_cast<int>(ckpt.trained_epochs);
  try {
    bundle.threshold = ckpt.metadata.at("threshold").get<double>();
    bundle.calibrated = ckpt.metadata.at("calibrated").get<bool>();
    bundle.margin = ckpt.metadata.at("margin").get<double>();
    bundle.timing_gain = ckpt.metadata.value("timing_gain", 1.0);
    bundle.epoch_losses = ckpt.metadata.value("epoch_losses", std::vector<double>{});
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpointError(std::string("verifier metadata: ") + e.what());
  }
  if (bundle.threshold < 0.0) throw CorruptCheckpointError("verifier threshold is negative");
  return bundle;
}

}  // namespace keyspoof
