#include "keyspoof/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "keyspoof/errors.hpp"
#include "keyspoof/verifier.hpp"

namespace keyspoof {

namespace {

constexpr std::uint64_t kPlanStream = 0x504C414E;   // "PLAN"
constexpr std::uint64_t kSpaceStream = 0x53504143;  // "SPAC"
constexpr std::uint64_t kWordStream = 0x574F5244;   // "WORD"
constexpr int kMaxRounds = 1000;

Gaussian fit(const std::vector<double>& xs, Gaussian fallback) {
  if (xs.size() < 2) return fallback;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (const double x : xs) ss += (x - mean) * (x - mean);
  return Gaussian{mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

double draw_seconds(const Gaussian& g, Rng& rng) {
  std::normal_distribution<double> d(g.mean, std::max(g.stddev, 0.0));
  return std::max(kMinPressStepSeconds, g.stddev > 0.0 ? d(rng) : g.mean);
}

}  // namespace

std::string_view to_string(AttackCondition c) noexcept {
  return c == AttackCondition::ordered ? "ordered" : "random";
}

AttackCondition condition_from_string(std::string_view name) {
  if (name == "ordered") return AttackCondition::ordered;
  if (name == "random") return AttackCondition::random;
  throw ConfigError("invalid condition '" + std::string(name) +
                    "' (valid values: ordered, random)");
}

SpaceModel fit_space_model(const UserLog& user) {
  std::vector<double> pre;
  std::vector<double> hold;
  std::vector<double> post;
  for (const auto& sentence : user.sentences) {
    const auto& ev = sentence.events;
    for (std::size_t i = 1; i + 1 < ev.size(); ++i) {
      if (ev[i].keycode != kSpaceKeycode) continue;
      pre.push_back((ev[i].press_ms - ev[i - 1].release_ms) / 1000.0);
      hold.push_back((ev[i].release_ms - ev[i].press_ms) / 1000.0);
      post.push_back((ev[i + 1].press_ms - ev[i].release_ms) / 1000.0);
    }
  }
  SpaceModel model;
  if (hold.size() < 2) return model;
  model.pre_gap = fit(pre, model.pre_gap);
  model.hold = fit(hold, model.hold);
  model.post_gap = fit(post, model.post_gap);
  model.fitted = true;
  return model;
}

std::vector<PlannedWord> plan_words(std::span<const std::string> corpus_words,
                                    AttackCondition condition, Rng& rng) {
  if (corpus_words.empty()) throw ValidationError("plan_words: empty word list");
  std::vector<PlannedWord> plan;
  plan.reserve(corpus_words.size());
  for (std::size_t i = 0; i < corpus_words.size(); ++i)
    plan.push_back(PlannedWord{i, corpus_words[i]});
  if (condition == AttackCondition::random) std::shuffle(plan.begin(), plan.end(), rng);
  return plan;
}

StitchedStream stitch(std::span<const WordSample> words, const SpaceModel& space, Rng& rng,
                      double start_ms) {
  if (words.empty()) throw ValidationError("stitch: empty word list");
  StitchedStream out;
  double clock = start_ms / 1000.0;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto& word = words[w];
    if (word.valid_len < 1 || word.valid_len > kSequenceRows)
      throw ValidationError("stitch: word " + std::to_string(w) + " has invalid valid_len");
    const auto rows = denormalize(word);
    double release = clock;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double press = clock;
      release = press + std::max(rows[r].hl, 0.0);
      out.events.push_back(KeyEvent{rows[r].keycode, press * 1000.0, release * 1000.0});
      if (r + 1 < rows.size())
        clock = std::max(release + rows[r].il, press + kMinPressStepSeconds);
    }
    if (w + 1 < words.size()) {
      const double space_press = release + draw_seconds(space.pre_gap, rng);
      const double space_release = space_press + draw_seconds(space.hold, rng);
      out.events.push_back(KeyEvent{kSpaceKeycode, space_press * 1000.0, space_release * 1000.0});
      clock = space_release + draw_seconds(space.post_gap, rng);
    }
  }
  out.rows = extract_features(out.events);
  out.normalized = normalize(out.rows);
  return out;
}

std::vector<std::string> corpus_word_texts(const UserLog& user) {
  std::vector<std::string> texts;
  for (const auto& sentence : user.sentences)
    for (auto& w : words_from_sentence(sentence.events)) texts.push_back(std::move(w.text));
  return texts;
}

AttackResult build_attack_sequences(const GanBundle& gan, std::span<const std::string> corpus_words,
                                    const AttackConfig& config) {
  if (config.n_sequences < 1) throw ValidationError("n_sequences must be >= 1");
  if (corpus_words.empty()) throw ValidationError("attack: empty word plan");

  const std::size_t needed_events = static_cast<std::size_t>(config.n_sequences) * kSequenceRows + 1;
  AttackResult result;
  std::size_t stream_keys = 0;
  for (int round = 0; stream_keys < needed_events; ++round) {
    if (round > 0 && !config.allow_regeneration) {
      throw ValidationError("word plan yields " + std::to_string(stream_keys / kSequenceRows) +
                            " windows, fewer than the requested " +
                            std::to_string(config.n_sequences));
    }
    if (round >= kMaxRounds) throw ValidationError("attack: word plan too short");
    Rng plan_rng = make_rng(config.seed, kPlanStream + static_cast<std::uint64_t>(round));
    auto plan = plan_words(corpus_words, config.condition, plan_rng);
    const auto round_seed = derive_seed(config.seed, kWordStream + static_cast<std::uint64_t>(round));
    for (auto& planned : plan) {
      Rng word_rng = make_rng(round_seed, planned.source);
      result.words.push_back(generate_word(gan, planned.text, word_rng));
      stream_keys += result.words.back().valid_len + (stream_keys > 0 ? 1 : 0);
      result.plan.push_back(std::move(planned));
    }
  }

  Rng space_rng = make_rng(config.seed, kSpaceStream);
  auto stream = stitch(result.words, config.space, space_rng);
  if (stream.events.size() > needed_events) stream.events.resize(needed_events);
  result.events = std::move(stream.events);
  result.sequences = sequences_from_events(result.events, "attacker", SampleSource::synthetic);
  result.sequences.resize(static_cast<std::size_t>(config.n_sequences));
  return result;
}

Corpus attack_corpus(const std::vector<std::pair<std::string, std::vector<KeyEvent>>>& sets) {
  Corpus corpus;
  UserLog user{"attacker", {}};
  for (const auto& [id, events] : sets) user.sentences.push_back(Sentence{id, events});
  corpus.users.push_back(std::move(user));
  return corpus;
}

}  // namespace keyspoof
