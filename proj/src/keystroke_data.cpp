#include "keyspoof/keystroke_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "keyspoof/errors.hpp"
#include "keyspoof/random.hpp"

namespace keyspoof {

namespace {

constexpr std::array<std::string_view, 5> kHeader = {
    "PARTICIPANT_ID", "SENTENCE_ID", "KEYCODE", "PRESS_TIME", "RELEASE_TIME"};

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_number(std::string_view field, std::size_t line, const char* name) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError(std::string("non-numeric ") + name + " '" + std::string(field) + "'",
                     line);
  }
  return value;
}

int parse_keycode(std::string_view field, std::size_t line) {
  int value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw ParseError("non-integer KEYCODE '" + std::string(field) + "'", line);
  }
  if (value < 0 || value > kMaxKeycode) {
    throw ValidationError("line " + std::to_string(line) + ": keycode " +
                          std::to_string(value) + " outside 0-255");
  }
  return value;
}

std::string format_ms(double ms) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), ms);
  (void)ec;
  return std::string(buf.data(), ptr);
}

double clamp_latency(double seconds) {
  return std::clamp(seconds, 0.0, kMaxLatencySeconds) / kMaxLatencySeconds;
}

}  // namespace

const UserLog* Corpus::find_user(std::string_view id) const {
  const auto it = std::find_if(users.begin(), users.end(),
                               [&](const UserLog& u) { return u.id == id; });
  return it == users.end() ? nullptr : &*it;
}

std::size_t Corpus::event_count() const {
  std::size_t n = 0;
  for (const auto& user : users)
    for (const auto& sentence : user.sentences) n += sentence.events.size();
  return n;
}

void validate_events(std::span<const KeyEvent> events) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.keycode < 0 || e.keycode > kMaxKeycode) {
      throw ValidationError("event " + std::to_string(i) + ": keycode " +
                            std::to_string(e.keycode) + " outside 0-255");
    }
    if (!(e.press_ms >= 0.0) || !(e.release_ms >= e.press_ms)) {
      throw ValidationError("event " + std::to_string(i) + " (keycode " +
                            std::to_string(e.keycode) + "): release " +
                            format_ms(e.release_ms) + " ms precedes press " +
                            format_ms(e.press_ms) + " ms");
    }
    if (i > 0 && !(e.press_ms > events[i - 1].press_ms)) {
      throw ValidationError("event " + std::to_string(i) +
                            ": press times not strictly increasing");
    }
  }
}

Corpus parse_log(std::istream& in) {
  struct PendingEvent {
    KeyEvent event;
    std::size_t line;
  };
  struct PendingSentence {
    std::string id;
    std::vector<PendingEvent> events;
  };
  struct PendingUser {
    std::string id;
    std::vector<PendingSentence> sentences;
    std::map<std::string, std::size_t, std::less<>> sentence_index;
  };

  std::vector<PendingUser> users;
  std::map<std::string, std::size_t, std::less<>> user_index;

  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (!header_seen) {
      if (fields.size() != kHeader.size() ||
          !std::equal(fields.begin(), fields.end(), kHeader.begin())) {
        throw ParseError("expected header PARTICIPANT_ID\\tSENTENCE_ID\\tKEYCODE\\t"
                         "PRESS_TIME\\tRELEASE_TIME",
                         line_no);
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != kHeader.size()) {
      throw ParseError("expected 5 columns, found " + std::to_string(fields.size()), line_no);
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw ParseError("empty participant or sentence id", line_no);
    }
    KeyEvent ev;
    ev.keycode = parse_keycode(fields[2], line_no);
    ev.press_ms = parse_number(fields[3], line_no, "PRESS_TIME");
    ev.release_ms = parse_number(fields[4], line_no, "RELEASE_TIME");
    if (ev.press_ms < 0.0) {
      throw ValidationError("line " + std::to_string(line_no) + ": negative press time");
    }
    if (ev.release_ms < ev.press_ms) {
      throw ValidationError("line " + std::to_string(line_no) + ": release " +
                            format_ms(ev.release_ms) + " ms precedes press " +
                            format_ms(ev.press_ms) + " ms (participant " +
                            std::string(fields[0]) + ", sentence " + std::string(fields[1]) +
                            ", keycode " + std::to_string(ev.keycode) + ")");
    }

    auto [uit, new_user] = user_index.try_emplace(std::string(fields[0]), users.size());
    if (new_user) users.push_back(PendingUser{std::string(fields[0]), {}, {}});
    auto& user = users[uit->second];
    auto [sit, new_sentence] =
        user.sentence_index.try_emplace(std::string(fields[1]), user.sentences.size());
    if (new_sentence) user.sentences.push_back(PendingSentence{std::string(fields[1]), {}});
    user.sentences[sit->second].events.push_back(PendingEvent{ev, line_no});
  }
  if (!header_seen) throw ParseError("missing header row", line_no + 1);

  Corpus corpus;
  corpus.users.reserve(users.size());
  for (auto& pu : users) {
    UserLog user{pu.id, {}};
    for (auto& ps : pu.sentences) {
      std::stable_sort(ps.events.begin(), ps.events.end(),
                       [](const PendingEvent& a, const PendingEvent& b) {
                         return a.event.press_ms < b.event.press_ms;
                       });
      Sentence sentence{ps.id, {}};
      sentence.events.reserve(ps.events.size());
      for (std::size_t i = 0; i < ps.events.size(); ++i) {
        if (i > 0 && ps.events[i].event.press_ms == ps.events[i - 1].event.press_ms) {
          throw ValidationError("line " + std::to_string(ps.events[i].line) +
                                ": duplicate press time in participant " + pu.id +
                                ", sentence " + ps.id);
        }
        sentence.events.push_back(ps.events[i].event);
      }
      user.sentences.push_back(std::move(sentence));
    }
    corpus.users.push_back(std::move(user));
  }
  return corpus;
}

Corpus ingest_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open keystroke log " + path.string());
  return parse_log(in);
}

void write_log(std::ostream& out, const Corpus& corpus) {
  out << kHeader[0];
  for (std::size_t i = 1; i < kHeader.size(); ++i) out << '\t' << kHeader[i];
  out << '\n';
  for (const auto& user : corpus.users) {
    for (const auto& sentence : user.sentences) {
      for (const auto& e : sentence.events) {
        out << user.id << '\t' << sentence.id << '\t' << e.keycode << '\t'
            << format_ms(e.press_ms) << '\t' << format_ms(e.release_ms) << '\n';
      }
    }
  }
}

void write_log(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write keystroke log " + path.string());
  write_log(out, corpus);
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<FeatureRow> extract_features(std::span<const KeyEvent> events) {
  if (events.empty()) throw ValidationError("extract_features: empty event list");
  std::vector<FeatureRow> rows(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& cur = events[i];
    auto& row = rows[i];
    row.keycode = cur.keycode;
    row.hl = (cur.release_ms - cur.press_ms) / 1000.0;
    if (i + 1 < events.size()) {
      const auto& next = events[i + 1];
      row.il = (next.press_ms - cur.release_ms) / 1000.0;
      row.pl = (next.press_ms - cur.press_ms) / 1000.0;
      row.rl = (next.release_ms - cur.release_ms) / 1000.0;
    }
  }
  return rows;
}

double column_min(int column) noexcept { return column == kInterKey ? -1.0 : 0.0; }

NormalizedRow normalize(const FeatureRow& row) {
  NormalizedRow out{};
  out[kHold] = clamp_latency(row.hl);
  out[kInterKey] =
      std::clamp(row.il, -kMaxLatencySeconds, kMaxLatencySeconds) / kMaxLatencySeconds;
  out[kPress] = clamp_latency(row.pl);
  out[kRelease] = clamp_latency(row.rl);
  out[kKeycode] = static_cast<double>(std::clamp(row.keycode, 0, kMaxKeycode)) / kMaxKeycode;
  return out;
}

std::vector<NormalizedRow> normalize(std::span<const FeatureRow> rows) {
  std::vector<NormalizedRow> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(normalize(r));
  return out;
}

FeatureRow denormalize(const NormalizedRow& row) {
  FeatureRow out;
  out.hl = row[kHold] * kMaxLatencySeconds;
  out.il = row[kInterKey] * kMaxLatencySeconds;
  out.pl = row[kPress] * kMaxLatencySeconds;
  out.rl = row[kRelease] * kMaxLatencySeconds;
  out.keycode = static_cast<int>(
      std::clamp(std::lround(row[kKeycode] * kMaxKeycode), 0L, static_cast<long>(kMaxKeycode)));
  return out;
}

std::vector<FeatureRow> denormalize(const WordSample& sample) {
  std::vector<FeatureRow> out;
  const int n = std::clamp(sample.valid_len, 0, kSequenceRows);
  out.reserve(n);
  for (int r = 0; r < n; ++r) {
    NormalizedRow row;
    for (int c = 0; c < kFeatureCols; ++c) row[c] = sample.matrix(r, c);
    out.push_back(denormalize(row));
  }
  return out;
}

Eigen::VectorXd timing_gain_cells(double gain) {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(kFlatFeatures, gain);
  for (int r = 0; r < kSequenceRows; ++r) out(r * kFeatureCols + kKeycode) = 1.0;
  return out;
}

std::vector<double> normalized_keycodes(std::string_view text) {
  std::vector<double> out;
  out.reserve(text.size());
  for (const char ch : text)
    out.push_back(static_cast<double>(static_cast<unsigned char>(ch)) / kMaxKeycode);
  return out;
}

WordSample make_word_sample(std::span<const KeyEvent> word_events) {
  if (word_events.empty()) throw ValidationError("make_word_sample: empty word");
  const auto n = std::min<std::size_t>(word_events.size(), kSequenceRows);
  const auto kept = word_events.first(n);
  WordSample sample;
  sample.valid_len = static_cast<int>(n);
  sample.text.reserve(n);
  const auto rows = extract_features(kept);
  for (std::size_t r = 0; r < n; ++r) {
    sample.text.push_back(static_cast<char>(kept[r].keycode));
    const auto norm = normalize(rows[r]);
    for (int c = 0; c < kFeatureCols; ++c) sample.matrix(static_cast<int>(r), c) = norm[c];
  }
  return sample;
}

std::vector<WordSample> words_from_sentence(std::span<const KeyEvent> events) {
  std::vector<WordSample> words;
  std::size_t i = 0;
  while (i < events.size()) {
    if (events[i].keycode == kSpaceKeycode) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < events.size() && events[j].keycode != kSpaceKeycode) ++j;
    words.push_back(make_word_sample(events.subspan(i, j - i)));
    i = j;
  }
  return words;
}

Corpus synth_corpus(int n_users, int sentences_per_user, std::uint64_t seed) {
  if (n_users < 2) throw ValidationError("synth_corpus: need at least 2 users");
  if (sentences_per_user < 1) throw ValidationError("synth_corpus: need at least 1 sentence");

  constexpr double kHoldMeanMs = 90.0;
  constexpr double kHoldSpreadMs = 25.0;
  constexpr double kKeyOffsetMs = 10.0;
  constexpr double kGapMeanMs = 120.0;
  constexpr double kGapSpreadMs = 40.0;
  constexpr double kJitterMs = 10.0;
  constexpr double kMinMeanMs = 20.0;

  Corpus corpus;
  corpus.users.reserve(n_users);
  for (int u = 0; u < n_users; ++u) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(u));
    std::normal_distribution<double> unit(0.0, 1.0);

    const double hold_base = std::max(kMinMeanMs, kHoldMeanMs + kHoldSpreadMs * unit(rng));
    const double gap_mean = std::max(kMinMeanMs, kGapMeanMs + kGapSpreadMs * unit(rng));
    std::array<double, kMaxKeycode + 1> hold_mean{};
    hold_mean.fill(hold_base);
    hold_mean[kSpaceKeycode] = std::max(kMinMeanMs, hold_base + kKeyOffsetMs * unit(rng));
    for (int k = 'a'; k <= 'z'; ++k)
      hold_mean[k] = std::max(kMinMeanMs, hold_base + kKeyOffsetMs * unit(rng));

    auto draw_ms = [&](double mean) {
      return std::max(1.0, std::round(mean + kJitterMs * unit(rng)));
    };

    UserLog user{"u" + std::to_string(u), {}};
    for (int s = 0; s < sentences_per_user; ++s) {
      const int length = std::uniform_int_distribution<int>(15, 40)(rng);
      std::string text;
      while (static_cast<int>(text.size()) < length) {
        if (!text.empty()) text.push_back(' ');
        const int word_len = std::uniform_int_distribution<int>(3, 10)(rng);
        for (int c = 0; c < word_len; ++c)
          text.push_back(static_cast<char>('a' + std::uniform_int_distribution<int>(0, 25)(rng)));
      }
      text.resize(length);
      if (text.back() == ' ')
        text.back() = static_cast<char>('a' + std::uniform_int_distribution<int>(0, 25)(rng));

      Sentence sentence{"s" + std::to_string(s), {}};
      sentence.events.reserve(text.size());
      double press = 1000.0 + 60000.0 * s;
      for (const char ch : text) {
        const int code = static_cast<unsigned char>(ch);
        const double release = press + draw_ms(hold_mean[code]);
        sentence.events.push_back(KeyEvent{code, press, release});
        press = release + draw_ms(gap_mean);
      }
      user.sentences.push_back(std::move(sentence));
    }
    corpus.users.push_back(std::move(user));
  }
  return corpus;
}

}  // namespace keyspoof
