#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "keyspoof/errors.hpp"
#include "keyspoof/keystroke_data.hpp"
#include "support/oracles.hpp"

using namespace keyspoof;

namespace {

std::vector<KeyEvent> events_from(std::initializer_list<int> codes, double step = 150.0,
                                  double hold = 80.0) {
  std::vector<KeyEvent> out;
  double t = 0.0;
  for (int c : codes) {
    out.push_back(KeyEvent{c, t, t + hold});
    t += step;
  }
  return out;
}

const char* kHeader = "PARTICIPANT_ID\tSENTENCE_ID\tKEYCODE\tPRESS_TIME\tRELEASE_TIME\n";

}  // namespace

TEST(ExtractFeatures, TwoEventExample) {
  const std::vector<KeyEvent> ev = {{72, 0, 100}, {73, 150, 230}};
  const auto rows = extract_features(ev);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(rows[0].hl, 0.100, 1e-12);
  EXPECT_NEAR(rows[0].il, 0.050, 1e-12);
  EXPECT_NEAR(rows[0].pl, 0.150, 1e-12);
  EXPECT_NEAR(rows[0].rl, 0.130, 1e-12);
  EXPECT_NEAR(rows[1].hl, 0.080, 1e-12);
  EXPECT_EQ(rows[1].il, 0.0);
  EXPECT_EQ(rows[1].pl, 0.0);
  EXPECT_EQ(rows[1].rl, 0.0);
}

TEST(ExtractFeatures, OverlappingKeysGiveNegativeInterKey) {
  const std::vector<KeyEvent> ev = {{65, 0, 200}, {66, 100, 250}};
  const auto rows = extract_features(ev);
  EXPECT_NEAR(rows[0].il, -0.100, 1e-12);
  EXPECT_NEAR(rows[0].pl, 0.100, 1e-12);
}

TEST(ExtractFeatures, EmptyInputThrows) {
  EXPECT_THROW(extract_features(std::vector<KeyEvent>{}), ValidationError);
}

TEST(ExtractFeatures, SingleEventIsTerminalRow) {
  const auto rows = extract_features(std::vector<KeyEvent>{{65, 10, 95}});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].hl, 0.085, 1e-12);
  EXPECT_EQ(rows[0].il, 0.0);
}

TEST(ValidateEvents, ReleaseBeforePressNamesEvent) {
  const std::vector<KeyEvent> ev = {{65, 0, 50}, {66, 100, 90}};
  try {
    validate_events(ev);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("event 1"), std::string::npos);
  }
}

TEST(ValidateEvents, NonIncreasingPressRejected) {
  EXPECT_THROW(validate_events(std::vector<KeyEvent>{{65, 100, 150}, {66, 100, 160}}),
               ValidationError);
  EXPECT_THROW(validate_events(std::vector<KeyEvent>{{300, 0, 10}}), ValidationError);
  EXPECT_NO_THROW(validate_events(events_from({1, 2, 3})));
}

TEST(Normalize, ListedExamples) {
  FeatureRow r;
  r.hl = 0.5;
  EXPECT_DOUBLE_EQ(normalize(r)[kHold], 0.1);
  r.hl = 7.2;
  EXPECT_DOUBLE_EQ(normalize(r)[kHold], 1.0);
  r.keycode = 255;
  EXPECT_DOUBLE_EQ(normalize(r)[kKeycode], 1.0);
  r.il = -7.0;
  EXPECT_DOUBLE_EQ(normalize(r)[kInterKey], -1.0);
  r.il = -0.5;
  EXPECT_DOUBLE_EQ(normalize(r)[kInterKey], -0.1);
  r.pl = -0.2;  // negative press latency clamps to zero
  EXPECT_DOUBLE_EQ(normalize(r)[kPress], 0.0);
}

TEST(Denormalize, InverseScale) {
  const auto row = denormalize(NormalizedRow{0.1, 0.02, 0.3, 0.04, 72.0 / 255.0});
  EXPECT_NEAR(row.hl, 0.5, 1e-12);
  EXPECT_NEAR(row.il, 0.1, 1e-12);
  EXPECT_NEAR(row.pl, 1.5, 1e-12);
  EXPECT_NEAR(row.rl, 0.2, 1e-12);
  EXPECT_EQ(row.keycode, 72);
}

TEST(Denormalize, KeycodeRoundsAndClamps) {
  EXPECT_EQ(denormalize(NormalizedRow{0, 0, 0, 0, 72.4 / 255.0}).keycode, 72);
  EXPECT_EQ(denormalize(NormalizedRow{0, 0, 0, 0, 72.6 / 255.0}).keycode, 73);
  EXPECT_EQ(denormalize(NormalizedRow{0, 0, 0, 0, 1.7}).keycode, 255);
  EXPECT_EQ(denormalize(NormalizedRow{0, 0, 0, 0, -0.3}).keycode, 0);
}

TEST(Denormalize, WordSampleStopsAtValidLen) {
  WordSample w = make_word_sample(events_from({104, 105, 106}));
  EXPECT_EQ(denormalize(w).size(), 3u);
}

TEST(FeatureAlgebra, RandomStreamsSatisfyIdentities) {
  const auto r = oracle::check_feature_algebra(300, 11);
  EXPECT_LT(r.worst_pl_error, 1e-9);
  EXPECT_LT(r.worst_rl_error, 1e-9);
  EXPECT_LT(r.worst_roundtrip_error, 1e-6);
  EXPECT_TRUE(r.keycodes_exact);
}

TEST(FeatureAlgebra, NormalizedCellsStayInRange) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    auto ev = oracle::random_stream(rng);
    // Stretch a few gaps past the clamp.
    if (i % 3 == 0) ev.back().release_ms += 9000.0;
    for (const auto& n : normalize(extract_features(ev))) {
      for (int c = 0; c < kFeatureCols; ++c) {
        EXPECT_GE(n[c], column_min(c));
        EXPECT_LE(n[c], column_max(c));
      }
    }
  }
}

TEST(Words, SplitOnSpace) {
  const auto words = words_from_sentence(events_from({72, 73, 32, 66}));
  ASSERT_EQ(words.size(), 2u);
  EXPECT_EQ(words[0].text, "HI");
  EXPECT_EQ(words[0].valid_len, 2);
  EXPECT_EQ(words[1].text, "B");
  EXPECT_EQ(words[1].valid_len, 1);
}

TEST(Words, TruncatesLongRuns) {
  std::vector<int> codes(17, 'a');
  std::vector<KeyEvent> ev;
  double t = 0;
  for (int c : codes) {
    ev.push_back({c, t, t + 60});
    t += 120;
  }
  const auto words = words_from_sentence(ev);
  ASSERT_EQ(words.size(), 1u);
  EXPECT_EQ(words[0].valid_len, 15);
  EXPECT_EQ(words[0].text.size(), 15u);
}

TEST(Words, OnlySpacesGiveNothing) {
  EXPECT_TRUE(words_from_sentence(events_from({32, 32})).empty());
}

TEST(Words, NeverContainSpaceAndPaddingIsZero) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> codes;
    for (int i = 0; i < 40; ++i) codes.push_back(pick(rng) == 0 ? 32 : 'a' + pick(rng));
    std::vector<KeyEvent> ev;
    double t = 0;
    for (int c : codes) {
      ev.push_back({c, t, t + 70});
      t += 130;
    }
    for (const auto& w : words_from_sentence(ev)) {
      EXPECT_EQ(w.text.find(' '), std::string::npos);
      for (int r = 0; r < w.valid_len; ++r)
        EXPECT_NE(std::lround(w.matrix(r, kKeycode) * 255), 32);
      for (int r = w.valid_len; r < kSequenceRows; ++r)
        EXPECT_TRUE(w.matrix.row(r).isZero());
      // Terminal row convention.
      EXPECT_EQ(w.matrix(w.valid_len - 1, kInterKey), 0.0);
      EXPECT_EQ(w.matrix(w.valid_len - 1, kPress), 0.0);
      EXPECT_EQ(w.matrix(w.valid_len - 1, kRelease), 0.0);
    }
  }
}

TEST(ParseLog, ReadsUsersSentencesAndSorts) {
  std::istringstream in(std::string(kHeader) +
                        "alice\ts1\t72\t150\t230\n"
                        "alice\ts1\t73\t0\t100\n"
                        "bob\ts9\t65\t10.5\t90.25\n"
                        "alice\ts2\t74\t5\t50\n");
  const auto c = parse_log(in);
  ASSERT_EQ(c.users.size(), 2u);
  EXPECT_EQ(c.users[0].id, "alice");
  ASSERT_EQ(c.users[0].sentences.size(), 2u);
  EXPECT_EQ(c.users[0].sentences[0].events[0].keycode, 73);
  EXPECT_EQ(c.users[1].sentences[0].events[0].press_ms, 10.5);
  EXPECT_EQ(c.event_count(), 4u);
  EXPECT_NE(c.find_user("bob"), nullptr);
  EXPECT_EQ(c.find_user("carol"), nullptr);
}

TEST(ParseLog, BadRowsReportLineNumbers) {
  {
    std::istringstream in(std::string(kHeader) + "a\ts\t65\t0\t10\na\ts\t66\t20\n");
    try {
      parse_log(in);
      FAIL();
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), 3u);
    }
  }
  {
    std::istringstream in(std::string(kHeader) + "a\ts\t65\tabc\t10\n");
    EXPECT_THROW(parse_log(in), ParseError);
  }
  {
    std::istringstream in("wrong header\n");
    EXPECT_THROW(parse_log(in), ParseError);
  }
}

TEST(ParseLog, ValidationErrors) {
  {
    std::istringstream in(std::string(kHeader) + "a\ts\t65\t100\t50\n");
    try {
      parse_log(in);
      FAIL();
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      EXPECT_NE(msg.find("line 2"), std::string::npos);
      EXPECT_NE(msg.find("participant a"), std::string::npos);
    }
  }
  {
    std::istringstream in(std::string(kHeader) + "a\ts\t256\t0\t10\n");
    EXPECT_THROW(parse_log(in), ValidationError);
  }
  {
    std::istringstream in(std::string(kHeader) + "a\ts\t65\t0\t10\na\ts\t66\t0\t20\n");
    EXPECT_THROW(parse_log(in), ValidationError);
  }
}

TEST(WriteLog, RoundTripIsByteStable) {
  const auto corpus = synth_corpus(3, 2, 9);
  std::ostringstream first;
  write_log(first, corpus);
  std::istringstream in(first.str());
  const auto back = parse_log(in);
  std::ostringstream second;
  write_log(second, back);
  EXPECT_EQ(first.str(), second.str());
  ASSERT_EQ(back.users.size(), 3u);
  EXPECT_EQ(back.users[2].sentences[1].events, corpus.users[2].sentences[1].events);
}

TEST(SynthCorpus, ShapeAndDeterminism) {
  const auto a = synth_corpus(25, 15, 7);
  const auto b = synth_corpus(25, 15, 7);
  const auto c = synth_corpus(25, 15, 8);
  ASSERT_EQ(a.users.size(), 25u);
  std::ostringstream sa, sb, sc;
  write_log(sa, a);
  write_log(sb, b);
  write_log(sc, c);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_NE(sa.str(), sc.str());
  for (const auto& u : a.users) {
    ASSERT_EQ(u.sentences.size(), 15u);
    for (const auto& s : u.sentences) {
      EXPECT_GE(s.events.size(), 15u);
      EXPECT_LE(s.events.size(), 40u);
      EXPECT_NE(s.events.front().keycode, kSpaceKeycode);
      EXPECT_NE(s.events.back().keycode, kSpaceKeycode);
      EXPECT_NO_THROW(validate_events(s.events));
    }
  }
}

TEST(SynthCorpus, UsersDifferInTiming) {
  const auto c = synth_corpus(6, 10, 1);
  std::set<long> means;
  for (const auto& u : c.users) {
    double sum = 0;
    int n = 0;
    for (const auto& s : u.sentences)
      for (const auto& e : s.events) {
        sum += e.release_ms - e.press_ms;
        ++n;
      }
    means.insert(std::lround(sum / n));
  }
  EXPECT_GE(means.size(), 5u);
}

TEST(SynthCorpus, NeedsTwoUsers) {
  EXPECT_THROW(synth_corpus(1, 15, 7), ValidationError);
}
