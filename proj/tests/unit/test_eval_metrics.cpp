#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "keyspoof/errors.hpp"
#include "keyspoof/eval_metrics.hpp"
#include "support/oracles.hpp"

using namespace keyspoof;

namespace {

std::vector<CharSequenceSample> tagged_set(const std::string& user, int n, double base) {
  std::vector<CharSequenceSample> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].user_id = user;
    out[i].matrix(0, 0) = base + i * 1e-3;
  }
  return out;
}

// Decides by user id: the verifier every test hopes for.
PairLabel oracle_decision(const CharSequenceSample& a, const CharSequenceSample& b) {
  const auto owner = [](const CharSequenceSample& s) {
    return s.user_id == "attacker" ? std::string("u0") : s.user_id;
  };
  return owner(a) == owner(b) ? PairLabel::same_user : PairLabel::different_user;
}

ConditionPairs sample_condition(Rng& rng) {
  const auto real = tagged_set("u0", 20, 0.0);
  const auto fa = tagged_set("attacker", 20, 0.1);
  const auto fb = tagged_set("attacker", 20, 0.2);
  std::vector<UserSequences> others;
  for (int u = 1; u <= 4; ++u) {
    const auto id = "u" + std::to_string(u);
    others.push_back({id, tagged_set(id, 10, 0.3 + u)});
  }
  const auto ro = draw_other_user_sequences(others, "u0", 20, rng);
  ConditionPairs c{"ordered", {}};
  for (int t = 1; t <= 3; ++t)
    c.tests[t - 1] = build_test_pairs(static_cast<TestId>(t), real, fa, fb, ro);
  return c;
}

}  // namespace

TEST(Metrics, PerfectClassifier) {
  const auto m = compute_metrics({10, 10, 0, 0});
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  EXPECT_EQ(m.mcc, 1.0);
  EXPECT_FALSE(m.mcc_undefined);
}

TEST(Metrics, AlwaysWrongClassifier) {
  // tp = tn = 0, fp = fn = 10.
  const auto m = compute_metrics({0, 0, 10, 10});
  EXPECT_EQ(m.accuracy, 0.0);
  EXPECT_EQ(m.mcc, -1.0);
  EXPECT_FALSE(m.mcc_undefined);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_FALSE(m.recall_undefined);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_FALSE(m.precision_undefined);
  EXPECT_EQ(m.f1, 0.0);
}

TEST(Metrics, UndefinedDenominatorsAreFlagged) {
  // All pairs are positives accepted: MCC has a zero row/column product.
  const auto m = compute_metrics({360, 0, 0, 40});
  EXPECT_TRUE(m.mcc_undefined);
  EXPECT_EQ(m.mcc, 0.0);
  EXPECT_EQ(m.accuracy, 0.9);
  const auto neg = compute_metrics({0, 5, 0, 0});
  EXPECT_TRUE(neg.recall_undefined);
  EXPECT_TRUE(neg.precision_undefined);
  EXPECT_TRUE(neg.f1_undefined);
  EXPECT_THROW(compute_metrics({0, 0, 0, 0}), ValidationError);
}

TEST(Metrics, MatchBruteForceOracle) {
  const auto r = oracle::check_random_metrics(1000, 1000, 99);
  EXPECT_EQ(r.checked, 1000);
  EXPECT_EQ(r.failures, 0);
  EXPECT_LE(r.worst_mcc_ulps, 2);
  // Large counts exercise the exact rational path.
  EXPECT_EQ(oracle::check_random_metrics(300, 4'000'000'000ULL, 5).failures, 0);
}

TEST(Metrics, MccSymmetricUnderClassSwap) {
  Rng rng(3);
  std::uniform_int_distribution<std::uint64_t> d(1, 50);
  for (int i = 0; i < 200; ++i) {
    const ConfusionMatrix cm{d(rng), d(rng), d(rng), d(rng)};
    const ConfusionMatrix swapped{cm.tn, cm.tp, cm.fn, cm.fp};
    EXPECT_NEAR(compute_metrics(cm).mcc, compute_metrics(swapped).mcc, 1e-12);
    const auto m = compute_metrics(cm);
    EXPECT_GE(m.mcc, -1.0);
    EXPECT_LE(m.mcc, 1.0);
  }
}

TEST(TestPairs, CrossProductOfFourHundred) {
  Rng rng(1);
  const auto c = sample_condition(rng);
  for (int t = 0; t < 3; ++t) {
    ASSERT_EQ(c.tests[t].size(), 400u);
    std::set<std::pair<double, double>> keys;
    for (const auto& p : c.tests[t]) keys.insert({p.a.matrix(0, 0), p.b.matrix(0, 0)});
    EXPECT_EQ(keys.size(), 400u) << "test " << t + 1;
  }
  EXPECT_EQ(c.tests[0][0].label, PairLabel::same_user);
  EXPECT_EQ(c.tests[1][0].label, PairLabel::same_user);
  EXPECT_EQ(c.tests[2][0].label, PairLabel::different_user);
}

TEST(TestPairs, WrongSetSizeThrows) {
  const auto twenty = tagged_set("u0", 20, 0.0);
  const auto nineteen = tagged_set("attacker", 19, 0.0);
  EXPECT_THROW(build_test_pairs(TestId::real_vs_fake, twenty, nineteen, twenty, twenty),
               ValidationError);
  EXPECT_THROW(build_test_pairs(TestId::fake_vs_fake, twenty, twenty, nineteen, twenty),
               ValidationError);
  // Test 1 does not look at the other-user set.
  EXPECT_NO_THROW(build_test_pairs(TestId::real_vs_fake, twenty, twenty, twenty, nineteen));
}

TEST(OtherUsers, DistinctAndSpreadAcrossUsers) {
  std::vector<UserSequences> users;
  for (int u = 0; u < 25; ++u) {
    const auto id = "u" + std::to_string(u);
    users.push_back({id, tagged_set(id, 6, u)});
  }
  Rng rng(4);
  std::map<std::string, int> per_user;
  for (int rep = 0; rep < 200; ++rep) {
    const auto s = draw_other_user_sequences(users, "u0", 20, rng);
    std::set<double> distinct;
    for (const auto& x : s) {
      EXPECT_NE(x.user_id, "u0");
      distinct.insert(x.matrix(0, 0));
      ++per_user[x.user_id];
    }
    EXPECT_EQ(distinct.size(), 20u);
  }
  EXPECT_EQ(per_user.size(), 24u);
  // 4000 draws over 24 users: about 167 each.
  for (const auto& [u, n] : per_user) EXPECT_NEAR(n, 4000.0 / 24, 60) << u;
  EXPECT_THROW(draw_other_user_sequences(std::span(users).first(2), "u0", 20, rng), ValidationError);
}

TEST(RunTests, OracleVerifierIsPerfect) {
  Rng rng(2);
  const std::vector<ConditionPairs> conds{sample_condition(rng)};
  const auto r = run_tests(oracle_decision, conds);
  for (const auto& t : r.conditions[0].tests) {
    EXPECT_EQ(t.accuracy, 1.0);
    EXPECT_EQ(t.pairs, 400u);
  }
  EXPECT_EQ(r.conditions[0].tests[0].accepted, 400u);
  EXPECT_EQ(r.conditions[0].tests[2].accepted, 0u);
}

TEST(RunTests, CoinFlipVerifierNearChance) {
  Rng rng(2);
  const std::vector<ConditionPairs> conds{sample_condition(rng)};
  Rng coin(9);
  const DecisionFn flip = [&](const CharSequenceSample&, const CharSequenceSample&) {
    return std::bernoulli_distribution(0.5)(coin) ? PairLabel::same_user : PairLabel::different_user;
  };
  const auto r = run_tests(flip, conds);
  // Four standard deviations of a 400-trial binomial.
  for (const auto& t : r.conditions[0].tests) EXPECT_NEAR(t.accuracy, 0.5, 0.1);
}

TEST(Report, JsonAndTableLayout) {
  Rng rng(2);
  auto c1 = sample_condition(rng);
  auto c2 = c1;
  c2.condition = "random";
  const std::vector<ConditionPairs> conds{c1, c2};
  const auto r = run_tests(oracle_decision, conds);
  const auto j = report_to_json(r);
  ASSERT_EQ(j.at("conditions").size(), 2u);
  EXPECT_EQ(j["conditions"][1]["condition"], "random");
  EXPECT_EQ(j["conditions"][0]["tests"].size(), 3u);
  EXPECT_EQ(j["conditions"][0]["tests"][0]["pairs"], 400);
  const auto table = render_table(r);
  EXPECT_NE(table.find("Test 3"), std::string::npos);
  EXPECT_NE(table.find("random"), std::string::npos);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
}
