#include "keyspoof/eval_metrics.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "keyspoof/errors.hpp"

namespace keyspoof {

namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

const char* label_name(PairLabel l) {
  return l == PairLabel::same_user ? "same_user" : "different_user";
}

void check_size(std::span<const CharSequenceSample> set, std::size_t expected, const char* name) {
  if (set.size() != expected) {
    throw ValidationError(std::string(name) + " holds " + std::to_string(set.size()) +
                          " sequences, expected " + std::to_string(expected));
  }
}

std::vector<SequencePair> cross(std::span<const CharSequenceSample> left,
                                std::span<const CharSequenceSample> right, PairLabel label) {
  std::vector<SequencePair> out;
  out.reserve(left.size() * right.size());
  for (const auto& a : left)
    for (const auto& b : right) out.push_back(SequencePair{a, b, label});
  return out;
}

nlohmann::json metrics_json(const Metrics& m) {
  nlohmann::json undefined = nlohmann::json::array();
  if (m.recall_undefined) undefined.push_back("recall");
  if (m.precision_undefined) undefined.push_back("precision");
  if (m.f1_undefined) undefined.push_back("f1");
  if (m.mcc_undefined) undefined.push_back("mcc");
  return {{"accuracy", m.accuracy}, {"recall", m.recall},       {"precision", m.precision},
          {"f1", m.f1},             {"mcc", m.mcc},             {"undefined", undefined}};
}

}  // namespace

Metrics compute_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ValidationError("compute_metrics: empty confusion matrix");
  Metrics m;
  bool unused = false;
  m.accuracy = ratio(cm.tp + cm.tn, cm.total(), unused);
  m.recall = ratio(cm.tp, cm.fn + cm.tp, m.recall_undefined);
  m.precision = ratio(cm.tp, cm.tp + cm.fp, m.precision_undefined);
  m.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fn + cm.fp, m.f1_undefined);

  // Exact integer numerator; the denominator is split into two products so
  // each fits in 128 bits, which keeps large counts free of cancellation.
  using i128 = __int128;
  const i128 num = static_cast<i128>(cm.tn) * cm.tp - static_cast<i128>(cm.fp) * cm.fn;
  const i128 left = static_cast<i128>(cm.tn + cm.fn) * (cm.fp + cm.tp);
  const i128 right = static_cast<i128>(cm.tn + cm.fp) * (cm.fn + cm.tp);
  m.mcc_undefined = left == 0 || right == 0;
  if (!m.mcc_undefined) {
    const long double den = std::sqrt(static_cast<long double>(left)) *
                            std::sqrt(static_cast<long double>(right));
    m.mcc = static_cast<double>(static_cast<long double>(num) / den);
  }
  return m;
}

PairLabel expected_label(TestId test) noexcept {
  return test == TestId::real_other_vs_fake ? PairLabel::different_user : PairLabel::same_user;
}

std::string test_title(TestId test) {
  switch (test) {
    case TestId::real_vs_fake: return "Test 1: Real vs. Fake";
    case TestId::fake_vs_fake: return "Test 2: Fake vs. Fake";
    case TestId::real_other_vs_fake: return "Test 3: Real other vs. Fake";
  }
  return "";
}

std::vector<SequencePair> build_test_pairs(TestId test,
                                           std::span<const CharSequenceSample> real_target,
                                           std::span<const CharSequenceSample> fake_a,
                                           std::span<const CharSequenceSample> fake_b,
                                           std::span<const CharSequenceSample> real_others,
                                           std::size_t set_size) {
  check_size(fake_a, set_size, "fake set A");
  switch (test) {
    case TestId::real_vs_fake:
      check_size(real_target, set_size, "real target set");
      return cross(real_target, fake_a, expected_label(test));
    case TestId::fake_vs_fake:
      check_size(fake_b, set_size, "fake set B");
      return cross(fake_a, fake_b, expected_label(test));
    case TestId::real_other_vs_fake:
      check_size(real_others, set_size, "real other-user set");
      return cross(fake_a, real_others, expected_label(test));
  }
  throw ValidationError("unknown test id");
}

std::vector<CharSequenceSample> draw_other_user_sequences(std::span<const UserSequences> users,
                                                          const std::string& exclude_user,
                                                          std::size_t count, Rng& rng) {
  std::vector<std::size_t> candidates;
  std::size_t available = 0;
  for (std::size_t u = 0; u < users.size(); ++u) {
    if (users[u].user_id == exclude_user || users[u].sequences.empty()) continue;
    candidates.push_back(u);
    available += users[u].sequences.size();
  }
  if (available < count) {
    throw ValidationError("only " + std::to_string(available) +
                          " sequences from other users, need " + std::to_string(count));
  }
  std::set<std::pair<std::size_t, std::size_t>> used;
  std::vector<CharSequenceSample> out;
  while (out.size() < count) {
    const auto u = candidates[std::uniform_int_distribution<std::size_t>(
        0, candidates.size() - 1)(rng)];
    const auto& seqs = users[u].sequences;
    const auto s = std::uniform_int_distribution<std::size_t>(0, seqs.size() - 1)(rng);
    if (used.insert({u, s}).second) out.push_back(seqs[s]);
  }
  return out;
}

TestResult run_test(const DecisionFn& decide, TestId test, std::span<const SequencePair> pairs) {
  TestResult r;
  r.test = test;
  r.expected = expected_label(test);
  r.pairs = pairs.size();
  for (const auto& p : pairs) {
    const auto decision = decide(p.a, p.b);
    const bool positive = decision == PairLabel::same_user;
    const bool truth = p.label == PairLabel::same_user;
    if (positive) ++r.accepted;
    if (decision == p.label) ++r.matches;
    if (positive && truth) ++r.confusion.tp;
    if (!positive && !truth) ++r.confusion.tn;
    if (positive && !truth) ++r.confusion.fp;
    if (!positive && truth) ++r.confusion.fn;
  }
  if (r.pairs > 0) {
    r.accuracy = static_cast<double>(r.matches) / static_cast<double>(r.pairs);
    r.metrics = compute_metrics(r.confusion);
  }
  return r;
}

EvalReport run_tests(const DecisionFn& decide, std::span<const ConditionPairs> conditions) {
  EvalReport report;
  for (const auto& c : conditions) {
    ConditionResult cr;
    cr.condition = c.condition;
    for (int t = 0; t < 3; ++t)
      cr.tests[t] = run_test(decide, static_cast<TestId>(t + 1), c.tests[t]);
    report.conditions.push_back(std::move(cr));
  }
  return report;
}

EvalReport run_tests(const VerifierBundle& verifier, std::span<const ConditionPairs> conditions) {
  if (!verifier.calibrated) throw ValidationError("run_tests: verifier is not calibrated");
  auto decide = [&](const CharSequenceSample& a, const CharSequenceSample& b) {
    return verify(verifier, a, b);
  };
  auto report = run_tests(decide, conditions);
  report.metadata["threshold"] = verifier.threshold;
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json conditions = nlohmann::json::array();
  for (const auto& c : report.conditions) {
    nlohmann::json tests = nlohmann::json::array();
    for (const auto& t : c.tests) {
      nlohmann::json entry = {
          {"test", static_cast<int>(t.test)},
          {"title", test_title(t.test)},
          {"expected", label_name(t.expected)},
          {"pairs", t.pairs},
          {"matches", t.matches},
          {"accepted", t.accepted},
          {"accuracy", t.accuracy},
          {"confusion",
           {{"tp", t.confusion.tp}, {"tn", t.confusion.tn}, {"fp", t.confusion.fp},
            {"fn", t.confusion.fn}}},
          {"metrics", metrics_json(t.metrics)}};
      if (t.test == TestId::real_vs_fake && t.pairs > 0) {
        const double accept = static_cast<double>(t.accepted) / static_cast<double>(t.pairs);
        entry["interpretations"] = {{"attack_acceptance_rate", accept},
                                    {"verifier_rejection_rate", 1.0 - accept}};
      }
      tests.push_back(std::move(entry));
    }
    conditions.push_back({{"condition", c.condition}, {"tests", std::move(tests)}});
  }
  return {{"report_version", 1}, {"conditions", std::move(conditions)}, {"metadata", report.metadata}};
}

std::string render_table(const EvalReport& report) {
  const std::array<std::string, 3> headers = {test_title(TestId::real_vs_fake),
                                              test_title(TestId::fake_vs_fake),
                                              test_title(TestId::real_other_vs_fake)};
  std::size_t label_width = 0;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < report.conditions.size(); ++i) {
    labels.push_back("Condition " + std::to_string(i + 1) + " (" + report.conditions[i].condition +
                     ")");
    label_width = std::max(label_width, labels.back().size());
  }
  std::ostringstream out;
  auto pad = [](const std::string& s, std::size_t w) {
    return s + std::string(w > s.size() ? w - s.size() : 0, ' ');
  };
  out << pad("", label_width);
  for (const auto& h : headers) out << " | " << h;
  out << '\n';
  out << std::string(label_width, '-');
  for (const auto& h : headers) out << "-+-" << std::string(h.size(), '-');
  out << '\n';
  for (std::size_t i = 0; i < report.conditions.size(); ++i) {
    out << pad(labels[i], label_width);
    for (int t = 0; t < 3; ++t) {
      char cell[32];
      std::snprintf(cell, sizeof cell, "%.3f", report.conditions[i].tests[t].accuracy);
      out << " | " << pad(cell, headers[t].size());
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace keyspoof
