#pragma once

// Confusion-matrix metrics and the three verification tests run against
// real and synthetic sequences.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "keyspoof/keystroke_data.hpp"
#include "keyspoof/random.hpp"
#include "keyspoof/verifier.hpp"

namespace keyspoof {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// A metric whose denominator is zero is reported as 0 with its flag set.
struct Metrics {
  double accuracy = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
  bool recall_undefined = false;
  bool precision_undefined = false;
  bool f1_undefined = false;
  bool mcc_undefined = false;
};

/// Throws ValidationError on an all-zero matrix.
Metrics compute_metrics(const ConfusionMatrix& cm);

inline constexpr int kTestSetSize = 20;

enum class TestId : int { real_vs_fake = 1, fake_vs_fake = 2, real_other_vs_fake = 3 };

PairLabel expected_label(TestId test) noexcept;
std::string test_title(TestId test);

/// Cross-product pairs for one test. Every set must hold exactly `set_size`
/// sequences (ValidationError otherwise); only the sets the test uses are
/// checked.
std::vector<SequencePair> build_test_pairs(TestId test,
                                           std::span<const CharSequenceSample> real_target,
                                           std::span<const CharSequenceSample> fake_a,
                                           std::span<const CharSequenceSample> fake_b,
                                           std::span<const CharSequenceSample> real_others,
                                           std::size_t set_size = kTestSetSize);

/// `count` distinct real sequences from users other than `exclude_user`:
/// each draw picks a user uniformly, then an unused window of that user.
std::vector<CharSequenceSample> draw_other_user_sequences(std::span<const UserSequences> users,
                                                          const std::string& exclude_user,
                                                          std::size_t count, Rng& rng);

struct TestResult {
  TestId test = TestId::real_vs_fake;
  PairLabel expected = PairLabel::same_user;
  std::size_t pairs = 0;
  std::size_t matches = 0;
  std::size_t accepted = 0;  // pairs decided same_user
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  Metrics metrics;
};

struct ConditionPairs {
  std::string condition;
  std::array<std::vector<SequencePair>, 3> tests;  // indexed by test id - 1
};

struct ConditionResult {
  std::string condition;
  std::array<TestResult, 3> tests;
};

struct EvalReport {
  std::vector<ConditionResult> conditions;
  nlohmann::json metadata = nlohmann::json::object();
};

using DecisionFn = std::function<PairLabel(const CharSequenceSample&, const CharSequenceSample&)>;

TestResult run_test(const DecisionFn& decide, TestId test, std::span<const SequencePair> pairs);
EvalReport run_tests(const DecisionFn& decide, std::span<const ConditionPairs> conditions);
EvalReport run_tests(const VerifierBundle& verifier, std::span<const ConditionPairs> conditions);

nlohmann::json report_to_json(const EvalReport& report);

/// Aligned text table: one row per condition, one column per test.
std::string render_table(const EvalReport& report);

}  // namespace keyspoof
