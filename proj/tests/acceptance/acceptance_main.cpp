// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Criteria 4-7 share two full default runs at seed 7.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "keyspoof/cgan.hpp"
#include "keyspoof/pipeline.hpp"
#include "support/oracles.hpp"

using namespace keyspoof;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kGradientTolerance = 1e-4;
constexpr int kGradientNetworks = 20;
constexpr double kGradientBudget = 30.0;
constexpr int kMetricMatrices = 1000;
constexpr double kMetricBudget = 5.0;
constexpr int kAlgebraStreams = 1000;
constexpr double kAlgebraTolerance = 1e-9;
constexpr double kRoundTripTolerance = 1e-6;
constexpr double kAlgebraBudget = 5.0;
constexpr double kVerifierAccuracy = 0.90;
constexpr double kVerifierBudget = 300.0;
constexpr int kGanEpochLimit = 5000;
constexpr double kGanBudget = 300.0;
constexpr double kAttackAcceptance = 0.80;
constexpr double kDifferentUserRate = 0.80;
constexpr double kTestGap = 0.10;
constexpr double kRunBudget = 900.0;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
}

template <typename F>
double timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void gradient_check() {
  double worst = 0.0;
  int networks = 0;
  const double secs = timed([&] {
    int stream = 0;
    for (auto a : {Activation::relu, Activation::leaky_relu, Activation::sigmoid, Activation::tanh,
                   Activation::identity}) {
      const auto r = oracle::check_gradients(a, kGradientNetworks, 0xA11CE + stream++);
      worst = std::max(worst, r.worst_relative_error);
      networks += r.networks;
    }
  });
  report(1, "gradient correctness",
         worst < kGradientTolerance && networks == 5 * kGradientNetworks && secs < kGradientBudget,
         fmt("%d networks over 5 activations, worst relative error %.3e (< %.0e), %.2fs", networks,
             worst, kGradientTolerance, secs));
}

void metric_oracle() {
  oracle::MetricMismatch small;
  oracle::MetricMismatch large;
  const double secs = timed([&] {
    small = oracle::check_random_metrics(kMetricMatrices, 1000, 0xC0FFEE);
    large = oracle::check_random_metrics(kMetricMatrices, 1ULL << 40, 0xBEEF);
  });
  const bool pass = small.failures == 0 && large.failures == 0 && secs < kMetricBudget;
  report(2, "metric oracle", pass,
         fmt("%d matrices, %d mismatches, worst MCC %lld ulp, %.2fs", small.checked + large.checked,
             small.failures + large.failures,
             static_cast<long long>(std::max(small.worst_mcc_ulps, large.worst_mcc_ulps)), secs));
}

void feature_algebra() {
  oracle::AlgebraCheck r;
  const double secs = timed([&] { r = oracle::check_feature_algebra(kAlgebraStreams, 0xFEED); });
  const bool pass = r.worst_pl_error <= kAlgebraTolerance && r.worst_rl_error <= kAlgebraTolerance &&
                    r.worst_roundtrip_error <= kRoundTripTolerance && r.keycodes_exact &&
                    r.roundtrip_rows > 0 && secs < kAlgebraBudget;
  report(3, "feature algebra", pass,
         fmt("%d streams, pl %.2e s, rl %.2e s, round-trip %.2e s over %d in-range rows, %.2fs",
             r.streams, r.worst_pl_error, r.worst_rl_error, r.worst_roundtrip_error,
             r.roundtrip_rows, secs));
}

WordSample marked(std::string_view text, double cell) {
  return shape_generated(Eigen::VectorXd::Constant(kFlatFeatures, cell), text);
}

void stop_check_semantics() {
  const auto corpus = synth_corpus(2, 3, 1);
  const auto words = user_words(corpus, "u0");
  const GanConfig cfg;
  const auto& emb = *CharEmbedding::shared();
  const GeneratorFn gen = [](std::string_view t, Rng&) { return marked(t, 0.999); };
  Rng rng(8);

  const auto half = stop_check([](const WordSample&, const EmbeddingVector&) { return 0.5; }, gen,
                               words, cfg, emb, rng);
  const bool a = half.fake_accuracy == 1.0 && half.real_accuracy == 0.0 && !half.stop;

  const auto oracle = stop_check(
      [](const WordSample& s, const EmbeddingVector&) { return s.matrix(0, kHold) == 0.999 ? 0.0 : 1.0; },
      gen, words, cfg, emb, rng);
  const bool b = oracle.stop;

  std::vector<WordSample> ten;
  for (char c = 'a'; c <= 'j'; ++c) ten.push_back(marked(std::string(1, c), 0.3));
  GanConfig ten_cfg;
  ten_cfg.check_subset_size = 10;
  const auto split = stop_check(
      [](const WordSample& s, const EmbeddingVector&) {
        if (s.matrix(0, kHold) != 0.999) return s.text == "a" ? 0.1 : 0.9;
        return (s.text == "a" || s.text == "b") ? 0.9 : 0.1;
      },
      gen, ten, ten_cfg, emb, rng);
  const bool c = split.real_accuracy == 0.9 && split.fake_accuracy == 0.8 && !split.stop;

  report(8, "stop-check semantics", a && b && c,
         fmt("constant 0.5: real %.2f fake %.2f stop %d; oracle: stop %d; split: real %.2f fake "
             "%.2f stop %d",
             half.real_accuracy, half.fake_accuracy, half.stop, oracle.stop, split.real_accuracy,
             split.fake_accuracy, split.stop));
}

RunAllResult default_run(const fs::path& dir) {
  fs::remove_all(dir);
  RunConfig cfg;
  cfg.paths.corpus = (dir / "corpus.tsv").string();
  cfg.paths.checkpoints = (dir / "checkpoints").string();
  cfg.paths.reports = (dir / "reports").string();
  validate(cfg);
  std::ostringstream log;
  return run_all(cfg, log);
}

void pipeline_criteria() {
  const auto base = fs::temp_directory_path() / "keyspoof_acceptance";
  RunAllResult first;
  RunAllResult second;
  try {
    first = default_run(base / "run1");
  } catch (const std::exception& e) {
    for (int id : {4, 5, 6, 7}) report(id, "pipeline", false, std::string("run-all threw: ") + e.what());
    return;
  }

  const auto& v = first.verifier;
  report(4, "verifier separation",
         v.has_holdout && v.holdout_accuracy >= kVerifierAccuracy && first.verifier_seconds < kVerifierBudget,
         fmt("held-out pair accuracy %.4f (>= %.2f), held-out EER %.4f, train EER %.4f, "
             "threshold %.4f, %.1fs",
             v.holdout_accuracy, kVerifierAccuracy, v.holdout_calibration.eer, v.calibration.eer,
             v.bundle.threshold, first.verifier_seconds));

  report(5, "GAN convergence",
         first.gan_converged && first.gan_epochs <= kGanEpochLimit && first.gan_seconds < kGanBudget,
         fmt("%s after %d epochs (limit %d), %.1fs", first.gan_converged ? "converged" : "NOT converged",
             first.gan_epochs, kGanEpochLimit, first.gan_seconds));

  bool attack_ok = first.total_seconds < kRunBudget;
  std::string detail;
  for (const auto& c : first.evaluation.report.conditions) {
    const double t1 = static_cast<double>(c.tests[0].accepted) / c.tests[0].pairs;
    const double t2 = static_cast<double>(c.tests[1].accepted) / c.tests[1].pairs;
    const double t3 = c.tests[2].accuracy;
    attack_ok = attack_ok && t1 >= kAttackAcceptance && t3 >= kDifferentUserRate &&
                std::abs(t1 - t2) <= kTestGap;
    detail += fmt("%s T1 %.3f T2 %.3f T3 %.3f; ", c.condition.c_str(), t1, t2, t3);
  }
  attack_ok = attack_ok && first.evaluation.report.conditions.size() == 2;
  report(6, "end-to-end attack", attack_ok,
         detail + fmt("run-all %.1fs (< %.0fs)", first.total_seconds, kRunBudget));

  try {
    second = default_run(base / "run2");
  } catch (const std::exception& e) {
    report(7, "determinism", false, std::string("second run threw: ") + e.what());
    return;
  }
  bool same = true;
  std::string diffs;
  for (const char* f : {"report.json", "report.txt", "attack_ordered.tsv", "attack_random.tsv"}) {
    const auto a = slurp(base / "run1" / "reports" / f);
    const auto b = slurp(base / "run2" / "reports" / f);
    if (a.empty() || a != b) {
      same = false;
      diffs += std::string(" ") + f;
    }
  }
  report(7, "determinism", same,
         same ? "two run-all passes produced byte-identical reports and attack logs"
              : "differing files:" + diffs);
}

}  // namespace

int main() {
  gradient_check();
  metric_oracle();
  feature_algebra();
  pipeline_criteria();
  stop_check_semantics();
  std::printf("%s: %d failing criteria\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
