#pragma once

// File-based phases behind the command-line tool: corpus synthesis, verifier
// training, cGAN training, attack generation and evaluation.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "keyspoof/attack.hpp"
#include "keyspoof/cgan.hpp"
#include "keyspoof/config.hpp"
#include "keyspoof/eval_metrics.hpp"
#include "keyspoof/keystroke_data.hpp"
#include "keyspoof/verifier.hpp"

namespace keyspoof {

struct VerifierPhaseResult {
  VerifierBundle bundle;
  Calibration calibration;          // on pairs from the training split
  bool has_holdout = false;
  double holdout_accuracy = 0.0;    // decisions at the calibrated threshold
  Calibration holdout_calibration;  // EER of the held-out pairs
  std::size_t train_pairs = 0;
  std::size_t holdout_pairs = 0;
};

VerifierPhaseResult run_verifier_phase(const Corpus& corpus, const RunConfig& config);

/// Word samples of one user; throws ValidationError for an unknown user.
std::vector<WordSample> user_words(const Corpus& corpus, const std::string& user);

GanBundle run_gan_phase(const Corpus& corpus, const std::string& user, const RunConfig& config,
                        std::ostream* log = nullptr);

struct AttackSets {
  AttackCondition condition = AttackCondition::ordered;
  SpaceModel space;
  std::uint64_t seed_a = 0;
  std::uint64_t seed_b = 0;
  AttackResult set_a;
  AttackResult set_b;
};

AttackSets run_attack_phase(const GanBundle& gan, const Corpus& corpus, const std::string& user,
                            AttackCondition condition, const RunConfig& config);

struct FakeSets {
  std::string condition;
  std::vector<CharSequenceSample> a;
  std::vector<CharSequenceSample> b;
};

/// Reads the two windows sets ("fake_a", "fake_b") back from an attack log.
FakeSets fake_sets_from_log(const Corpus& attack_log, const std::string& condition);

/// First 20 windows of the target user as the real set.
EvalReport run_eval_phase(const VerifierBundle& verifier, const Corpus& corpus,
                          const std::string& user, const std::vector<FakeSets>& fakes,
                          const RunConfig& config);

// Commands. Each writes its artifacts and prints plain log lines.

void synth_data_command(int users, int sentences, std::uint64_t seed,
                        const std::filesystem::path& out, std::ostream& log);

struct IngestSummary {
  std::size_t users = 0;
  std::size_t sentences = 0;
  std::size_t events = 0;
  std::size_t words = 0;
  std::size_t sequences = 0;
};
IngestSummary ingest_command(const std::filesystem::path& in, const std::filesystem::path* out,
                             std::ostream& log);

VerifierPhaseResult train_verifier_command(const RunConfig& config,
                                           const std::filesystem::path& corpus_path,
                                           const std::filesystem::path& out, std::ostream& log);

/// Writes generator.json, discriminator.json and stop_history.tsv into
/// `out_dir`.
GanBundle train_cgan_command(const RunConfig& config, const std::filesystem::path& corpus_path,
                             const std::string& user, const std::filesystem::path& out_dir,
                             std::ostream& log);

/// Writes the attack log plus a `.meta.json` sidecar with seeds and ids.
AttackSets attack_command(const RunConfig& config, const std::filesystem::path& gan_dir,
                          const std::filesystem::path& corpus_path, const std::string& user,
                          AttackCondition condition, const std::filesystem::path& out,
                          std::ostream& log);

struct EvaluateOutputs {
  EvalReport report;
  std::string json_text;
  std::string table;
};

/// Writes report.json and report.txt into `out_dir`.
EvaluateOutputs evaluate_command(
    const RunConfig& config, const std::filesystem::path& verifier_path,
    const std::filesystem::path& corpus_path, const std::string& user,
    const std::vector<std::pair<std::string, std::filesystem::path>>& fake_logs,
    const std::filesystem::path& out_dir, std::ostream& log);

struct RunAllResult {
  VerifierPhaseResult verifier;
  bool gan_converged = false;
  int gan_epochs = 0;
  EvaluateOutputs evaluation;
  // Wall-clock seconds per phase; not part of any report.
  double verifier_seconds = 0.0;
  double gan_seconds = 0.0;
  double total_seconds = 0.0;
};

RunAllResult run_all(const RunConfig& config, std::ostream& log);

}  // namespace keyspoof
