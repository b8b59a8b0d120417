#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "keyspoof/config.hpp"
#include "keyspoof/errors.hpp"

using namespace keyspoof;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

// Runs the CLI with stdout and stderr merged.
Run run_cli(const std::string& args) {
  const std::string cmd = std::string(KEYSPOOF_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / "keyspoof_cli_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, DefaultsAndOverlay) {
  const auto c = config_from_json(nlohmann::json::parse(
      R"({"seeds": {"global": 11}, "gan": {"max_epochs": 10, "timing_gain": 4.0}})"));
  EXPECT_EQ(c.seeds.global, 11u);
  EXPECT_EQ(c.gan.max_epochs, 10);
  EXPECT_EQ(c.gan.timing_gain, 4.0);
  EXPECT_EQ(c.data.users, 25);
  EXPECT_EQ(c.data.sentences, 15);
  EXPECT_EQ(c.attack.n_sequences, 20);
  EXPECT_NE(c.gan_seed(), c.verifier_seed());
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"gan": {"epochs": 3}})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"colour": 1})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"data": {"users": "many"}})")),
               ConfigError);
  auto c = RunConfig{};
  c.data.users = 1;
  EXPECT_THROW(validate(c), ConfigError);
  c = RunConfig{};
  c.gan.latent_stddev = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, RoundTripAndHash) {
  RunConfig c;
  c.seeds.attack = 99;
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  RunConfig moved = c;
  moved.paths.reports = "elsewhere";
  EXPECT_EQ(config_hash(moved), config_hash(c));
  RunConfig other = c;
  other.verifier.epochs += 1;
  EXPECT_NE(config_hash(other), config_hash(c));
}

TEST(Cli, SynthDataIsDeterministic) {
  const auto d = scratch("synth");
  const auto a = run_cli("synth-data --users 3 --sentences 2 --seed 7 --out " + (d / "a.tsv").string());
  const auto b = run_cli("synth-data --users 3 --sentences 2 --seed 7 --out " + (d / "b.tsv").string());
  EXPECT_EQ(a.code, 0) << a.output;
  EXPECT_EQ(b.code, 0);
  EXPECT_EQ(slurp(d / "a.tsv"), slurp(d / "b.tsv"));
  EXPECT_FALSE(slurp(d / "a.tsv").empty());
}

TEST(Cli, UsageErrorsExitOne) {
  const auto d = scratch("usage");
  EXPECT_EQ(run_cli("synth-data --users 1 --out " + (d / "x.tsv").string()).code, 1);
  const auto bad = run_cli("attack --condition shuffled");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.output.find("ordered"), std::string::npos) << bad.output;
  EXPECT_EQ(run_cli("no-such-command").code, 1);
}

TEST(Cli, MissingCorpusNamesPath) {
  const auto d = scratch("missing");
  const auto missing = (d / "absent.tsv").string();
  const auto r = run_cli("train-verifier --corpus " + missing + " --out " + (d / "v.json").string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.output.find(missing), std::string::npos) << r.output;
}

TEST(Cli, IngestSummarizesCorpus) {
  const auto d = scratch("ingest");
  ASSERT_EQ(run_cli("synth-data --users 2 --sentences 2 --seed 3 --out " + (d / "c.tsv").string()).code, 0);
  const auto r = run_cli("ingest --in " + (d / "c.tsv").string());
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("2 users"), std::string::npos) << r.output;
}
