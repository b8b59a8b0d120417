// keyspoof: keystroke presentation-attack pipeline.
//
//   keyspoof synth-data --users 25 --sentences 15 --seed 7 --out corpus.tsv
//   keyspoof train-verifier --corpus corpus.tsv --out verifier.json
//   keyspoof train-cgan --corpus corpus.tsv --user u0 --out gan/
//   keyspoof attack --gan gan/ --corpus corpus.tsv --condition ordered --out a.tsv
//   keyspoof evaluate --verifier verifier.json --corpus corpus.tsv \
//       --fake ordered=a.tsv --fake random=b.tsv --out reports/
//   keyspoof run-all --config run.json
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 training failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "keyspoof/config.hpp"
#include "keyspoof/errors.hpp"
#include "keyspoof/pipeline.hpp"

namespace fs = std::filesystem;
using namespace keyspoof;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args, const std::string& seed_help) {
  cmd->add_option("--config", args.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, seed_help);
}

RunConfig base_config(const CommonArgs& args) {
  return args.config_path.empty() ? RunConfig{} : load_config(args.config_path);
}

std::vector<std::pair<std::string, fs::path>> parse_fakes(const std::vector<std::string>& specs) {
  std::vector<std::pair<std::string, fs::path>> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
      throw ConfigError("--fake expects CONDITION=PATH, got '" + s + "'");
    const auto condition = s.substr(0, eq);
    condition_from_string(condition);
    out.emplace_back(condition, s.substr(eq + 1));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keystroke presentation-attack pipeline: conditional GAN vs. Siamese verifier"};
  app.require_subcommand(1);

  // synth-data
  CommonArgs synth_common;
  std::optional<int> synth_users;
  std::optional<int> synth_sentences;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth-data", "Generate a synthetic multi-user keystroke corpus");
  add_common(synth, synth_common, "Corpus seed");
  synth->add_option("--users", synth_users, "Number of users (>= 2)");
  synth->add_option("--sentences", synth_sentences, "Sentences per user");
  synth->add_option("--out", synth_out, "Output TSV path");

  // ingest
  std::string ingest_in;
  std::string ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Validate a keystroke log and print its summary");
  ingest->add_option("--in", ingest_in, "Input TSV log")->required();
  ingest->add_option("--out", ingest_out, "Write the sorted, validated log here");

  // train-verifier
  CommonArgs ver_common;
  std::string ver_corpus;
  std::string ver_out;
  std::optional<int> ver_epochs;
  auto* ver = app.add_subcommand("train-verifier", "Train and calibrate the Siamese verifier");
  add_common(ver, ver_common, "Verifier seed");
  ver->add_option("--corpus", ver_corpus, "Corpus TSV");
  ver->add_option("--out", ver_out, "Verifier checkpoint path");
  ver->add_option("--epochs", ver_epochs, "Training epochs");

  // train-cgan
  CommonArgs gan_common;
  std::string gan_corpus;
  std::string gan_user;
  std::string gan_out;
  std::optional<int> gan_max_epochs;
  auto* gan = app.add_subcommand("train-cgan", "Train the conditional GAN on one user's words");
  add_common(gan, gan_common, "GAN seed");
  gan->add_option("--corpus", gan_corpus, "Corpus TSV");
  gan->add_option("--user", gan_user, "Target user id");
  gan->add_option("--out", gan_out, "Output directory for checkpoints and history");
  gan->add_option("--max-epochs", gan_max_epochs, "Epoch limit");

  // attack
  CommonArgs atk_common;
  std::string atk_gan;
  std::string atk_corpus;
  std::string atk_user;
  std::string atk_condition;
  std::string atk_out;
  std::optional<int> atk_n;
  auto* atk = app.add_subcommand("attack", "Generate synthetic 15-key sequences for one condition");
  add_common(atk, atk_common, "Attack seed");
  atk->add_option("--gan", atk_gan, "Directory holding generator.json and discriminator.json");
  atk->add_option("--corpus", atk_corpus, "Corpus TSV (word plan and space timing)");
  atk->add_option("--user", atk_user, "Target user id");
  atk->add_option("--condition", atk_condition, "Word order condition")
      ->required()
      ->check(CLI::IsMember({"ordered", "random"}));
  atk->add_option("--out", atk_out, "Output attack TSV");
  atk->add_option("--n", atk_n, "Sequences per set");

  // evaluate
  CommonArgs eval_common;
  std::string eval_verifier;
  std::string eval_corpus;
  std::string eval_user;
  std::vector<std::string> eval_fakes;
  std::string eval_out;
  auto* eval = app.add_subcommand("evaluate", "Run the three verification tests per condition");
  add_common(eval, eval_common, "Evaluation seed (other-user sampling)");
  eval->add_option("--verifier", eval_verifier, "Verifier checkpoint");
  eval->add_option("--corpus", eval_corpus, "Corpus TSV with the real sequences");
  eval->add_option("--user", eval_user, "Target user id");
  eval->add_option("--fake", eval_fakes, "CONDITION=PATH attack log (repeatable)");
  eval->add_option("--out", eval_out, "Report directory");

  // run-all
  CommonArgs all_common;
  std::string all_work_dir;
  auto* all = app.add_subcommand("run-all", "synth-data, train-verifier, train-cgan, attack, evaluate");
  add_common(all, all_common, "Global seed");
  all->add_option("--work-dir", all_work_dir, "Put corpus, checkpoints and reports under this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      auto cfg = base_config(synth_common);
      if (synth_users) cfg.data.users = *synth_users;
      if (synth_sentences) cfg.data.sentences = *synth_sentences;
      if (synth_common.seed) cfg.seeds.data = *synth_common.seed;
      validate(cfg);
      synth_data_command(cfg.data.users, cfg.data.sentences, cfg.data_seed(),
                         synth_out.empty() ? fs::path(cfg.paths.corpus) : fs::path(synth_out),
                         std::cout);
    } else if (ingest->parsed()) {
      const fs::path out = ingest_out;
      ingest_command(ingest_in, ingest_out.empty() ? nullptr : &out, std::cout);
    } else if (ver->parsed()) {
      auto cfg = base_config(ver_common);
      if (ver_epochs) cfg.verifier.epochs = *ver_epochs;
      if (ver_common.seed) cfg.seeds.verifier = *ver_common.seed;
      validate(cfg);
      train_verifier_command(
          cfg, ver_corpus.empty() ? fs::path(cfg.paths.corpus) : fs::path(ver_corpus),
          ver_out.empty() ? fs::path(cfg.paths.checkpoints) / "verifier.json" : fs::path(ver_out),
          std::cout);
    } else if (gan->parsed()) {
      auto cfg = base_config(gan_common);
      if (gan_max_epochs) cfg.gan.max_epochs = *gan_max_epochs;
      if (gan_common.seed) cfg.seeds.gan = *gan_common.seed;
      validate(cfg);
      train_cgan_command(cfg, gan_corpus.empty() ? fs::path(cfg.paths.corpus) : fs::path(gan_corpus),
                         gan_user.empty() ? cfg.data.target_user : gan_user,
                         gan_out.empty() ? fs::path(cfg.paths.checkpoints) / "gan" : fs::path(gan_out),
                         std::cout);
    } else if (atk->parsed()) {
      auto cfg = base_config(atk_common);
      if (atk_n) cfg.attack.n_sequences = *atk_n;
      if (atk_common.seed) cfg.seeds.attack = *atk_common.seed;
      validate(cfg);
      const auto condition = condition_from_string(atk_condition);
      attack_command(cfg, atk_gan.empty() ? fs::path(cfg.paths.checkpoints) / "gan" : fs::path(atk_gan),
                     atk_corpus.empty() ? fs::path(cfg.paths.corpus) : fs::path(atk_corpus),
                     atk_user.empty() ? cfg.data.target_user : atk_user, condition,
                     atk_out.empty() ? fs::path(cfg.paths.reports) / ("attack_" + atk_condition + ".tsv")
                                     : fs::path(atk_out),
                     std::cout);
    } else if (eval->parsed()) {
      auto cfg = base_config(eval_common);
      if (eval_common.seed) cfg.seeds.eval = *eval_common.seed;
      validate(cfg);
      auto fakes = parse_fakes(eval_fakes);
      if (fakes.empty()) {
        for (const auto& name : cfg.attack.conditions)
          fakes.emplace_back(name, fs::path(cfg.paths.reports) / ("attack_" + name + ".tsv"));
      }
      evaluate_command(
          cfg, eval_verifier.empty() ? fs::path(cfg.paths.checkpoints) / "verifier.json"
                                     : fs::path(eval_verifier),
          eval_corpus.empty() ? fs::path(cfg.paths.corpus) : fs::path(eval_corpus),
          eval_user.empty() ? cfg.data.target_user : eval_user, fakes,
          eval_out.empty() ? fs::path(cfg.paths.reports) : fs::path(eval_out), std::cout);
    } else if (all->parsed()) {
      auto cfg = base_config(all_common);
      if (all_common.seed) cfg.seeds.global = *all_common.seed;
      if (!all_work_dir.empty()) {
        const fs::path dir = all_work_dir;
        cfg.paths.corpus = (dir / "corpus.tsv").string();
        cfg.paths.checkpoints = (dir / "checkpoints").string();
        cfg.paths.reports = (dir / "reports").string();
      }
      validate(cfg);
      const auto result = run_all(cfg, std::cout);
      if (!result.gan_converged) std::cout << "run-all: WARNING: cGAN did not converge\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const TrainingError& e) {
    std::cerr << "training failure: " << e.what() << '\n';
    return kExitTraining;
  } catch (const NumericError& e) {
    std::cerr << "training failure: " << e.what() << '\n';
    return kExitTraining;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
