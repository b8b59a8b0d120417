#include "keyspoof/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "keyspoof/checkpoint.hpp"
#include "keyspoof/errors.hpp"

namespace keyspoof {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSetAStream = 0xA;
constexpr std::uint64_t kSetBStream = 0xB;

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

Corpus load_corpus(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("corpus file not found: " + path.string());
  return ingest_log(path);
}

std::vector<std::pair<std::string, std::vector<KeyEvent>>> attack_log_sets(const AttackSets& s) {
  return {{"fake_a", s.set_a.events}, {"fake_b", s.set_b.events}};
}

json space_json(const SpaceModel& m) {
  return {{"fitted", m.fitted},
          {"pre_gap", {m.pre_gap.mean, m.pre_gap.stddev}},
          {"hold", {m.hold.mean, m.hold.stddev}},
          {"post_gap", {m.post_gap.mean, m.post_gap.stddev}}};
}

}  // namespace

VerifierPhaseResult run_verifier_phase(const Corpus& corpus, const RunConfig& config) {
  const auto& vc = config.verifier;
  const auto seed = config.verifier_seed();
  const auto split = split_corpus(corpus, vc.holdout_fraction);
  const auto train_users = sequences_from_corpus(split.train);

  Rng pair_rng = make_rng(seed, 10);
  const auto train_pairs = make_pairs(train_users, vc.train_pairs, pair_rng);
  VerifierPhaseResult result;
  result.bundle = train_verifier(train_pairs, vc, seed);
  result.train_pairs = train_pairs.size();

  Rng cal_rng = make_rng(seed, 11);
  const auto cal_pairs = make_pairs(train_users, vc.validation_pairs, cal_rng);
  result.calibration = calibrate_threshold(result.bundle, cal_pairs);

  std::size_t holdout_windows = 0;
  std::vector<UserSequences> holdout_users;
  for (const auto& user : split.holdout.users) {
    UserSequences us{user.id, {}};
    for (const auto& s : user.sentences)
      for (auto& w : sequences_from_events(s.events, user.id, SampleSource::real))
        us.sequences.push_back(std::move(w));
    holdout_windows += us.sequences.size();
    holdout_users.push_back(std::move(us));
  }
  if (holdout_windows > 0) {
    Rng hold_rng = make_rng(seed, 12);
    const auto hold_pairs = make_pairs(holdout_users, vc.validation_pairs, hold_rng);
    result.has_holdout = true;
    result.holdout_pairs = hold_pairs.size();
    result.holdout_accuracy = pair_accuracy(result.bundle, hold_pairs);
    std::vector<double> genuine;
    std::vector<double> impostor;
    for (const auto& p : hold_pairs)
      (p.label == PairLabel::same_user ? genuine : impostor)
          .push_back(distance(result.bundle, p.a, p.b));
    result.holdout_calibration = calibrate_threshold(genuine, impostor);
  }
  return result;
}

std::vector<WordSample> user_words(const Corpus& corpus, const std::string& user) {
  const auto* log = corpus.find_user(user);
  if (!log) throw ValidationError("unknown user id '" + user + "'");
  std::vector<WordSample> words;
  for (const auto& s : log->sentences)
    for (auto& w : words_from_sentence(s.events)) words.push_back(std::move(w));
  if (words.empty()) throw ValidationError("user '" + user + "' has no words");
  return words;
}

GanBundle run_gan_phase(const Corpus& corpus, const std::string& user, const RunConfig& config,
                        std::ostream* log) {
  const auto words = user_words(corpus, user);
  auto bundle = make_gan(config.gan, config.gan_seed(), config.seeds.embedding);
  Rng rng = make_rng(config.gan_seed(), 3);
  EpochCallback on_epoch;
  if (log) {
    on_epoch = [log](int epoch, const EpochStats& stats, const StopCheckResult* check) {
      if (!check) return;
      *log << "epoch " << epoch << ": d_loss=" << fixed(stats.d_loss, 4)
           << " g_loss=" << fixed(stats.g_loss, 4)
           << " check real_acc=" << fixed(check->real_accuracy, 3)
           << " fake_acc=" << fixed(check->fake_accuracy, 3)
           << (check->stop ? " -> stop" : "") << '\n';
    };
  }
  train(bundle, words, config.gan, rng, on_epoch);
  return bundle;
}

AttackSets run_attack_phase(const GanBundle& gan, const Corpus& corpus, const std::string& user,
                            AttackCondition condition, const RunConfig& config) {
  const auto* log = corpus.find_user(user);
  if (!log) throw ValidationError("unknown user id '" + user + "'");
  const auto texts = corpus_word_texts(*log);

  AttackSets sets;
  sets.condition = condition;
  sets.space = config.attack.space;
  if (config.attack.fit_space_model) {
    const auto fitted = fit_space_model(*log);
    if (fitted.fitted) sets.space = fitted;
  }
  sets.seed_a = derive_seed(config.attack_seed(), kSetAStream);
  sets.seed_b = derive_seed(config.attack_seed(), kSetBStream);

  AttackConfig ac;
  ac.condition = condition;
  ac.n_sequences = config.attack.n_sequences;
  ac.space = sets.space;
  ac.seed = sets.seed_a;
  sets.set_a = build_attack_sequences(gan, texts, ac);
  ac.seed = sets.seed_b;
  sets.set_b = build_attack_sequences(gan, texts, ac);
  return sets;
}

FakeSets fake_sets_from_log(const Corpus& attack_log, const std::string& condition) {
  FakeSets out;
  out.condition = condition;
  const auto* user = attack_log.find_user("attacker");
  if (!user) throw ValidationError("attack log has no 'attacker' user");
  for (const auto& s : user->sentences) {
    auto windows = sequences_from_events(s.events, "attacker", SampleSource::synthetic);
    if (s.id == "fake_a")
      out.a = std::move(windows);
    else if (s.id == "fake_b")
      out.b = std::move(windows);
  }
  return out;
}

EvalReport run_eval_phase(const VerifierBundle& verifier, const Corpus& corpus,
                          const std::string& user, const std::vector<FakeSets>& fakes,
                          const RunConfig& config) {
  const auto per_user = sequences_from_corpus(corpus);
  const auto it = std::find_if(per_user.begin(), per_user.end(),
                               [&](const UserSequences& u) { return u.user_id == user; });
  if (it == per_user.end()) throw ValidationError("unknown user id '" + user + "'");
  if (it->sequences.size() < static_cast<std::size_t>(kTestSetSize)) {
    throw ValidationError("user '" + user + "' has " + std::to_string(it->sequences.size()) +
                          " sequences, need " + std::to_string(kTestSetSize));
  }
  const std::vector<CharSequenceSample> real_target(it->sequences.begin(),
                                                    it->sequences.begin() + kTestSetSize);
  Rng rng = make_rng(config.eval_seed());
  const auto others = draw_other_user_sequences(per_user, user, kTestSetSize, rng);

  std::vector<ConditionPairs> conditions;
  for (const auto& f : fakes) {
    ConditionPairs cp;
    cp.condition = f.condition;
    for (int t = 0; t < 3; ++t)
      cp.tests[t] = build_test_pairs(static_cast<TestId>(t + 1), real_target, f.a, f.b, others);
    conditions.push_back(std::move(cp));
  }
  return run_tests(verifier, conditions);
}

void synth_data_command(int users, int sentences, std::uint64_t seed, const fs::path& out,
                        std::ostream& log) {
  const auto corpus = synth_corpus(users, sentences, seed);
  ensure_parent(out);
  write_log(out, corpus);
  log << "synth-data: wrote " << corpus.users.size() << " users, " << users * sentences
      << " sentences, " << corpus.event_count() << " keystrokes to " << out.string() << '\n';
}

IngestSummary ingest_command(const fs::path& in, const fs::path* out, std::ostream& log) {
  const auto corpus = load_corpus(in);
  IngestSummary s;
  s.users = corpus.users.size();
  for (const auto& u : corpus.users) {
    s.sentences += u.sentences.size();
    for (const auto& sentence : u.sentences) {
      s.events += sentence.events.size();
      s.words += words_from_sentence(sentence.events).size();
      s.sequences += sequences_from_events(sentence.events, u.id, SampleSource::real).size();
    }
  }
  if (out) {
    ensure_parent(*out);
    write_log(*out, corpus);
  }
  log << "ingest: " << s.users << " users, " << s.sentences << " sentences, " << s.events
      << " keystrokes, " << s.words << " words, " << s.sequences << " 15-key sequences\n";
  return s;
}

VerifierPhaseResult train_verifier_command(const RunConfig& config, const fs::path& corpus_path,
                                           const fs::path& out, std::ostream& log) {
  const auto corpus = load_corpus(corpus_path);
  auto result = run_verifier_phase(corpus, config);
  auto ckpt = verifier_checkpoint(result.bundle);
  ckpt.embed_seed = config.seeds.embedding;
  ckpt.metadata["config_hash"] = config_hash(config);
  ckpt.metadata["calibration_eer"] = result.calibration.eer;
  if (result.has_holdout) {
    ckpt.metadata["holdout_accuracy"] = result.holdout_accuracy;
    ckpt.metadata["holdout_eer"] = result.holdout_calibration.eer;
  }
  ensure_parent(out);
  save_checkpoint(out, ckpt);
  log << "train-verifier: tau=" << fixed(result.bundle.threshold, 4)
      << " eer=" << fixed(result.calibration.eer, 4);
  if (result.has_holdout) {
    log << " holdout_accuracy=" << fixed(result.holdout_accuracy, 4)
        << " holdout_eer=" << fixed(result.holdout_calibration.eer, 4);
  }
  log << " final_loss=" << fixed(result.bundle.epoch_losses.back(), 5) << " -> " << out.string()
      << '\n';
  return result;
}

GanBundle train_cgan_command(const RunConfig& config, const fs::path& corpus_path,
                             const std::string& user, const fs::path& out_dir, std::ostream& log) {
  const auto corpus = load_corpus(corpus_path);
  auto bundle = run_gan_phase(corpus, user, config, &log);
  fs::create_directories(out_dir);
  auto g = generator_checkpoint(bundle);
  auto d = discriminator_checkpoint(bundle);
  g.metadata["config_hash"] = d.metadata["config_hash"] = config_hash(config);
  g.metadata["user"] = d.metadata["user"] = user;
  save_checkpoint(out_dir / "generator.json", g);
  save_checkpoint(out_dir / "discriminator.json", d);

  std::string history = "epoch\treal_accuracy\tfake_accuracy\tstop\n";
  for (const auto& h : bundle.history) {
    history += std::to_string(h.epoch) + '\t' + fixed(h.real_accuracy, 6) + '\t' +
               fixed(h.fake_accuracy, 6) + '\t' + (h.stop ? "1" : "0") + '\n';
  }
  write_text(out_dir / "stop_history.tsv", history);

  log << "train-cgan: user=" << user << " epochs=" << bundle.epochs_trained
      << " checks=" << bundle.history.size()
      << (bundle.converged ? " converged" : " WARNING: not-converged") << " -> "
      << out_dir.string() << '\n';
  return bundle;
}

AttackSets attack_command(const RunConfig& config, const fs::path& gan_dir,
                          const fs::path& corpus_path, const std::string& user,
                          AttackCondition condition, const fs::path& out, std::ostream& log) {
  const auto g_path = gan_dir / "generator.json";
  const auto d_path = gan_dir / "discriminator.json";
  if (!fs::exists(g_path)) throw CheckpointError("missing generator checkpoint " + g_path.string());
  if (!fs::exists(d_path))
    throw CheckpointError("missing discriminator checkpoint " + d_path.string());
  const auto gan = bundle_from_checkpoints(load_checkpoint(g_path, "generator"),
                                           load_checkpoint(d_path, "discriminator"), config.gan);
  const auto corpus = load_corpus(corpus_path);
  auto sets = run_attack_phase(gan, corpus, user, condition, config);

  ensure_parent(out);
  write_log(out, attack_corpus(attack_log_sets(sets)));
  const json meta = {{"condition", std::string(to_string(condition))},
                     {"target_user", user},
                     {"n_sequences", config.attack.n_sequences},
                     {"seeds",
                      {{"attack", config.attack_seed()},
                       {"fake_a", sets.seed_a},
                       {"fake_b", sets.seed_b},
                       {"embedding", gan.embedding->seed()}}},
                     {"generator_id", file_fingerprint(g_path)},
                     {"config_hash", config_hash(config)},
                     {"space_model", space_json(sets.space)},
                     {"sequences", {{"fake_a", sets.set_a.sequences.size()},
                                    {"fake_b", sets.set_b.sequences.size()}}}};
  write_text(fs::path(out.string() + ".meta.json"), meta.dump(2) + "\n");
  log << "attack: condition=" << to_string(condition) << " sequences=" << sets.set_a.sequences.size()
      << "+" << sets.set_b.sequences.size() << " seed_a=" << sets.seed_a
      << " seed_b=" << sets.seed_b << " -> " << out.string() << '\n';
  return sets;
}

EvaluateOutputs evaluate_command(const RunConfig& config, const fs::path& verifier_path,
                                 const fs::path& corpus_path, const std::string& user,
                                 const std::vector<std::pair<std::string, fs::path>>& fake_logs,
                                 const fs::path& out_dir, std::ostream& log) {
  if (!fs::exists(verifier_path))
    throw CheckpointError("missing verifier checkpoint " + verifier_path.string());
  const auto verifier = verifier_from_checkpoint(load_checkpoint(verifier_path, "verifier"));
  const auto corpus = load_corpus(corpus_path);
  std::vector<FakeSets> fakes;
  json fake_ids = json::object();
  for (const auto& [condition, path] : fake_logs) {
    condition_from_string(condition);
    fakes.push_back(fake_sets_from_log(load_corpus(path), condition));
    fake_ids[condition] = file_fingerprint(path);
  }

  EvaluateOutputs out;
  out.report = run_eval_phase(verifier, corpus, user, fakes, config);
  out.report.metadata["target_user"] = user;
  out.report.metadata["config_hash"] = config_hash(config);
  out.report.metadata["seeds"] = {{"global", config.seeds.global},
                                  {"data", config.data_seed()},
                                  {"verifier", config.verifier_seed()},
                                  {"gan", config.gan_seed()},
                                  {"attack", config.attack_seed()},
                                  {"eval", config.eval_seed()},
                                  {"embedding", config.seeds.embedding}};
  out.report.metadata["checkpoints"] = {{"verifier", file_fingerprint(verifier_path)},
                                        {"corpus", file_fingerprint(corpus_path)},
                                        {"attack_logs", fake_ids}};
  out.json_text = report_to_json(out.report).dump(2) + "\n";
  out.table = render_table(out.report);
  fs::create_directories(out_dir);
  write_text(out_dir / "report.json", out.json_text);
  write_text(out_dir / "report.txt", out.table);
  log << out.table;
  return out;
}

RunAllResult run_all(const RunConfig& config, std::ostream& log) {
  const fs::path corpus_path = config.paths.corpus;
  const fs::path ckpt_dir = config.paths.checkpoints;
  const fs::path report_dir = config.paths.reports;
  const auto& user = config.data.target_user;

  using clock = std::chrono::steady_clock;
  const auto seconds_since = [](clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };
  const auto start = clock::now();

  RunAllResult result;
  synth_data_command(config.data.users, config.data.sentences, config.data_seed(), corpus_path,
                     log);
  auto t0 = clock::now();
  result.verifier =
      train_verifier_command(config, corpus_path, ckpt_dir / "verifier.json", log);
  result.verifier_seconds = seconds_since(t0);
  t0 = clock::now();
  const auto gan = train_cgan_command(config, corpus_path, user, ckpt_dir / "gan", log);
  result.gan_seconds = seconds_since(t0);
  result.gan_converged = gan.converged;
  result.gan_epochs = gan.epochs_trained;

  std::vector<std::pair<std::string, fs::path>> fake_logs;
  for (const auto& name : config.attack.conditions) {
    const auto path = report_dir / ("attack_" + name + ".tsv");
    attack_command(config, ckpt_dir / "gan", corpus_path, user, condition_from_string(name), path,
                   log);
    fake_logs.emplace_back(name, path);
  }
  result.evaluation = evaluate_command(config, ckpt_dir / "verifier.json", corpus_path, user,
                                       fake_logs, report_dir, log);
  result.total_seconds = seconds_since(start);
  return result;
}

}  // namespace keyspoof
