#include "keyspoof/config.hpp"

#include <fstream>
#include <set>

#include "keyspoof/checkpoint.hpp"
#include "keyspoof/errors.hpp"

namespace keyspoof {

using nlohmann::json;

namespace {

// Reads typed keys out of one JSON object and rejects anything left over.
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(label() + " must be a JSON object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!doc_.contains(key)) return;
    try {
      out = doc_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key " + path_ + "." + key + " has the wrong type");
    }
  }

  template <typename T>
  void read(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!doc_.contains(key) || doc_.at(key).is_null()) return;
    T value{};
    read(key, value);
    out = value;
  }

  std::optional<Section> sub(const char* key) {
    seen_.insert(key);
    if (!doc_.contains(key)) return std::nullopt;
    return Section(doc_.at(key), path_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key " + path_ + "." + key);
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : "config section " + path_; }

  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_adam(std::optional<Section> s, AdamConfig& adam) {
  if (!s) return;
  s->read("lr", adam.lr);
  s->read("beta1", adam.beta1);
  s->read("beta2", adam.beta2);
  s->read("epsilon", adam.epsilon);
  s->finish();
}

json adam_json(const AdamConfig& a) {
  return {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"epsilon", a.epsilon}};
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid config: " + what);
}

void validate_adam(const AdamConfig& a, const std::string& name) {
  require(a.lr > 0.0, name + ".lr must be > 0");
  require(a.beta1 >= 0.0 && a.beta1 < 1.0, name + ".beta1 must lie in [0, 1)");
  require(a.beta2 >= 0.0 && a.beta2 < 1.0, name + ".beta2 must lie in [0, 1)");
  require(a.epsilon > 0.0, name + ".epsilon must be > 0");
}

}  // namespace

std::uint64_t RunConfig::data_seed() const { return seeds.data.value_or(seeds.global); }
std::uint64_t RunConfig::verifier_seed() const {
  return seeds.verifier.value_or(derive_seed(seeds.global, 1));
}
std::uint64_t RunConfig::gan_seed() const { return seeds.gan.value_or(derive_seed(seeds.global, 2)); }
std::uint64_t RunConfig::attack_seed() const {
  return seeds.attack.value_or(derive_seed(seeds.global, 3));
}
std::uint64_t RunConfig::eval_seed() const { return seeds.eval.value_or(derive_seed(seeds.global, 4)); }

RunConfig config_from_json(const json& doc) {
  RunConfig c;
  Section root(doc, "");
  if (auto s = root.sub("paths")) {
    s->read("corpus", c.paths.corpus);
    s->read("checkpoints", c.paths.checkpoints);
    s->read("reports", c.paths.reports);
    s->finish();
  }
  if (auto s = root.sub("seeds")) {
    s->read("global", c.seeds.global);
    s->read("embedding", c.seeds.embedding);
    s->read("data", c.seeds.data);
    s->read("verifier", c.seeds.verifier);
    s->read("gan", c.seeds.gan);
    s->read("attack", c.seeds.attack);
    s->read("eval", c.seeds.eval);
    s->finish();
  }
  if (auto s = root.sub("data")) {
    s->read("users", c.data.users);
    s->read("sentences", c.data.sentences);
    s->read("target_user", c.data.target_user);
    s->finish();
  }
  if (auto s = root.sub("verifier")) {
    s->read("hidden", c.verifier.hidden);
    s->read("embedding_dim", c.verifier.embedding_dim);
    s->read("margin", c.verifier.margin);
    s->read("epochs", c.verifier.epochs);
    s->read("batch_size", c.verifier.batch_size);
    s->read("train_pairs", c.verifier.train_pairs);
    s->read("validation_pairs", c.verifier.validation_pairs);
    s->read("holdout_fraction", c.verifier.holdout_fraction);
    s->read("timing_gain", c.verifier.timing_gain);
    read_adam(s->sub("adam"), c.verifier.adam);
    s->finish();
  }
  if (auto s = root.sub("gan")) {
    s->read("generator_hidden", c.gan.generator_hidden);
    s->read("discriminator_hidden", c.gan.discriminator_hidden);
    s->read("batch_size", c.gan.batch_size);
    s->read("max_epochs", c.gan.max_epochs);
    s->read("check_interval", c.gan.check_interval);
    s->read("check_subsets", c.gan.check_subsets);
    s->read("check_subset_size", c.gan.check_subset_size);
    s->read("stop_threshold", c.gan.stop_threshold);
    s->read("timing_gain", c.gan.timing_gain);
    s->read("latent_stddev", c.gan.latent_stddev);
    read_adam(s->sub("generator_adam"), c.gan.generator_adam);
    read_adam(s->sub("discriminator_adam"), c.gan.discriminator_adam);
    s->finish();
  }
  if (auto s = root.sub("attack")) {
    s->read("n_sequences", c.attack.n_sequences);
    s->read("fit_space_model", c.attack.fit_space_model);
    s->read("conditions", c.attack.conditions);
    if (auto sp = s->sub("space")) {
      sp->read("pre_gap_mean", c.attack.space.pre_gap.mean);
      sp->read("pre_gap_std", c.attack.space.pre_gap.stddev);
      sp->read("hold_mean", c.attack.space.hold.mean);
      sp->read("hold_std", c.attack.space.hold.stddev);
      sp->read("post_gap_mean", c.attack.space.post_gap.mean);
      sp->read("post_gap_std", c.attack.space.post_gap.stddev);
      sp->finish();
    }
    s->finish();
  }
  root.finish();
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

json config_to_json(const RunConfig& c) {
  const auto& sp = c.attack.space;
  return {
      {"paths",
       {{"corpus", c.paths.corpus},
        {"checkpoints", c.paths.checkpoints},
        {"reports", c.paths.reports}}},
      {"seeds",
       {{"global", c.seeds.global},
        {"embedding", c.seeds.embedding},
        {"data", c.data_seed()},
        {"verifier", c.verifier_seed()},
        {"gan", c.gan_seed()},
        {"attack", c.attack_seed()},
        {"eval", c.eval_seed()}}},
      {"data",
       {{"users", c.data.users},
        {"sentences", c.data.sentences},
        {"target_user", c.data.target_user}}},
      {"verifier",
       {{"hidden", c.verifier.hidden},
        {"embedding_dim", c.verifier.embedding_dim},
        {"margin", c.verifier.margin},
        {"epochs", c.verifier.epochs},
        {"batch_size", c.verifier.batch_size},
        {"train_pairs", c.verifier.train_pairs},
        {"validation_pairs", c.verifier.validation_pairs},
        {"holdout_fraction", c.verifier.holdout_fraction},
        {"timing_gain", c.verifier.timing_gain},
        {"adam", adam_json(c.verifier.adam)}}},
      {"gan",
       {{"generator_hidden", c.gan.generator_hidden},
        {"discriminator_hidden", c.gan.discriminator_hidden},
        {"batch_size", c.gan.batch_size},
        {"max_epochs", c.gan.max_epochs},
        {"check_interval", c.gan.check_interval},
        {"check_subsets", c.gan.check_subsets},
        {"check_subset_size", c.gan.check_subset_size},
        {"stop_threshold", c.gan.stop_threshold},
        {"timing_gain", c.gan.timing_gain},
        {"latent_stddev", c.gan.latent_stddev},
        {"generator_adam", adam_json(c.gan.generator_adam)},
        {"discriminator_adam", adam_json(c.gan.discriminator_adam)}}},
      {"attack",
       {{"n_sequences", c.attack.n_sequences},
        {"fit_space_model", c.attack.fit_space_model},
        {"conditions", c.attack.conditions},
        {"space",
         {{"pre_gap_mean", sp.pre_gap.mean},
          {"pre_gap_std", sp.pre_gap.stddev},
          {"hold_mean", sp.hold.mean},
          {"hold_std", sp.hold.stddev},
          {"post_gap_mean", sp.post_gap.mean},
          {"post_gap_std", sp.post_gap.stddev}}}}}};
}

// Paths are left out so relocating a run does not change its identity.
std::string config_hash(const RunConfig& config) {
  auto doc = config_to_json(config);
  doc.erase("paths");
  return fingerprint(doc.dump());
}

void validate(const RunConfig& c) {
  require(c.data.users >= 2, "data.users must be >= 2");
  require(c.data.sentences >= 1, "data.sentences must be >= 1");
  require(!c.data.target_user.empty(), "data.target_user must not be empty");

  require(!c.verifier.hidden.empty(), "verifier.hidden must list at least one width");
  for (int w : c.verifier.hidden) require(w >= 1, "verifier.hidden widths must be >= 1");
  require(c.verifier.embedding_dim >= 1, "verifier.embedding_dim must be >= 1");
  require(c.verifier.margin > 0.0, "verifier.margin must be > 0");
  require(c.verifier.epochs >= 1, "verifier.epochs must be >= 1");
  require(c.verifier.batch_size >= 1, "verifier.batch_size must be >= 1");
  require(c.verifier.train_pairs >= 2, "verifier.train_pairs must be >= 2");
  require(c.verifier.validation_pairs >= 2, "verifier.validation_pairs must be >= 2");
  require(c.verifier.holdout_fraction >= 0.0 && c.verifier.holdout_fraction < 1.0,
          "verifier.holdout_fraction must lie in [0, 1)");
  require(c.verifier.timing_gain > 0.0, "verifier.timing_gain must be > 0");
  validate_adam(c.verifier.adam, "verifier.adam");

  for (int w : c.gan.generator_hidden) require(w >= 1, "gan.generator_hidden widths must be >= 1");
  for (int w : c.gan.discriminator_hidden)
    require(w >= 1, "gan.discriminator_hidden widths must be >= 1");
  require(c.gan.batch_size >= 1, "gan.batch_size must be >= 1");
  require(c.gan.max_epochs >= 1, "gan.max_epochs must be >= 1");
  require(c.gan.check_interval >= 1, "gan.check_interval must be >= 1");
  require(c.gan.check_subsets >= 1, "gan.check_subsets must be >= 1");
  require(c.gan.check_subset_size >= 1, "gan.check_subset_size must be >= 1");
  require(c.gan.stop_threshold > 0.0 && c.gan.stop_threshold <= 1.0,
          "gan.stop_threshold must lie in (0, 1]");
  require(c.gan.timing_gain > 0.0, "gan.timing_gain must be > 0");
  require(c.gan.latent_stddev > 0.0, "gan.latent_stddev must be > 0");
  validate_adam(c.gan.generator_adam, "gan.generator_adam");
  validate_adam(c.gan.discriminator_adam, "gan.discriminator_adam");

  require(c.attack.n_sequences >= 1, "attack.n_sequences must be >= 1");
  require(!c.attack.conditions.empty(), "attack.conditions must not be empty");
  for (const auto& name : c.attack.conditions) condition_from_string(name);
  for (const auto* g : {&c.attack.space.pre_gap, &c.attack.space.hold, &c.attack.space.post_gap})
    require(g->mean > 0.0 && g->stddev >= 0.0, "attack.space means must be > 0, stds >= 0");
}

}  // namespace keyspoof
