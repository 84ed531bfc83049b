#include "autolf/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "autolf/errors.hpp"
#include "autolf/rng.hpp"

namespace autolf {

using nlohmann::json;

void PipelineConfig::validate() const {
  if (schema_version != kConfigSchemaVersion) {
    throw PreconditionError("unsupported config schema_version " +
                            std::to_string(schema_version));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw PreconditionError("alpha must be in [0, 1]");
  if (!(beta >= 0.0)) throw PreconditionError("beta must be >= 0");
  for (const auto& [c, k] : k_per_category) {
    if (k < 1) throw PreconditionError("k for " + std::string(to_string(c)) + " must be >= 1");
  }
  if (candidates_per_round < 1) throw PreconditionError("candidates_per_round must be >= 1");
  if (max_rounds < 1) throw PreconditionError("max_rounds must be >= 1");
  if (!(grid_step > 0.0 && grid_step <= 1.0)) throw PreconditionError("grid_step must be in (0, 1]");
  for (const auto& [c, t] : tau_dup) {
    if (!(t > 0.0 && t <= 1.0)) throw PreconditionError("tau_dup must be in (0, 1]");
  }
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
    throw PreconditionError("subsample_fraction must be in (0, 1]");
  }
  if (hidden == 0 || batch_size == 0 || epochs < 1 || lf_epochs < 1) {
    throw PreconditionError("training sizes must be positive");
  }
  if (embedding.dim == 0) throw PreconditionError("embedding dim must be positive");
}

SynthesisConfig PipelineConfig::synthesis() const {
  SynthesisConfig s;
  s.beta = beta;
  s.grid_step = grid_step;
  s.subsample_fraction = subsample_fraction;
  s.small_seed = small_seed;
  s.abstain_enabled = abstain_enabled;
  s.logistic.epochs = lf_epochs;
  s.logistic.learning_rate = lf_learning_rate;
  s.l2_values = l2_values;
  s.ngram_ranges = ngram_ranges;
  s.head_widths = head_widths;
  s.embedding_dim = embedding.dim;
  return s;
}

ExploitationConfig PipelineConfig::exploitation() const {
  ExploitationConfig e;
  e.alpha = alpha;
  e.k_per_category = k_per_category;
  e.candidates_per_round = candidates_per_round;
  e.max_rounds = max_rounds;
  e.tau = tau_dup;
  e.agreement_sample = agreement_sample;
  e.sample_seed = base_seed + 17;
  return e;
}

DownstreamConfig PipelineConfig::downstream() const {
  DownstreamConfig d;
  d.mlp.hidden = hidden;
  d.mlp.epochs = epochs;
  d.mlp.batch_size = batch_size;
  d.mlp.learning_rate = learning_rate;
  d.mlp.seed = base_seed + 31;
  d.mlp.mode = target_mode;
  d.include_uncovered = include_uncovered;
  return d;
}

LabelModelKind PipelineConfig::label_model_kind(std::span<const LabelFunction> lfs) const {
  switch (label_model.kind) {
    case LabelModelName::Majority:
      return MajorityVote{};
    case LabelModelName::Weighted:
      return WeightedMajorityVote{weights_from_accuracy(lfs)};
    case LabelModelName::DawidSkene:
      return DawidSkene{label_model.max_iter, label_model.tol};
  }
  return MajorityVote{};
}

namespace {

template <typename E>
struct EnumNames {
  std::vector<std::pair<E, const char*>> names;
  const char* to(E e) const {
    for (const auto& [v, n] : names) {
      if (v == e) return n;
    }
    return "?";
  }
  E from(const std::string& s, const char* what) const {
    for (const auto& [v, n] : names) {
      if (s == n) return v;
    }
    throw PreconditionError(std::string("unknown ") + what + ": " + s);
  }
};

const EnumNames<ProviderKind> kProviderNames{
    {{ProviderKind::Offline, "offline_seeded"}, {ProviderKind::Remote, "remote_llm"}}};
const EnumNames<EmbeddingKind> kEmbeddingNames{
    {{EmbeddingKind::Hashing, "hashing"}, {EmbeddingKind::Remote, "remote"}}};
const EnumNames<LabelModelName> kLabelModelNames{{{LabelModelName::Majority, "majority"},
                                                  {LabelModelName::Weighted, "weighted"},
                                                  {LabelModelName::DawidSkene, "dawid_skene"}}};
const EnumNames<TargetMode> kTargetNames{{{TargetMode::Soft, "soft"}, {TargetMode::Hard, "hard"}}};

template <typename V>
json by_category(const std::map<Category, V>& m) {
  json o = json::object();
  for (const auto& [c, v] : m) o[std::string(to_string(c))] = v;
  return o;
}

template <typename V>
std::map<Category, V> by_category_from(const json& j) {
  std::map<Category, V> m;
  for (const auto& it : j.items()) m[category_from_string(it.key())] = it.value().template get<V>();
  return m;
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* where) {
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) {
      throw PreconditionError(std::string("unknown key \"") + k + "\" in " + where);
    }
  }
}

}  // namespace

json config_to_json(const PipelineConfig& c) {
  json ngrams = json::array();
  for (const auto& r : c.ngram_ranges) ngrams.push_back({r.min_n, r.max_n});
  return {
      {"schema_version", c.schema_version},
      {"labels", c.labels},
      {"task_description", c.task_description},
      {"alpha", c.alpha},
      {"beta", c.beta},
      {"k_per_category", by_category(c.k_per_category)},
      {"candidates_per_round", c.candidates_per_round},
      {"max_rounds", c.max_rounds},
      {"base_seed", c.base_seed},
      {"grid_step", c.grid_step},
      {"tau_dup", by_category(c.tau_dup)},
      {"agreement_sample", c.agreement_sample},
      {"abstain_enabled", c.abstain_enabled},
      {"label_model",
       {{"kind", kLabelModelNames.to(c.label_model.kind)},
        {"max_iter", c.label_model.max_iter},
        {"tol", c.label_model.tol}}},
      {"surface_provider",
       {{"kind", kProviderNames.to(c.surface_provider.kind)},
        {"top_t", c.surface_provider.top_t},
        {"timeout_seconds", c.surface_provider.timeout_seconds},
        {"retries", c.surface_provider.retries},
        {"prompt_examples", c.surface_provider.prompt_examples}}},
      {"embedding",
       {{"kind", kEmbeddingNames.to(c.embedding.kind)},
        {"dim", c.embedding.dim},
        {"cache_path", c.embedding.cache_path},
        {"timeout_seconds", c.embedding.timeout_seconds},
        {"retries", c.embedding.retries}}},
      {"candidate_training",
       {{"subsample_fraction", c.subsample_fraction},
        {"small_seed", c.small_seed},
        {"epochs", c.lf_epochs},
        {"learning_rate", c.lf_learning_rate},
        {"l2_values", c.l2_values},
        {"ngram_ranges", ngrams},
        {"head_widths", c.head_widths}}},
      {"downstream",
       {{"hidden", c.hidden},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"learning_rate", c.learning_rate},
        {"target_mode", kTargetNames.to(c.target_mode)},
        {"include_uncovered", c.include_uncovered}}},
  };
}

PipelineConfig config_from_json(const json& j) {
  if (!j.is_object()) throw PreconditionError("config must be a JSON object");
  reject_unknown(j,
                 {"schema_version", "labels", "task_description", "alpha", "beta",
                  "k_per_category", "candidates_per_round", "max_rounds", "base_seed",
                  "grid_step", "tau_dup", "agreement_sample", "abstain_enabled", "label_model",
                  "surface_provider", "embedding", "candidate_training", "downstream"},
                 "config");
  PipelineConfig c;
  try {
    c.schema_version = j.value("schema_version", c.schema_version);
    c.labels = j.value("labels", c.labels);
    c.task_description = j.value("task_description", c.task_description);
    c.alpha = j.value("alpha", c.alpha);
    c.beta = j.value("beta", c.beta);
    if (j.contains("k_per_category")) {
      for (const auto& [cat, k] : by_category_from<int>(j["k_per_category"])) {
        c.k_per_category[cat] = k;
      }
    }
    c.candidates_per_round = j.value("candidates_per_round", c.candidates_per_round);
    c.max_rounds = j.value("max_rounds", c.max_rounds);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.grid_step = j.value("grid_step", c.grid_step);
    if (j.contains("tau_dup")) {
      for (const auto& [cat, t] : by_category_from<double>(j["tau_dup"])) c.tau_dup[cat] = t;
    }
    c.agreement_sample = j.value("agreement_sample", c.agreement_sample);
    c.abstain_enabled = j.value("abstain_enabled", c.abstain_enabled);
    if (j.contains("label_model")) {
      const auto& lm = j["label_model"];
      reject_unknown(lm, {"kind", "max_iter", "tol"}, "label_model");
      if (lm.contains("kind")) {
        c.label_model.kind = kLabelModelNames.from(lm["kind"].get<std::string>(), "label model");
      }
      c.label_model.max_iter = lm.value("max_iter", c.label_model.max_iter);
      c.label_model.tol = lm.value("tol", c.label_model.tol);
    }
    if (j.contains("surface_provider")) {
      const auto& sp = j["surface_provider"];
      reject_unknown(sp, {"kind", "top_t", "timeout_seconds", "retries", "prompt_examples"},
                     "surface_provider");
      auto& d = c.surface_provider;
      if (sp.contains("kind")) d.kind = kProviderNames.from(sp["kind"].get<std::string>(), "provider");
      d.top_t = sp.value("top_t", d.top_t);
      d.timeout_seconds = sp.value("timeout_seconds", d.timeout_seconds);
      d.retries = sp.value("retries", d.retries);
      d.prompt_examples = sp.value("prompt_examples", d.prompt_examples);
    }
    if (j.contains("embedding")) {
      const auto& e = j["embedding"];
      reject_unknown(e, {"kind", "dim", "cache_path", "timeout_seconds", "retries"}, "embedding");
      auto& d = c.embedding;
      if (e.contains("kind")) d.kind = kEmbeddingNames.from(e["kind"].get<std::string>(), "embedding");
      d.dim = e.value("dim", d.dim);
      d.cache_path = e.value("cache_path", d.cache_path);
      d.timeout_seconds = e.value("timeout_seconds", d.timeout_seconds);
      d.retries = e.value("retries", d.retries);
    }
    if (j.contains("candidate_training")) {
      const auto& t = j["candidate_training"];
      reject_unknown(t,
                     {"subsample_fraction", "small_seed", "epochs", "learning_rate", "l2_values",
                      "ngram_ranges", "head_widths"},
                     "candidate_training");
      c.subsample_fraction = t.value("subsample_fraction", c.subsample_fraction);
      c.small_seed = t.value("small_seed", c.small_seed);
      c.lf_epochs = t.value("epochs", c.lf_epochs);
      c.lf_learning_rate = t.value("learning_rate", c.lf_learning_rate);
      c.l2_values = t.value("l2_values", c.l2_values);
      if (t.contains("ngram_ranges")) {
        c.ngram_ranges.clear();
        for (const auto& r : t["ngram_ranges"]) {
          c.ngram_ranges.push_back({r.at(0).get<int>(), r.at(1).get<int>()});
        }
      }
      c.head_widths = t.value("head_widths", c.head_widths);
    }
    if (j.contains("downstream")) {
      const auto& d = j["downstream"];
      reject_unknown(d,
                     {"hidden", "epochs", "batch_size", "learning_rate", "target_mode",
                      "include_uncovered"},
                     "downstream");
      c.hidden = d.value("hidden", c.hidden);
      c.epochs = d.value("epochs", c.epochs);
      c.batch_size = d.value("batch_size", c.batch_size);
      c.learning_rate = d.value("learning_rate", c.learning_rate);
      if (d.contains("target_mode")) {
        c.target_mode = kTargetNames.from(d["target_mode"].get<std::string>(), "target mode");
      }
      c.include_uncovered = d.value("include_uncovered", c.include_uncovered);
    }
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw PreconditionError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

void save_config(const PipelineConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << config_to_json(config).dump(2) << '\n';
}

std::string config_hash(const PipelineConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config_to_json(config).dump())));
  return buf;
}

}  // namespace autolf
