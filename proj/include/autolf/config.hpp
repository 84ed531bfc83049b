#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autolf/candidates.hpp"
#include "autolf/downstream.hpp"
#include "autolf/exploitation.hpp"
#include "autolf/label_model.hpp"
#include "json.hpp"

namespace autolf {

inline constexpr int kConfigSchemaVersion = 1;

enum class ProviderKind { Offline, Remote };
enum class EmbeddingKind { Hashing, Remote };
enum class LabelModelName { Majority, Weighted, DawidSkene };

struct SurfaceProviderConfig {
  ProviderKind kind = ProviderKind::Offline;
  std::size_t top_t = 5;
  // Remote only; endpoint, model and key come from the environment.
  int timeout_seconds = 60;
  int retries = 3;
  std::size_t prompt_examples = 40;

  friend bool operator==(const SurfaceProviderConfig&, const SurfaceProviderConfig&) = default;
};

struct EmbeddingConfig {
  EmbeddingKind kind = EmbeddingKind::Hashing;
  std::size_t dim = 256;
  std::string cache_path;  // remote only; relative paths resolve against --out
  int timeout_seconds = 30;
  int retries = 3;

  friend bool operator==(const EmbeddingConfig&, const EmbeddingConfig&) = default;
};

struct LabelModelConfig {
  LabelModelName kind = LabelModelName::Majority;
  int max_iter = 100;
  double tol = 1e-6;

  friend bool operator==(const LabelModelConfig&, const LabelModelConfig&) = default;
};

struct PipelineConfig {
  int schema_version = kConfigSchemaVersion;
  std::vector<std::string> labels;  // empty: inferred from the dataset
  std::string task_description = "Classify each document into one of the labels.";
  double alpha = 0.9;
  double beta = 0.1;
  std::map<Category, int> k_per_category{
      {Category::Surface, 20}, {Category::Structural, 20}, {Category::Semantic, 20}};
  int candidates_per_round = 8;
  int max_rounds = 10;
  std::uint64_t base_seed = 0;
  double grid_step = 0.01;
  std::map<Category, double> tau_dup{
      {Category::Surface, 0.9}, {Category::Structural, 0.98}, {Category::Semantic, 0.98}};
  std::size_t agreement_sample = 500;
  bool abstain_enabled = true;
  LabelModelConfig label_model;
  SurfaceProviderConfig surface_provider;
  EmbeddingConfig embedding;
  // Candidate training.
  double subsample_fraction = 0.8;
  std::size_t small_seed = 50;
  int lf_epochs = 300;
  double lf_learning_rate = 0.5;
  std::vector<double> l2_values{1e-3, 1e-2};
  std::vector<NgramRange> ngram_ranges{{1, 2}, {1, 1}, {2, 2}};
  std::vector<std::size_t> head_widths{0};
  // Downstream classifier.
  std::size_t hidden = 100;
  int epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  TargetMode target_mode = TargetMode::Soft;
  bool include_uncovered = false;

  // Throws PreconditionError on out-of-range values.
  void validate() const;

  SynthesisConfig synthesis() const;
  ExploitationConfig exploitation() const;
  DownstreamConfig downstream() const;
  LabelModelKind label_model_kind(std::span<const LabelFunction> lfs) const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

nlohmann::json config_to_json(const PipelineConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

// 16 hex digits of FNV-1a over the canonical JSON dump.
std::string config_hash(const PipelineConfig& config);

}  // namespace autolf
