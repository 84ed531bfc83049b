#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "autolf/corpus.hpp"
#include "autolf/features.hpp"
#include "autolf/label_model.hpp"
#include "autolf/metrics.hpp"
#include "autolf/mlp.hpp"

namespace autolf {

struct TrainingRow {
  SparseVec features;
  std::vector<double> target;
  bool covered = false;
};

struct TrainingTargets {
  TargetMode mode = TargetMode::Soft;
  std::vector<TrainingRow> rows;
};

struct DownstreamConfig {
  MlpTrainConfig mlp;
  bool include_uncovered = false;
};

// Pairs each document with its probabilistic label; uncovered rows are
// dropped unless include_uncovered.
TrainingTargets make_training_targets(std::span<const ProbabilisticLabel> probs,
                                      std::span<const Document> docs,
                                      const Featurizer& featurizer,
                                      const DownstreamConfig& config);

// Throws DegenerateTargets when fewer than two classes appear among covered
// hard labels.
MlpClassifier train_downstream(std::span<const ProbabilisticLabel> probs,
                               std::span<const Document> docs, const Featurizer& featurizer,
                               const DownstreamConfig& config,
                               std::vector<double>* epoch_loss = nullptr);

// Weighted F1 of argmax predictions on the test split (coverage fixed at 1).
EvalReport evaluate_e2e(const MlpClassifier& clf, std::span<const LabeledExample> test,
                        const Featurizer& featurizer);

void write_checkpoint(const std::filesystem::path& path, const MlpClassifier& clf,
                      const std::string& config_hash);
MlpClassifier read_checkpoint(const std::filesystem::path& path);

void write_predictions_jsonl(const std::filesystem::path& path, const MlpClassifier& clf,
                             std::span<const LabeledExample> test, const Featurizer& featurizer,
                             const LabelSpace& labels);

}  // namespace autolf
