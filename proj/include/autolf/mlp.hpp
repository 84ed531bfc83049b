#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "autolf/corpus.hpp"
#include "autolf/features.hpp"
#include "json.hpp"

namespace autolf {

// One hidden ReLU layer followed by a softmax output layer.
//   in_weights:  in_dim x hidden (row per input feature, so sparse inputs
//                touch contiguous rows)
//   out_weights: num_classes x hidden
struct MlpClassifier {
  std::size_t in_dim = 0;
  std::size_t hidden = 0;
  std::size_t num_classes = 0;
  std::vector<double> in_weights;
  std::vector<double> in_bias;
  std::vector<double> out_weights;
  std::vector<double> out_bias;

  // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static MlpClassifier init(std::size_t in_dim, std::size_t hidden,
                            std::size_t num_classes, std::uint64_t seed);

  std::vector<double> predict_proba(const SparseVec& x) const;
  std::vector<double> predict_proba(std::span<const double> x) const;
  ClassIndex predict(const SparseVec& x) const;

  nlohmann::json to_json() const;
  static MlpClassifier from_json(const nlohmann::json& j);

  friend bool operator==(const MlpClassifier&, const MlpClassifier&) = default;
};

enum class TargetMode { Soft, Hard };

struct MlpTrainConfig {
  std::size_t hidden = 100;
  int epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  TargetMode mode = TargetMode::Soft;
};

// Mini-batch gradient descent on mean cross-entropy against the target
// distributions (or, in hard mode, against argmax class indices).
// Shuffling is seeded; numerics are single-threaded. `epoch_loss` receives
// the mean loss of every epoch.
MlpClassifier train_mlp(std::span<const SparseVec> features,
                        std::span<const std::vector<double>> targets,
                        std::size_t num_classes, const MlpTrainConfig& config,
                        std::vector<double>* epoch_loss = nullptr);

MlpClassifier train_mlp_hard(std::span<const SparseVec> features,
                             std::span<const ClassIndex> targets, std::size_t num_classes,
                             const MlpTrainConfig& config,
                             std::vector<double>* epoch_loss = nullptr);

}  // namespace autolf
