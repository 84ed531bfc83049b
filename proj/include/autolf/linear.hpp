#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "autolf/corpus.hpp"
#include "autolf/features.hpp"
#include "json.hpp"

namespace autolf {

// Multinomial logistic regression. weights is C x d, row-major.
struct LinearClassifier {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  // Indices into the seed set the classifier was fit on, and the draw seed.
  std::vector<std::size_t> trained_on;
  std::uint64_t rng_seed = 0;

  LinearClassifier() = default;
  LinearClassifier(std::size_t num_classes, std::size_t dim)
      : num_classes(num_classes), dim(dim), weights(num_classes * dim, 0.0),
        bias(num_classes, 0.0) {}

  double& w(std::size_t c, std::size_t j) { return weights[c * dim + j]; }
  double w(std::size_t c, std::size_t j) const { return weights[c * dim + j]; }

  // softmax(Wx + b). Throws DimensionMismatch when x.dim != dim.
  std::vector<double> predict_proba(const SparseVec& x) const;
  std::vector<double> predict_proba(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static LinearClassifier from_json(const nlohmann::json& j);
};

// Numerically stable in-place softmax.
void softmax_inplace(std::span<double> logits);

struct LogisticConfig {
  int epochs = 300;
  double learning_rate = 0.5;
  double l2 = 1e-3;
};

// Full-batch gradient descent on mean cross-entropy + (l2/2)||W||^2 from zero
// weights. When `loss_trace` is given it receives the objective before every
// update and once after the last.
LinearClassifier train_logistic(std::span<const SparseVec> features,
                                std::span<const ClassIndex> targets,
                                std::size_t num_classes, const LogisticConfig& config,
                                std::vector<double>* loss_trace = nullptr);

double logistic_objective(const LinearClassifier& clf, std::span<const SparseVec> features,
                          std::span<const ClassIndex> targets, double l2);

}  // namespace autolf
