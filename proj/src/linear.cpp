#include "autolf/linear.hpp"

#include <algorithm>
#include <cmath>

#include "autolf/errors.hpp"

namespace autolf {

using nlohmann::json;

void softmax_inplace(std::span<double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - mx);
    sum += z;
  }
  for (double& z : logits) z /= sum;
}

std::vector<double> LinearClassifier::predict_proba(const SparseVec& x) const {
  if (x.dim != dim) {
    throw DimensionMismatch("classifier expects dim " + std::to_string(dim) + ", got " +
                            std::to_string(x.dim));
  }
  std::vector<double> z(bias);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double* row = weights.data() + c * dim;
    for (std::size_t k = 0; k < x.index.size(); ++k) z[c] += row[x.index[k]] * x.value[k];
  }
  softmax_inplace(z);
  return z;
}

std::vector<double> LinearClassifier::predict_proba(std::span<const double> x) const {
  if (x.size() != dim) {
    throw DimensionMismatch("classifier expects dim " + std::to_string(dim) + ", got " +
                            std::to_string(x.size()));
  }
  return predict_proba(SparseVec::from_dense(x));
}

json LinearClassifier::to_json() const {
  return {{"num_classes", num_classes}, {"dim", dim},     {"weights", weights},
          {"bias", bias},               {"trained_on", trained_on}, {"rng_seed", rng_seed}};
}

LinearClassifier LinearClassifier::from_json(const json& j) {
  LinearClassifier c;
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.dim = j.at("dim").get<std::size_t>();
  c.weights = j.at("weights").get<std::vector<double>>();
  c.bias = j.at("bias").get<std::vector<double>>();
  c.trained_on = j.value("trained_on", std::vector<std::size_t>{});
  c.rng_seed = j.value("rng_seed", std::uint64_t{0});
  if (c.weights.size() != c.num_classes * c.dim || c.bias.size() != c.num_classes) {
    throw DimensionMismatch("linear classifier JSON has inconsistent shapes");
  }
  return c;
}

double logistic_objective(const LinearClassifier& clf, std::span<const SparseVec> features,
                          std::span<const ClassIndex> targets, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto p = clf.predict_proba(features[i]);
    loss -= std::log(std::max(p[static_cast<std::size_t>(targets[i])], 1e-300));
  }
  loss /= static_cast<double>(features.size());
  double sq = 0.0;
  for (double w : clf.weights) sq += w * w;
  return loss + 0.5 * l2 * sq;
}

LinearClassifier train_logistic(std::span<const SparseVec> features,
                                std::span<const ClassIndex> targets,
                                std::size_t num_classes, const LogisticConfig& config,
                                std::vector<double>* loss_trace) {
  if (features.empty() || features.size() != targets.size()) {
    throw PreconditionError("train_logistic needs equal, non-empty features and targets");
  }
  const std::size_t dim = features.front().dim;
  LinearClassifier clf(num_classes, dim);
  const double inv_n = 1.0 / static_cast<double>(features.size());
  std::vector<double> grad_w(clf.weights.size());
  std::vector<double> grad_b(num_classes);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (loss_trace) loss_trace->push_back(logistic_objective(clf, features, targets, config.l2));
    for (std::size_t k = 0; k < grad_w.size(); ++k) grad_w[k] = config.l2 * clf.weights[k];
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    for (std::size_t i = 0; i < features.size(); ++i) {
      const auto& x = features[i];
      auto p = clf.predict_proba(x);
      p[static_cast<std::size_t>(targets[i])] -= 1.0;
      for (std::size_t c = 0; c < num_classes; ++c) {
        const double g = p[c] * inv_n;
        grad_b[c] += g;
        double* row = grad_w.data() + c * dim;
        for (std::size_t k = 0; k < x.index.size(); ++k) row[x.index[k]] += g * x.value[k];
      }
    }
    for (std::size_t k = 0; k < grad_w.size(); ++k) {
      clf.weights[k] -= config.learning_rate * grad_w[k];
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
      clf.bias[c] -= config.learning_rate * grad_b[c];
    }
  }
  if (loss_trace) loss_trace->push_back(logistic_objective(clf, features, targets, config.l2));
  return clf;
}

}  // namespace autolf
