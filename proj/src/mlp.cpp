#include "autolf/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "autolf/errors.hpp"
#include "autolf/linear.hpp"
#include "autolf/rng.hpp"

namespace autolf {

using nlohmann::json;

MlpClassifier MlpClassifier::init(std::size_t in_dim, std::size_t hidden,
                                  std::size_t num_classes, std::uint64_t seed) {
  if (in_dim == 0 || hidden == 0 || num_classes < 2) {
    throw PreconditionError("MLP needs in_dim > 0, hidden > 0, >= 2 classes");
  }
  MlpClassifier m;
  m.in_dim = in_dim;
  m.hidden = hidden;
  m.num_classes = num_classes;
  Rng rng = make_rng(seed);
  const double b1 = std::sqrt(6.0 / static_cast<double>(in_dim + hidden));
  const double b2 = std::sqrt(6.0 / static_cast<double>(hidden + num_classes));
  m.in_weights.resize(in_dim * hidden);
  for (double& w : m.in_weights) w = uniform(rng, -b1, b1);
  m.in_bias.assign(hidden, 0.0);
  m.out_weights.resize(num_classes * hidden);
  for (double& w : m.out_weights) w = uniform(rng, -b2, b2);
  m.out_bias.assign(num_classes, 0.0);
  return m;
}

namespace {

struct Activations {
  std::vector<double> pre;   // hidden pre-activation
  std::vector<double> act;   // ReLU output
  std::vector<double> prob;  // softmax output
};

Activations forward(const MlpClassifier& m, const SparseVec& x) {
  if (x.dim != m.in_dim) {
    throw DimensionMismatch("MLP expects dim " + std::to_string(m.in_dim) + ", got " +
                            std::to_string(x.dim));
  }
  Activations a;
  a.pre = m.in_bias;
  for (std::size_t k = 0; k < x.index.size(); ++k) {
    const double* row = m.in_weights.data() + x.index[k] * m.hidden;
    const double v = x.value[k];
    for (std::size_t h = 0; h < m.hidden; ++h) a.pre[h] += row[h] * v;
  }
  a.act.resize(m.hidden);
  for (std::size_t h = 0; h < m.hidden; ++h) a.act[h] = std::max(0.0, a.pre[h]);
  a.prob = m.out_bias;
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    const double* row = m.out_weights.data() + c * m.hidden;
    for (std::size_t h = 0; h < m.hidden; ++h) a.prob[c] += row[h] * a.act[h];
  }
  softmax_inplace(a.prob);
  return a;
}

// Shared trainer; `delta_out` writes dLoss/dLogits for example i into `d`
// given the softmax output and returns the example's loss.
template <typename DeltaFn>
MlpClassifier train_impl(std::span<const SparseVec> features, std::size_t num_classes,
                         const MlpTrainConfig& config, std::vector<double>* epoch_loss,
                         DeltaFn delta_out) {
  if (features.empty()) throw PreconditionError("train_mlp needs at least one example");
  if (config.batch_size == 0) throw PreconditionError("batch_size must be positive");
  const std::size_t in_dim = features.front().dim;
  MlpClassifier m = MlpClassifier::init(in_dim, config.hidden, num_classes, config.seed);
  const std::size_t H = m.hidden;
  Rng rng = make_rng(config.seed ^ 0x5bd1e995ULL);
  std::vector<std::size_t> order(features.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> g_in_bias(H), g_out_w(num_classes * H), g_out_b(num_classes);
  std::map<std::uint32_t, std::vector<double>> g_in_rows;
  std::vector<double> d(num_classes), dh(H);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    double total_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(g_in_bias.begin(), g_in_bias.end(), 0.0);
      std::fill(g_out_w.begin(), g_out_w.end(), 0.0);
      std::fill(g_out_b.begin(), g_out_b.end(), 0.0);
      g_in_rows.clear();
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const SparseVec& x = features[i];
        const Activations a = forward(m, x);
        total_loss += delta_out(i, a.prob, d);
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t c = 0; c < num_classes; ++c) {
          const double dc = d[c] * scale;
          g_out_b[c] += dc;
          double* grow = g_out_w.data() + c * H;
          const double* wrow = m.out_weights.data() + c * H;
          for (std::size_t h = 0; h < H; ++h) {
            grow[h] += dc * a.act[h];
            dh[h] += dc * wrow[h];
          }
        }
        for (std::size_t h = 0; h < H; ++h) {
          if (a.pre[h] <= 0.0) dh[h] = 0.0;
          g_in_bias[h] += dh[h];
        }
        for (std::size_t k = 0; k < x.index.size(); ++k) {
          auto& row = g_in_rows[x.index[k]];
          if (row.empty()) row.assign(H, 0.0);
          const double v = x.value[k];
          for (std::size_t h = 0; h < H; ++h) row[h] += dh[h] * v;
        }
      }
      const double lr = config.learning_rate;
      for (const auto& [feat, row] : g_in_rows) {
        double* w = m.in_weights.data() + static_cast<std::size_t>(feat) * H;
        for (std::size_t h = 0; h < H; ++h) w[h] -= lr * row[h];
      }
      for (std::size_t h = 0; h < H; ++h) m.in_bias[h] -= lr * g_in_bias[h];
      for (std::size_t k = 0; k < g_out_w.size(); ++k) m.out_weights[k] -= lr * g_out_w[k];
      for (std::size_t c = 0; c < num_classes; ++c) m.out_bias[c] -= lr * g_out_b[c];
    }
    if (epoch_loss) epoch_loss->push_back(total_loss / static_cast<double>(order.size()));
  }
  return m;
}

}  // namespace

std::vector<double> MlpClassifier::predict_proba(const SparseVec& x) const {
  return forward(*this, x).prob;
}

std::vector<double> MlpClassifier::predict_proba(std::span<const double> x) const {
  if (x.size() != in_dim) {
    throw DimensionMismatch("MLP expects dim " + std::to_string(in_dim) + ", got " +
                            std::to_string(x.size()));
  }
  return predict_proba(SparseVec::from_dense(x));
}

ClassIndex MlpClassifier::predict(const SparseVec& x) const {
  const auto p = predict_proba(x);
  return static_cast<ClassIndex>(std::max_element(p.begin(), p.end()) - p.begin());
}

json MlpClassifier::to_json() const {
  return {{"in_dim", in_dim},          {"hidden", hidden},
          {"num_classes", num_classes}, {"in_weights", in_weights},
          {"in_bias", in_bias},        {"out_weights", out_weights},
          {"out_bias", out_bias}};
}

MlpClassifier MlpClassifier::from_json(const json& j) {
  MlpClassifier m;
  m.in_dim = j.at("in_dim").get<std::size_t>();
  m.hidden = j.at("hidden").get<std::size_t>();
  m.num_classes = j.at("num_classes").get<std::size_t>();
  m.in_weights = j.at("in_weights").get<std::vector<double>>();
  m.in_bias = j.at("in_bias").get<std::vector<double>>();
  m.out_weights = j.at("out_weights").get<std::vector<double>>();
  m.out_bias = j.at("out_bias").get<std::vector<double>>();
  if (m.in_weights.size() != m.in_dim * m.hidden || m.in_bias.size() != m.hidden ||
      m.out_weights.size() != m.num_classes * m.hidden || m.out_bias.size() != m.num_classes) {
    throw DimensionMismatch("MLP checkpoint has inconsistent shapes");
  }
  return m;
}

MlpClassifier train_mlp(std::span<const SparseVec> features,
                        std::span<const std::vector<double>> targets,
                        std::size_t num_classes, const MlpTrainConfig& config,
                        std::vector<double>* epoch_loss) {
  if (features.size() != targets.size()) {
    throw LengthMismatch("features and targets differ in length");
  }
  if (config.mode == TargetMode::Hard) {
    std::vector<ClassIndex> hard(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
      hard[i] = static_cast<ClassIndex>(
          std::max_element(targets[i].begin(), targets[i].end()) - targets[i].begin());
    }
    return train_mlp_hard(features, hard, num_classes, config, epoch_loss);
  }
  return train_impl(features, num_classes, config, epoch_loss,
                    [&](std::size_t i, const std::vector<double>& p, std::vector<double>& d) {
                      double loss = 0.0;
                      for (std::size_t c = 0; c < num_classes; ++c) {
                        const double t = targets[i][c];
                        d[c] = p[c] - t;
                        if (t > 0.0) loss -= t * std::log(std::max(p[c], 1e-300));
                      }
                      return loss;
                    });
}

MlpClassifier train_mlp_hard(std::span<const SparseVec> features,
                             std::span<const ClassIndex> targets, std::size_t num_classes,
                             const MlpTrainConfig& config, std::vector<double>* epoch_loss) {
  if (features.size() != targets.size()) {
    throw LengthMismatch("features and targets differ in length");
  }
  return train_impl(features, num_classes, config, epoch_loss,
                    [&](std::size_t i, const std::vector<double>& p, std::vector<double>& d) {
                      const auto y = static_cast<std::size_t>(targets[i]);
                      for (std::size_t c = 0; c < num_classes; ++c) d[c] = p[c];
                      d[y] -= 1.0;
                      return -std::log(std::max(p[y], 1e-300));
                    });
}

}  // namespace autolf
