#include "autolf/label_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "autolf/errors.hpp"
#include "json.hpp"

namespace autolf {

using nlohmann::json;

std::vector<double> weights_from_accuracy(std::span<const LabelFunction> lfs) {
  std::vector<double> w;
  w.reserve(lfs.size());
  for (const auto& lf : lfs) w.push_back(lf.est_accuracy);
  return w;
}

ClassIndex argmax(std::span<const double> dist) {
  return static_cast<ClassIndex>(std::max_element(dist.begin(), dist.end()) - dist.begin());
}

namespace {

std::vector<double> uniform(std::size_t C) {
  return std::vector<double>(C, 1.0 / static_cast<double>(C));
}

bool row_covered(std::span<const WeakLabel> row) {
  return std::any_of(row.begin(), row.end(), [](WeakLabel v) { return !v.is_abstain(); });
}

// Vote mass per class; the caller normalizes.
ProbabilisticLabel weighted_vote(std::span<const WeakLabel> row, std::span<const double> weights,
                                 std::size_t C) {
  ProbabilisticLabel out;
  out.covered = row_covered(row);
  if (!out.covered) {
    out.dist = uniform(C);
    return out;
  }
  out.dist.assign(C, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j].is_abstain()) continue;
    const double w = weights.empty() ? 1.0 : weights[j];
    out.dist[static_cast<std::size_t>(row[j].value)] += w;
    total += w;
  }
  if (total > 0.0) {
    for (double& d : out.dist) d /= total;
  } else {
    out.dist = uniform(C);  // votes exist but every voter has weight 0
  }
  return out;
}

void check_labels(const LabelMatrix& m, std::size_t C) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (auto v : m.row(i)) {
      if (!v.is_abstain() && (v.value < 0 || static_cast<std::size_t>(v.value) >= C)) {
        throw PreconditionError("label matrix entry " + std::to_string(v.value) +
                                " outside the label space");
      }
    }
  }
}

}  // namespace

std::vector<double> DawidSkeneModel::posterior(std::span<const WeakLabel> row) const {
  const std::size_t C = num_classes;
  std::vector<double> logp(C);
  for (std::size_t c = 0; c < C; ++c) {
    double s = std::log(class_priors[c]);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j].is_abstain()) continue;
      s += std::log(confusion_at(j, c, static_cast<std::size_t>(row[j].value)));
    }
    logp[c] = s;
  }
  const double mx = *std::max_element(logp.begin(), logp.end());
  double z = 0.0;
  for (double& v : logp) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : logp) v /= z;
  return logp;
}

double dawid_skene_log_likelihood(const DawidSkeneModel& model, const LabelMatrix& matrix) {
  const std::size_t C = model.num_classes;
  double ll = 0.0;
  std::vector<double> logp(C);
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    const auto row = matrix.row(i);
    for (std::size_t c = 0; c < C; ++c) {
      double s = std::log(model.class_priors[c]);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (!row[j].is_abstain()) {
          s += std::log(model.confusion_at(j, c, static_cast<std::size_t>(row[j].value)));
        }
      }
      logp[c] = s;
    }
    const double mx = *std::max_element(logp.begin(), logp.end());
    double z = 0.0;
    for (double v : logp) z += std::exp(v - mx);
    ll += mx + std::log(z);
  }
  return ll;
}

namespace {

// M-step with add-delta smoothing on the expected counts.
void m_step(DawidSkeneModel& model, const LabelMatrix& matrix,
            const std::vector<std::vector<double>>& post) {
  const std::size_t C = model.num_classes;
  const std::size_t m = matrix.cols();
  const double delta = kDawidSkeneSmoothing;
  std::vector<double> prior(C, delta);
  for (const auto& p : post) {
    for (std::size_t c = 0; c < C; ++c) prior[c] += p[c];
  }
  double z = 0.0;
  for (double v : prior) z += v;
  for (std::size_t c = 0; c < C; ++c) model.class_priors[c] = prior[c] / z;

  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> counts(C * C, delta);
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
      const WeakLabel v = matrix.at(i, j);
      if (v.is_abstain()) continue;
      const auto obs = static_cast<std::size_t>(v.value);
      for (std::size_t c = 0; c < C; ++c) counts[c * C + obs] += post[i][c];
    }
    for (std::size_t c = 0; c < C; ++c) {
      double rz = 0.0;
      for (std::size_t o = 0; o < C; ++o) rz += counts[c * C + o];
      for (std::size_t o = 0; o < C; ++o) model.confusion[j][c * C + o] = counts[c * C + o] / rz;
    }
  }
}

// log of the Dirichlet(1 + delta) density, up to a constant.
double log_smoothing_prior(const DawidSkeneModel& model) {
  double s = 0.0;
  for (double p : model.class_priors) s += std::log(p);
  for (const auto& conf : model.confusion) {
    for (double v : conf) s += std::log(v);
  }
  return kDawidSkeneSmoothing * s;
}

}  // namespace

DawidSkeneModel fit_dawid_skene(const LabelMatrix& matrix, std::size_t num_classes,
                                int max_iter, double tol) {
  if (num_classes < 2) throw PreconditionError("Dawid-Skene needs >= 2 classes");
  if (matrix.rows() == 0 || matrix.cols() == 0) throw PreconditionError("empty label matrix");
  check_labels(matrix, num_classes);
  bool any = false;
  for (std::size_t i = 0; i < matrix.rows() && !any; ++i) any = row_covered(matrix.row(i));
  if (!any) throw NoSignal("every label matrix entry abstains");

  const std::size_t C = num_classes;
  const std::size_t N = matrix.rows();
  DawidSkeneModel model;
  model.num_classes = C;
  model.class_priors.assign(C, 1.0 / static_cast<double>(C));
  model.confusion.assign(matrix.cols(), std::vector<double>(C * C, 0.0));

  std::vector<std::vector<double>> post(N);
  for (std::size_t i = 0; i < N; ++i) post[i] = weighted_vote(matrix.row(i), {}, C).dist;

  for (int it = 0; it < max_iter; ++it) {
    m_step(model, matrix, post);
    const double ll = dawid_skene_log_likelihood(model, matrix);
    model.log_likelihood.push_back(ll);
    model.log_posterior.push_back(ll + log_smoothing_prior(model));
    double change = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      auto next = model.posterior(matrix.row(i));
      for (std::size_t c = 0; c < C; ++c) change = std::max(change, std::abs(next[c] - post[i][c]));
      post[i] = std::move(next);
    }
    model.iterations_run = it + 1;
    if (change < tol) {
      model.converged = true;
      break;
    }
  }
  return model;
}

std::vector<ProbabilisticLabel> aggregate(const LabelMatrix& matrix, const LabelModelKind& kind,
                                          const LabelSpace& labels) {
  if (matrix.rows() == 0 || matrix.cols() == 0) {
    throw PreconditionError("cannot aggregate an empty label matrix");
  }
  const std::size_t C = labels.size();
  check_labels(matrix, C);
  std::vector<ProbabilisticLabel> out;
  out.reserve(matrix.rows());
  if (std::holds_alternative<MajorityVote>(kind)) {
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
      out.push_back(weighted_vote(matrix.row(i), {}, C));
    }
  } else if (const auto* w = std::get_if<WeightedMajorityVote>(&kind)) {
    if (w->weights.size() != matrix.cols()) {
      throw LengthMismatch("weighted vote needs one weight per LF column");
    }
    if (std::any_of(w->weights.begin(), w->weights.end(), [](double x) { return x < 0.0; })) {
      throw PreconditionError("vote weights must be non-negative");
    }
    if (std::all_of(w->weights.begin(), w->weights.end(), [](double x) { return x == 0.0; })) {
      throw AllWeightsZero("every LF weight is zero");
    }
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
      out.push_back(weighted_vote(matrix.row(i), w->weights, C));
    }
  } else {
    const auto& ds = std::get<DawidSkene>(kind);
    const auto model = fit_dawid_skene(matrix, C, ds.max_iter, ds.tol);
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
      ProbabilisticLabel p;
      p.covered = row_covered(matrix.row(i));
      p.dist = p.covered ? model.posterior(matrix.row(i)) : uniform(C);
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<HardLabel> hard_labels(std::span<const ProbabilisticLabel> probs) {
  std::vector<HardLabel> out;
  out.reserve(probs.size());
  for (const auto& p : probs) out.push_back({argmax(p.dist), p.covered});
  return out;
}

void write_labels_jsonl(const std::filesystem::path& path,
                        std::span<const std::string> doc_ids,
                        std::span<const ProbabilisticLabel> probs, const LabelSpace& labels) {
  if (doc_ids.size() != probs.size()) throw LengthMismatch("doc ids and labels differ");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    json j = {{"doc_id", doc_ids[i]},
              {"dist", probs[i].dist},
              {"covered", probs[i].covered},
              {"hard", labels.name(argmax(probs[i].dist))}};
    out << j.dump() << '\n';
  }
}

std::vector<LabelRecord> read_labels_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<LabelRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      out.push_back({j.at("doc_id").get<std::string>(),
                     {j.at("dist").get<std::vector<double>>(), j.at("covered").get<bool>()}});
    } catch (const json::exception& e) {
      throw MalformedRecord(line_no, e.what());
    }
  }
  return out;
}

}  // namespace autolf
