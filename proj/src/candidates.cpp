#include "autolf/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "autolf/errors.hpp"
#include "autolf/rng.hpp"

namespace autolf {

double whm(double precision, double coverage, double beta) {
  const double b2 = beta * beta;
  const double denom = b2 * precision + coverage;
  if (denom == 0.0) return 0.0;
  return (1.0 + b2) * precision * coverage / denom;
}

void CalibrationCurve::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "omega,precision,coverage,whm\n";
  char buf[128];
  for (const auto& p : grid) {
    std::snprintf(buf, sizeof buf, "%.4f,%.10f,%.10f,%.10f\n", p.omega, p.precision,
                  p.coverage, p.whm);
    out << buf;
  }
}

std::vector<double> omega_grid(double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 1.0)) {
    throw PreconditionError("grid_step must be in (0, 1]");
  }
  std::vector<double> grid;
  const double inv = 1.0 / grid_step;
  const long long n = std::llround(inv);
  if (std::abs(inv - static_cast<double>(n)) < 1e-9) {
    for (long long k = 0; k <= n; ++k) {
      grid.push_back(static_cast<double>(k) / static_cast<double>(n));
    }
    return grid;
  }
  for (long long k = 0; static_cast<double>(k) * grid_step < 1.0; ++k) {
    grid.push_back(static_cast<double>(k) * grid_step);
  }
  grid.push_back(1.0);
  return grid;
}

CalibrationCurve calibrate_from_probs(std::span<const std::vector<double>> seed_probs,
                                      std::span<const ClassIndex> seed_gold,
                                      std::span<const std::vector<double>> coverage_probs,
                                      double beta, double grid_step) {
  if (seed_probs.empty()) throw PreconditionError("calibration needs a non-empty seed");
  if (seed_probs.size() != seed_gold.size()) {
    throw LengthMismatch("seed predictions and gold differ in length");
  }
  if (coverage_probs.empty()) throw PreconditionError("calibration needs coverage documents");
  // Confidence and argmax per example; the vote rule is max p > omega.
  auto summarize = [](std::span<const std::vector<double>> probs) {
    std::vector<std::pair<double, ClassIndex>> out;
    out.reserve(probs.size());
    for (const auto& p : probs) {
      const auto it = std::max_element(p.begin(), p.end());
      out.emplace_back(*it, static_cast<ClassIndex>(it - p.begin()));
    }
    return out;
  };
  const auto seed = summarize(seed_probs);
  const auto cov = summarize(coverage_probs);

  CalibrationCurve curve;
  curve.beta = beta;
  double best = -1.0;
  for (double omega : omega_grid(grid_step)) {
    double correct = 0.0, voted = 0.0, cov_voted = 0.0;
    for (std::size_t i = 0; i < seed.size(); ++i) {
      if (seed[i].first > omega) {
        voted += 1.0;
        if (seed[i].second == seed_gold[i]) correct += 1.0;
      }
    }
    for (const auto& c : cov) {
      if (c.first > omega) cov_voted += 1.0;
    }
    CalibrationPoint pt;
    pt.omega = omega;
    pt.precision = correct / (voted + kAccuracyEpsilon);
    pt.coverage = cov_voted / static_cast<double>(cov.size());
    pt.whm = whm(pt.precision, pt.coverage, beta);
    if (pt.whm > best) {
      best = pt.whm;
      curve.best_omega = omega;
    }
    curve.grid.push_back(pt);
  }
  return curve;
}

CalibrationCurve calibrate_threshold(CalibratedClassifierLF& lf,
                                     std::span<const LabeledExample> seed,
                                     std::span<const Document> unlabeled, double beta,
                                     double grid_step, std::size_t small_seed) {
  if (seed.empty()) throw PreconditionError("calibration needs a non-empty seed");
  std::vector<std::vector<double>> seed_probs;
  for (const auto& e : seed) seed_probs.push_back(lf.predict_proba(e.doc));
  std::vector<std::vector<double>> cov_probs;
  if (seed.size() < small_seed && !unlabeled.empty()) {
    for (const auto& d : unlabeled) cov_probs.push_back(lf.predict_proba(d));
  } else {
    cov_probs = seed_probs;
  }
  auto curve = calibrate_from_probs(seed_probs, golds_of(seed), cov_probs, beta, grid_step);
  lf.omega = curve.best_omega;
  return curve;
}

std::vector<std::size_t> draw_subsample(std::span<const ClassIndex> gold, std::size_t size,
                                        std::uint64_t rng_seed) {
  const std::size_t n = gold.size();
  if (size < 1 || size > n) {
    throw PreconditionError("subsample size must be in [1, " + std::to_string(n) + "]");
  }
  auto distinct = [&](const std::vector<std::size_t>& idx) {
    std::set<ClassIndex> cls;
    for (auto i : idx) cls.insert(gold[i]);
    return cls.size();
  };
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  if (size == n) {
    if (distinct(all) < 2) throw DegenerateSubsample("seed contains a single class");
    return all;
  }
  Rng rng = make_rng(rng_seed);
  for (int attempt = 0; attempt < 10; ++attempt) {
    auto order = all;
    shuffle(order, rng);
    order.resize(size);
    if (distinct(order) >= 2) {
      std::sort(order.begin(), order.end());
      return order;
    }
  }
  throw DegenerateSubsample("no two-class subsample of size " + std::to_string(size) +
                            " in 10 draws");
}

namespace {

LinearClassifier fit_linear(std::span<const LabeledExample> seed,
                            std::span<const SparseVec> seed_features, std::size_t num_classes,
                            const std::vector<std::size_t>& idx, const LogisticConfig& hyper) {
  std::vector<SparseVec> x;
  std::vector<ClassIndex> y;
  for (auto i : idx) {
    x.push_back(seed_features[i]);
    y.push_back(seed[i].gold);
  }
  return train_logistic(x, y, num_classes, hyper);
}

std::size_t infer_num_classes(std::span<const LabeledExample> seed) {
  ClassIndex mx = 0;
  for (const auto& e : seed) mx = std::max(mx, e.gold);
  return std::max<std::size_t>(2, static_cast<std::size_t>(mx) + 1);
}

}  // namespace

LinearClassifier train_candidate(std::span<const LabeledExample> seed,
                                 const Featurizer& featurizer, std::size_t subsample_size,
                                 std::uint64_t rng_seed, const LogisticConfig& hyper) {
  const auto gold = golds_of(seed);
  const auto idx = draw_subsample(gold, subsample_size, rng_seed);
  std::vector<SparseVec> feats;
  for (const auto& e : seed) feats.push_back(featurizer.featurize(e.doc));
  auto clf = fit_linear(seed, feats, infer_num_classes(seed), idx, hyper);
  clf.trained_on = idx;
  clf.rng_seed = rng_seed;
  return clf;
}

ProbClassifier train_candidate_head(std::span<const LabeledExample> seed,
                                    std::span<const SparseVec> seed_features,
                                    std::size_t num_classes, std::size_t subsample_size,
                                    std::uint64_t rng_seed, const CandidateHyper& hyper) {
  const auto idx = draw_subsample(golds_of(seed), subsample_size, rng_seed);
  if (hyper.hidden == 0) {
    auto clf = fit_linear(seed, seed_features, num_classes, idx, hyper.logistic);
    clf.trained_on = idx;
    clf.rng_seed = rng_seed;
    return clf;
  }
  std::vector<SparseVec> x;
  std::vector<ClassIndex> y;
  for (auto i : idx) {
    x.push_back(seed_features[i]);
    y.push_back(seed[i].gold);
  }
  MlpTrainConfig cfg;
  cfg.hidden = hyper.hidden;
  cfg.epochs = hyper.logistic.epochs;
  cfg.batch_size = x.size();
  cfg.learning_rate = hyper.logistic.learning_rate;
  cfg.seed = rng_seed;
  return train_mlp_hard(x, y, num_classes, cfg);
}

FeatureSpace::FeatureSpace(const Dataset& dataset,
                           std::shared_ptr<const EmbeddingProvider> embedding,
                           Tokenizer tokenizer)
    : dataset_(dataset),
      tokenizer_(tokenizer),
      seed_docs_(documents_of(dataset.seed)),
      embedding_(std::make_shared<EmbeddingFeaturizer>(std::move(embedding))),
      seed_cache_(seed_docs_),
      unlabeled_cache_(dataset.unlabeled) {}

std::shared_ptr<const TfidfFeaturizer> FeatureSpace::tfidf(NgramRange range) {
  const auto key = std::make_pair(range.min_n, range.max_n);
  auto it = tfidf_.find(key);
  if (it == tfidf_.end()) {
    auto model = std::make_shared<TfidfModel>(
        fit_tfidf(dataset_.unlabeled, tokenizer_, range));
    it = tfidf_.emplace(key, std::make_shared<TfidfFeaturizer>(std::move(model))).first;
  }
  return it->second;
}

SynthesisResult synthesize_candidates(Category category, FeatureSpace& space, int m,
                                      const SynthesisConfig& config, std::uint64_t base_seed,
                                      const std::string& id_prefix) {
  if (m < 1) throw PreconditionError("candidate count must be >= 1");
  if (category == Category::Surface) {
    throw PreconditionError("surface LFs come from an LfProvider, not classifier synthesis");
  }
  const Dataset& ds = space.dataset();
  const std::size_t num_classes = ds.labels.size();
  const std::size_t n_seed = ds.seed.size();
  const std::size_t sub = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(config.subsample_fraction * static_cast<double>(n_seed))),
      1, n_seed);
  const bool cover_on_unlabeled = n_seed < config.small_seed;
  const auto seed_gold = golds_of(ds.seed);

  SynthesisResult result;
  for (int k = 1; k <= m; ++k) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(k);
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "-k%02d", k);
    const std::string id = id_prefix + suffix;
    const auto ki = static_cast<std::size_t>(k - 1);

    std::shared_ptr<const Featurizer> featurizer;
    CandidateHyper hyper;
    hyper.logistic = config.logistic;
    if (!config.l2_values.empty()) {
      hyper.logistic.l2 = config.l2_values[ki % config.l2_values.size()];
    }
    if (category == Category::Structural) {
      const auto& ranges = config.ngram_ranges;
      const NgramRange range = ranges.empty() ? NgramRange{} : ranges[ki % ranges.size()];
      try {
        featurizer = space.tfidf(range);
      } catch (const EmptyVocabulary& e) {
        result.skipped.push_back({id, e.what()});
        continue;
      }
    } else {
      featurizer = space.embedding();
      if (!config.head_widths.empty()) {
        hyper.hidden = config.head_widths[ki % config.head_widths.size()];
      }
    }

    const auto& seed_x = space.seed_cache().get(*featurizer);
    ProbClassifier clf;
    try {
      clf = train_candidate_head(ds.seed, seed_x, num_classes, sub, seed, hyper);
    } catch (const DegenerateSubsample& e) {
      result.skipped.push_back({id, e.what()});
      continue;
    }

    CalibratedClassifierLF lf_rule{std::move(clf), featurizer, 0.0};
    std::vector<std::vector<double>> seed_probs;
    for (const auto& x : seed_x) seed_probs.push_back(predict_proba(lf_rule.classifier, x));
    std::vector<std::vector<double>> unl_probs;
    for (const auto& x : space.unlabeled_cache().get(*featurizer)) {
      unl_probs.push_back(predict_proba(lf_rule.classifier, x));
    }
    auto curve = calibrate_from_probs(seed_probs, seed_gold,
                                      cover_on_unlabeled ? unl_probs : seed_probs, config.beta,
                                      config.grid_step);
    lf_rule.omega = config.abstain_enabled ? curve.best_omega : 0.0;

    std::vector<WeakLabel> seed_votes, unl_votes;
    for (const auto& p : seed_probs) seed_votes.push_back(threshold_vote(p, lf_rule.omega));
    for (const auto& p : unl_probs) unl_votes.push_back(threshold_vote(p, lf_rule.omega));

    LabelFunction lf(id, category, std::move(lf_rule));
    lf.est_accuracy = accuracy_of_votes(seed_votes, seed_gold);
    lf.est_coverage = coverage_of_votes(unl_votes);
    result.lfs.push_back(std::move(lf));
    result.curves.push_back(std::move(curve));
  }
  return result;
}

}  // namespace autolf
