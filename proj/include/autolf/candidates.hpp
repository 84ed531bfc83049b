#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "autolf/corpus.hpp"
#include "autolf/features.hpp"
#include "autolf/label_function.hpp"
#include "autolf/linear.hpp"

namespace autolf {

// (1 + b^2) p c / (b^2 p + c); 0 when the denominator vanishes.
double whm(double precision, double coverage, double beta);

struct CalibrationPoint {
  double omega = 0.0;
  double precision = 0.0;
  double coverage = 0.0;
  double whm = 0.0;
};

struct CalibrationCurve {
  std::vector<CalibrationPoint> grid;
  double best_omega = 0.0;
  double beta = 0.0;

  void write_csv(const std::filesystem::path& path) const;
};

// {0, step, 2 step, ..., 1}. When 1/step is an integer n the points are k/n,
// so 0.6 on a 0.01 grid is the double nearest 0.6.
std::vector<double> omega_grid(double grid_step);

// Evaluates precision on the seed predictions and coverage on
// `coverage_probs` at every grid point. best_omega is the smallest omega
// attaining the maximum WHM.
CalibrationCurve calibrate_from_probs(std::span<const std::vector<double>> seed_probs,
                                      std::span<const ClassIndex> seed_gold,
                                      std::span<const std::vector<double>> coverage_probs,
                                      double beta, double grid_step);

// Coverage is measured on `unlabeled` when the seed has fewer than
// `small_seed` examples, otherwise on the seed. Sets lf.omega to best_omega.
CalibrationCurve calibrate_threshold(CalibratedClassifierLF& lf,
                                     std::span<const LabeledExample> seed,
                                     std::span<const Document> unlabeled, double beta,
                                     double grid_step, std::size_t small_seed = 50);

// Without-replacement draw of `size` seed indices containing at least two
// classes; retried up to 10 times. size == N_l returns 0..N_l-1 in order.
std::vector<std::size_t> draw_subsample(std::span<const ClassIndex> gold, std::size_t size,
                                        std::uint64_t rng_seed);

struct CandidateHyper {
  LogisticConfig logistic;
  // 0 selects the logistic head; > 0 adds one ReLU layer of this width.
  std::size_t hidden = 0;
};

LinearClassifier train_candidate(std::span<const LabeledExample> seed,
                                 const Featurizer& featurizer, std::size_t subsample_size,
                                 std::uint64_t rng_seed, const LogisticConfig& hyper);

ProbClassifier train_candidate_head(std::span<const LabeledExample> seed,
                                    std::span<const SparseVec> seed_features,
                                    std::size_t num_classes, std::size_t subsample_size,
                                    std::uint64_t rng_seed, const CandidateHyper& hyper);

struct SynthesisConfig {
  double beta = 0.1;
  double grid_step = 0.01;
  double subsample_fraction = 0.8;
  std::size_t small_seed = 50;
  bool abstain_enabled = true;
  LogisticConfig logistic;
  std::vector<NgramRange> ngram_ranges{{1, 2}, {1, 1}, {2, 2}};
  std::vector<double> l2_values{1e-3, 1e-2};
  std::vector<std::size_t> head_widths{0};
  std::size_t embedding_dim = 256;
};

// Featurizers and cached feature vectors shared by every candidate of a run.
class FeatureSpace {
 public:
  FeatureSpace(const Dataset& dataset, std::shared_ptr<const EmbeddingProvider> embedding,
               Tokenizer tokenizer = {});

  const Dataset& dataset() const { return dataset_; }
  std::shared_ptr<const TfidfFeaturizer> tfidf(NgramRange range);
  std::shared_ptr<const EmbeddingFeaturizer> embedding() const { return embedding_; }
  FeatureCache& seed_cache() { return seed_cache_; }
  FeatureCache& unlabeled_cache() { return unlabeled_cache_; }
  std::span<const Document> seed_docs() const { return seed_docs_; }

 private:
  const Dataset& dataset_;
  Tokenizer tokenizer_;
  std::vector<Document> seed_docs_;
  std::map<std::pair<int, int>, std::shared_ptr<const TfidfFeaturizer>> tfidf_;
  std::shared_ptr<const EmbeddingFeaturizer> embedding_;
  FeatureCache seed_cache_;
  FeatureCache unlabeled_cache_;
};

struct SkipReport {
  std::string candidate_id;
  std::string reason;
};

struct SynthesisResult {
  std::vector<LabelFunction> lfs;
  std::vector<CalibrationCurve> curves;  // parallel to lfs
  std::vector<SkipReport> skipped;
};

// m candidates with seeds base_seed + 1 .. base_seed + m, ids
// "<id_prefix>-k01" ... Variations are taken round-robin from the config
// lists. Candidates whose subsample degenerates are skipped and reported.
SynthesisResult synthesize_candidates(Category category, FeatureSpace& space, int m,
                                      const SynthesisConfig& config, std::uint64_t base_seed,
                                      const std::string& id_prefix);

}  // namespace autolf
