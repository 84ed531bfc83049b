#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "autolf/candidates.hpp"
#include "autolf/corpus.hpp"
#include "autolf/label_function.hpp"
#include "json.hpp"

namespace autolf {

struct Removal {
  std::string lf_id;
  double accuracy = 0.0;
};

struct IntraFilterResult {
  std::vector<LabelFunction> kept;
  std::vector<LabelFunction> removed;
  double theta = 0.0;
};

// theta = alpha * max accuracy; keeps LFs with est_accuracy >= theta.
IntraFilterResult intra_filter(std::vector<LabelFunction> pool, double alpha);

using CategoryPools = std::map<Category, std::vector<LabelFunction>>;

struct InterFilterResult {
  CategoryPools kept;
  std::vector<LabelFunction> removed;
  double theta_inter = 0.0;
};

// theta_inter = max(thetas) / 2; drops every LF below it in any category.
InterFilterResult inter_filter(CategoryPools pools, const std::map<Category, double>& thetas);

// Fraction of positions where both LFs vote the same class, over positions
// where at least one votes. 0 when neither ever votes.
double agreement_rate(std::span<const WeakLabel> a, std::span<const WeakLabel> b);

struct DuplicateRecord {
  std::string lf_id;
  std::string similar_to;
  double similarity = 0.0;
};

struct DedupResult {
  std::vector<LabelFunction> novel;
  std::vector<DuplicateRecord> dropped;
};

// Surface candidates are compared by pattern Jaccard, classifier candidates by
// output agreement on `sample`. A candidate is dropped when its similarity to
// any accepted LF (or an earlier novel candidate) reaches tau.
DedupResult deduplicate(std::vector<LabelFunction> candidates,
                        std::span<const LabelFunction> existing, double tau,
                        FeatureCache& sample);

struct CoverageHint {
  double uncovered_fraction = 0.0;
  // max(0, seed prior - share of covered rows whose majority vote is c)
  std::vector<double> class_gap;
  // Classes with a gap above 0.01, largest first.
  std::vector<ClassIndex> gap_classes;
};

struct CandidateBatch {
  std::vector<LabelFunction> lfs;
  std::vector<SkipReport> skipped;
};

// Produces fresh candidates for one category. `round` starts at 1.
using CandidateGenerator =
    std::function<CandidateBatch(int round, int count, const CoverageHint& hint)>;

struct ExploitationConfig {
  double alpha = 0.9;
  std::map<Category, int> k_per_category{
      {Category::Surface, 20}, {Category::Structural, 20}, {Category::Semantic, 20}};
  int candidates_per_round = 8;
  int max_rounds = 10;
  std::map<Category, double> tau{
      {Category::Surface, 0.9}, {Category::Structural, 0.98}, {Category::Semantic, 0.98}};
  std::size_t agreement_sample = 500;
  std::uint64_t sample_seed = 17;
};

struct FilterReport {
  int round = 0;
  std::map<Category, int> generated;
  std::map<Category, double> theta_intra;
  double theta_inter = 0.0;
  std::vector<Removal> removed_intra;
  std::vector<Removal> removed_inter;
  std::vector<DuplicateRecord> removed_duplicate;
  std::vector<Removal> removed_truncation;
  std::map<Category, int> pool_size;

  nlohmann::json to_json() const;
};

struct LfPool {
  CategoryPools by_category;
  int round = 0;
  std::vector<SkipReport> skip_reports;
  // Categories still below K_c when the loop stopped, with their size.
  std::map<Category, int> shortfall;
  bool hit_round_limit = false;

  std::vector<LabelFunction> flatten() const;
};

struct ExploitationResult {
  LfPool pool;
  std::vector<FilterReport> reports;
};

CoverageHint coverage_hint(std::span<const std::vector<WeakLabel>> votes_by_lf,
                           std::size_t num_docs, std::span<const double> class_prior);

// Generation/filter rounds until every category with a generator holds K_c
// LFs or max_rounds is reached. Accuracy and coverage of new candidates are
// (re)estimated on the seed and the unlabeled split. The caches, when
// given, must be built over dataset.seed documents and dataset.unlabeled.
ExploitationResult run_exploitation_loop(const Dataset& dataset,
                                         const ExploitationConfig& config,
                                         const std::map<Category, CandidateGenerator>& generators,
                                         FeatureCache* seed_cache = nullptr,
                                         FeatureCache* unlabeled_cache = nullptr);

}  // namespace autolf
