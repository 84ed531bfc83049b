#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "autolf/corpus.hpp"
#include "autolf/features.hpp"
#include "autolf/linear.hpp"
#include "autolf/mlp.hpp"
#include "autolf/surface.hpp"
#include "autolf/types.hpp"
#include "json.hpp"

namespace autolf {

inline constexpr double kAccuracyEpsilon = 1e-9;

using ProbClassifier = std::variant<LinearClassifier, MlpClassifier>;

std::vector<double> predict_proba(const ProbClassifier& clf, const SparseVec& x);

// Votes argmax p(y|x) when max p(y|x) > omega, otherwise abstains. Ties on
// the max go to the smallest class index.
WeakLabel threshold_vote(std::span<const double> probs, double omega);

// A probabilistic classifier turned into a label function by a confidence
// threshold.
struct CalibratedClassifierLF {
  ProbClassifier classifier;
  std::shared_ptr<const Featurizer> featurizer;
  double omega = 0.0;

  std::vector<double> predict_proba(const Document& doc) const;
  WeakLabel vote(const SparseVec& features) const;
};

class LabelFunction {
 public:
  using Rule = std::variant<SurfaceRule, CalibratedClassifierLF>;

  LabelFunction(std::string id, Category category, Rule rule);

  const std::string& id() const { return id_; }
  Category category() const { return category_; }
  const Rule& rule() const { return rule_; }
  bool is_surface() const { return std::holds_alternative<SurfaceRule>(rule_); }
  const SurfaceRule& surface() const { return std::get<SurfaceRule>(rule_); }
  const CalibratedClassifierLF& classifier() const {
    return std::get<CalibratedClassifierLF>(rule_);
  }
  // Null for surface rules.
  const Featurizer* featurizer() const;

  // omega for classifier LFs; 0 for surface rules.
  double threshold() const;
  void set_threshold(double omega);

  double est_accuracy = 0.0;
  double est_coverage = 0.0;

 private:
  std::string id_;
  Category category_;
  Rule rule_;
};

WeakLabel apply_lf(const LabelFunction& lf, const Document& doc);

// Features of a fixed document list, computed once per featurizer.
class FeatureCache {
 public:
  explicit FeatureCache(std::span<const Document> docs) : docs_(docs) {}
  const std::vector<SparseVec>& get(const Featurizer& featurizer);
  std::span<const Document> docs() const { return docs_; }

 private:
  std::span<const Document> docs_;
  std::map<const Featurizer*, std::vector<SparseVec>> cache_;
};

// apply_lf over every cached document.
std::vector<WeakLabel> apply_lf_all(const LabelFunction& lf, FeatureCache& cache);

class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::vector<std::string> row_ids, std::vector<std::string> col_ids);

  std::size_t rows() const { return row_ids_.size(); }
  std::size_t cols() const { return col_ids_.size(); }
  WeakLabel at(std::size_t i, std::size_t j) const { return entries_[i * cols() + j]; }
  void set(std::size_t i, std::size_t j, WeakLabel v) { entries_[i * cols() + j] = v; }
  std::span<const WeakLabel> row(std::size_t i) const {
    return {entries_.data() + i * cols(), cols()};
  }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<std::string>& col_ids() const { return col_ids_; }

  // Header "doc_id,<lf ids>", then one row per document; -1 marks abstain.
  void write_csv(const std::filesystem::path& path) const;
  static LabelMatrix read_csv(const std::filesystem::path& path);

  friend bool operator==(const LabelMatrix&, const LabelMatrix&) = default;

 private:
  std::vector<std::string> row_ids_;
  std::vector<std::string> col_ids_;
  std::vector<WeakLabel> entries_;
};

// Throws EmptyLfSet when lfs is empty.
LabelMatrix build_label_matrix(std::span<const LabelFunction> lfs,
                               std::span<const Document> docs);

// Precision over covered seed examples: correct / (non-abstained + 1e-9).
double estimate_accuracy(const LabelFunction& lf, std::span<const LabeledExample> seed);
double estimate_coverage(const LabelFunction& lf, std::span<const Document> docs);

double accuracy_of_votes(std::span<const WeakLabel> votes, std::span<const ClassIndex> gold);
double coverage_of_votes(std::span<const WeakLabel> votes);

std::vector<Document> documents_of(std::span<const LabeledExample> examples);
std::vector<ClassIndex> golds_of(std::span<const LabeledExample> examples);

nlohmann::json lf_to_json(const LabelFunction& lf, const LabelSpace& labels);

}  // namespace autolf
