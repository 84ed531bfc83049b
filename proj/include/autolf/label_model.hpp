#pragma once

#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "autolf/corpus.hpp"
#include "autolf/label_function.hpp"

namespace autolf {

struct ProbabilisticLabel {
  std::vector<double> dist;
  bool covered = false;
};

struct MajorityVote {};
struct WeightedMajorityVote {
  // One weight per LF column; empty means "use est_accuracy" (resolved by the
  // caller that owns the LFs, see weights_from_accuracy).
  std::vector<double> weights;
};
struct DawidSkene {
  int max_iter = 100;
  double tol = 1e-6;
};
using LabelModelKind = std::variant<MajorityVote, WeightedMajorityVote, DawidSkene>;

std::vector<double> weights_from_accuracy(std::span<const LabelFunction> lfs);

struct DawidSkeneModel {
  std::vector<double> class_priors;
  // confusion[j][true * C + observed]; each true-class row sums to 1.
  std::vector<std::vector<double>> confusion;
  std::size_t num_classes = 0;
  int iterations_run = 0;
  bool converged = false;
  // Objective after every M-step: observed-data log-likelihood, and the same
  // plus the log-density of the smoothing prior (what MAP-EM maximizes).
  std::vector<double> log_likelihood;
  std::vector<double> log_posterior;

  double confusion_at(std::size_t lf, std::size_t truth, std::size_t observed) const {
    return confusion[lf][truth * num_classes + observed];
  }
  // Posterior over classes for one row; prior alone for an all-abstain row.
  std::vector<double> posterior(std::span<const WeakLabel> row) const;
};

inline constexpr double kDawidSkeneSmoothing = 1e-6;

// EM from majority-vote posteriors; abstentions are missing data. Throws
// NoSignal when the matrix holds no votes.
DawidSkeneModel fit_dawid_skene(const LabelMatrix& matrix, std::size_t num_classes,
                                int max_iter = 100, double tol = 1e-6);

double dawid_skene_log_likelihood(const DawidSkeneModel& model, const LabelMatrix& matrix);

// All-abstain rows are uniform with covered = false.
std::vector<ProbabilisticLabel> aggregate(const LabelMatrix& matrix, const LabelModelKind& kind,
                                          const LabelSpace& labels);

struct HardLabel {
  ClassIndex cls = 0;
  bool covered = false;
};

// argmax, ties to the smallest class index.
std::vector<HardLabel> hard_labels(std::span<const ProbabilisticLabel> probs);
ClassIndex argmax(std::span<const double> dist);

// JSONL: {"doc_id", "dist", "covered", "hard"}.
void write_labels_jsonl(const std::filesystem::path& path,
                        std::span<const std::string> doc_ids,
                        std::span<const ProbabilisticLabel> probs, const LabelSpace& labels);

struct LabelRecord {
  std::string doc_id;
  ProbabilisticLabel label;
};
std::vector<LabelRecord> read_labels_jsonl(const std::filesystem::path& path);

}  // namespace autolf
