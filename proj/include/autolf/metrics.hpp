#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "autolf/corpus.hpp"
#include "autolf/label_function.hpp"
#include "autolf/label_model.hpp"
#include "json.hpp"

namespace autolf {

struct EvalReport {
  double coverage = 0.0;
  std::vector<double> per_class_f1;
  double weighted_f1 = 0.0;
  double label_quality = 0.0;
  std::vector<std::vector<long>> confusion;  // [gold][pred]
  std::size_t n_evaluated = 0;

  nlohmann::json to_json() const;
};

// Fraction of rows with at least one non-abstain vote.
double coverage(const LabelMatrix& matrix);

struct F1Result {
  std::vector<double> per_class;
  double weighted = 0.0;
  std::vector<std::vector<long>> confusion;
};

// Per-class F1 from confusion counts (0 when P + R = 0), weighted by gold
// class frequency. Throws LengthMismatch or PreconditionError on bad input.
F1Result weighted_f1(std::span<const ClassIndex> pred, std::span<const ClassIndex> gold,
                     std::size_t num_classes);

inline double label_quality(double coverage, double weighted) { return coverage * weighted; }

// Weighted F1 of hard labels over covered rows, coverage of the whole set.
// Rows are matched to gold by doc id; every row needs a gold label.
EvalReport evaluate_labeling(std::span<const std::string> row_ids,
                             std::span<const ProbabilisticLabel> probs,
                             std::span<const LabeledExample> gold, std::size_t num_classes);

EvalReport evaluate_labeling(const LabelMatrix& matrix, std::span<const ProbabilisticLabel> probs,
                             std::span<const LabeledExample> gold, std::size_t num_classes);

struct LedgerRow {
  std::string timestamp;
  std::string dataset;
  double coverage = 0.0;
  double weighted_f1 = 0.0;
  double label_quality = 0.0;
  double e2e_f1 = 0.0;
  std::string config_hash;

  friend bool operator==(const LedgerRow&, const LedgerRow&) = default;
};

// Appends one CSV row, writing the header when the file is new.
void append_ledger_row(const std::filesystem::path& path, const LedgerRow& row);
std::vector<LedgerRow> read_ledger(const std::filesystem::path& path);

}  // namespace autolf
