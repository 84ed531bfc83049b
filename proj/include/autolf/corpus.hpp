#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <istream>
#include <string>
#include <vector>

namespace autolf {

using ClassIndex = int;

// Ordered class names; index k maps to class_names()[k].
class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<std::string> class_names);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& class_names() const { return names_; }
  const std::string& name(ClassIndex k) const;
  std::optional<ClassIndex> index_of(const std::string& name) const;
  bool contains(ClassIndex k) const {
    return k >= 0 && static_cast<std::size_t>(k) < names_.size();
  }

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

 private:
  std::vector<std::string> names_;
};

struct Document {
  std::string id;
  std::string text;

  friend bool operator==(const Document&, const Document&) = default;
};

struct LabeledExample {
  Document doc;
  ClassIndex gold = 0;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

enum class Split { Unlabeled, Seed, Test };

// Splits are disjoint by document id. Unlabeled records may carry a gold
// label in the input file; it is kept in `unlabeled_gold` for evaluation and
// never reaches LF generation or training.
struct Dataset {
  LabelSpace labels;
  std::vector<Document> unlabeled;
  std::vector<LabeledExample> seed;
  std::vector<LabeledExample> test;
  std::vector<std::optional<ClassIndex>> unlabeled_gold;

  // Gold examples for the unlabeled split, only rows with a known label.
  std::vector<LabeledExample> unlabeled_with_gold() const;
  bool has_unlabeled_gold() const;
};

enum class DataFormat { Jsonl, Csv };

// Checks the cross-split invariants: N >= 1, N_l >= 1, disjoint ids, gold in
// range. Throws PreconditionError / DuplicateId / UnknownLabel.
void validate(const Dataset& dataset);

Dataset load_dataset(const std::filesystem::path& path, DataFormat format,
                     const LabelSpace& labels);

// Infers the format from the extension (.csv, otherwise JSONL).
Dataset load_dataset(const std::filesystem::path& path, const LabelSpace& labels);

// Distinct label names in the file, sorted. Used when no label space is given.
LabelSpace infer_label_space(const std::filesystem::path& path, DataFormat format);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path,
                  DataFormat format = DataFormat::Jsonl);

struct SeedSplit {
  std::vector<LabeledExample> seed;
  std::vector<LabeledExample> remainder;
};

// Deterministic sample of round-half-up(fraction * n) examples. With
// `stratified`, each class contributes round-half-up(fraction * n_c) (at least
// the total is still >= 1).
SeedSplit stratified_seed_sample(const std::vector<LabeledExample>& examples,
                                 double fraction, std::uint64_t rng_seed,
                                 bool stratified = false);

std::size_t round_half_up(double x);

// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_escape(const std::string& field);
std::vector<std::vector<std::string>> parse_csv_rows(std::istream& in);

}  // namespace autolf
