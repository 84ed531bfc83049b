#include "autolf/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "autolf/corpus.hpp"
#include "autolf/errors.hpp"

namespace autolf {

using nlohmann::json;

json EvalReport::to_json() const {
  return {{"coverage", coverage},
          {"per_class_f1", per_class_f1},
          {"weighted_f1", weighted_f1},
          {"label_quality", label_quality},
          {"confusion", confusion},
          {"n_evaluated", n_evaluated},
          {"f1_rows", "covered_only"}};
}

double coverage(const LabelMatrix& matrix) {
  if (matrix.rows() == 0) throw PreconditionError("coverage of an empty matrix");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    const auto row = matrix.row(i);
    if (std::any_of(row.begin(), row.end(), [](WeakLabel v) { return !v.is_abstain(); })) {
      ++covered;
    }
  }
  return static_cast<double>(covered) / static_cast<double>(matrix.rows());
}

F1Result weighted_f1(std::span<const ClassIndex> pred, std::span<const ClassIndex> gold,
                     std::size_t num_classes) {
  if (pred.size() != gold.size()) throw LengthMismatch("pred and gold differ in length");
  if (pred.empty()) throw PreconditionError("weighted_f1 needs at least one item");
  const std::size_t C = num_classes;
  F1Result r;
  r.confusion.assign(C, std::vector<long>(C, 0));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || gold[i] < 0 || static_cast<std::size_t>(pred[i]) >= C ||
        static_cast<std::size_t>(gold[i]) >= C) {
      throw PreconditionError("class index outside [0, C)");
    }
    ++r.confusion[static_cast<std::size_t>(gold[i])][static_cast<std::size_t>(pred[i])];
  }
  r.per_class.assign(C, 0.0);
  const double n = static_cast<double>(pred.size());
  for (std::size_t c = 0; c < C; ++c) {
    long tp = r.confusion[c][c], gold_c = 0, pred_c = 0;
    for (std::size_t k = 0; k < C; ++k) {
      gold_c += r.confusion[c][k];
      pred_c += r.confusion[k][c];
    }
    const double p = pred_c ? static_cast<double>(tp) / static_cast<double>(pred_c) : 0.0;
    const double rec = gold_c ? static_cast<double>(tp) / static_cast<double>(gold_c) : 0.0;
    r.per_class[c] = (p + rec) > 0.0 ? 2.0 * p * rec / (p + rec) : 0.0;
    r.weighted += static_cast<double>(gold_c) / n * r.per_class[c];
  }
  return r;
}

EvalReport evaluate_labeling(std::span<const std::string> row_ids,
                             std::span<const ProbabilisticLabel> probs,
                             std::span<const LabeledExample> gold, std::size_t num_classes) {
  if (row_ids.size() != probs.size()) throw LengthMismatch("row ids and labels differ");
  if (row_ids.empty()) throw PreconditionError("nothing to evaluate");
  std::unordered_map<std::string, ClassIndex> gold_by_id;
  for (const auto& g : gold) gold_by_id.emplace(g.doc.id, g.gold);
  if (gold_by_id.size() != row_ids.size()) {
    throw IdAlignment("gold has " + std::to_string(gold_by_id.size()) + " ids, labels have " +
                      std::to_string(row_ids.size()));
  }
  std::vector<ClassIndex> p, g;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < row_ids.size(); ++i) {
    auto it = gold_by_id.find(row_ids[i]);
    if (it == gold_by_id.end()) throw IdAlignment("no gold label for " + row_ids[i]);
    if (!probs[i].covered) continue;
    ++covered;
    p.push_back(argmax(probs[i].dist));
    g.push_back(it->second);
  }
  EvalReport rep;
  rep.coverage = static_cast<double>(covered) / static_cast<double>(row_ids.size());
  rep.n_evaluated = covered;
  if (covered > 0) {
    auto f1 = weighted_f1(p, g, num_classes);
    rep.per_class_f1 = std::move(f1.per_class);
    rep.weighted_f1 = f1.weighted;
    rep.confusion = std::move(f1.confusion);
  } else {
    rep.per_class_f1.assign(num_classes, 0.0);
    rep.confusion.assign(num_classes, std::vector<long>(num_classes, 0));
  }
  rep.label_quality = label_quality(rep.coverage, rep.weighted_f1);
  return rep;
}

EvalReport evaluate_labeling(const LabelMatrix& matrix, std::span<const ProbabilisticLabel> probs,
                             std::span<const LabeledExample> gold, std::size_t num_classes) {
  auto rep = evaluate_labeling(matrix.row_ids(), probs, gold, num_classes);
  rep.coverage = coverage(matrix);
  rep.label_quality = label_quality(rep.coverage, rep.weighted_f1);
  return rep;
}

void append_ledger_row(const std::filesystem::path& path, const LedgerRow& row) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  if (fresh) out << "timestamp,dataset,coverage,weighted_f1,label_quality,e2e_f1,config_hash\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.10f,%.10f,%.10f,%.10f", row.coverage, row.weighted_f1,
                row.label_quality, row.e2e_f1);
  out << csv_escape(row.timestamp) << ',' << csv_escape(row.dataset) << ',' << buf << ','
      << csv_escape(row.config_hash) << '\n';
}

std::vector<LedgerRow> read_ledger(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<LedgerRow> rows;
  auto table = parse_csv_rows(in);
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& f = table[r];
    if (f.size() != 7) throw MalformedRecord(r + 1, "ledger row needs 7 fields");
    rows.push_back({f[0], f[1], std::stod(f[2]), std::stod(f[3]), std::stod(f[4]),
                    std::stod(f[5]), f[6]});
  }
  return rows;
}

}  // namespace autolf
