#include "autolf/label_function.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "autolf/errors.hpp"

namespace autolf {

using nlohmann::json;

std::vector<double> predict_proba(const ProbClassifier& clf, const SparseVec& x) {
  return std::visit([&](const auto& c) { return c.predict_proba(x); }, clf);
}

WeakLabel threshold_vote(std::span<const double> probs, double omega) {
  const auto it = std::max_element(probs.begin(), probs.end());
  if (!(*it > omega)) return WeakLabel::abstain();
  return WeakLabel::of(static_cast<ClassIndex>(it - probs.begin()));
}

std::vector<double> CalibratedClassifierLF::predict_proba(const Document& doc) const {
  return autolf::predict_proba(classifier, featurizer->featurize(doc));
}

WeakLabel CalibratedClassifierLF::vote(const SparseVec& features) const {
  return threshold_vote(autolf::predict_proba(classifier, features), omega);
}

LabelFunction::LabelFunction(std::string id, Category category, Rule rule)
    : id_(std::move(id)), category_(category), rule_(std::move(rule)) {
  if (std::holds_alternative<CalibratedClassifierLF>(rule_) &&
      !std::get<CalibratedClassifierLF>(rule_).featurizer) {
    throw PreconditionError("classifier LF " + id_ + " has no featurizer");
  }
}

const Featurizer* LabelFunction::featurizer() const {
  if (is_surface()) return nullptr;
  return classifier().featurizer.get();
}

double LabelFunction::threshold() const { return is_surface() ? 0.0 : classifier().omega; }

void LabelFunction::set_threshold(double omega) {
  if (auto* c = std::get_if<CalibratedClassifierLF>(&rule_)) c->omega = omega;
}

WeakLabel apply_lf(const LabelFunction& lf, const Document& doc) {
  if (lf.is_surface()) return eval_surface(lf.surface(), doc);
  const auto& c = lf.classifier();
  return c.vote(c.featurizer->featurize(doc));
}

const std::vector<SparseVec>& FeatureCache::get(const Featurizer& featurizer) {
  auto it = cache_.find(&featurizer);
  if (it == cache_.end()) {
    it = cache_.emplace(&featurizer, featurize_all(featurizer, docs_)).first;
  }
  return it->second;
}

std::vector<WeakLabel> apply_lf_all(const LabelFunction& lf, FeatureCache& cache) {
  std::vector<WeakLabel> out;
  out.reserve(cache.docs().size());
  if (lf.is_surface()) {
    for (const auto& d : cache.docs()) out.push_back(eval_surface(lf.surface(), d));
    return out;
  }
  const auto& c = lf.classifier();
  for (const auto& x : cache.get(*c.featurizer)) out.push_back(c.vote(x));
  return out;
}

LabelMatrix::LabelMatrix(std::vector<std::string> row_ids, std::vector<std::string> col_ids)
    : row_ids_(std::move(row_ids)), col_ids_(std::move(col_ids)),
      entries_(row_ids_.size() * col_ids_.size()) {}

void LabelMatrix::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "doc_id";
  for (const auto& c : col_ids_) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < rows(); ++i) {
    out << row_ids_[i];
    for (std::size_t j = 0; j < cols(); ++j) out << ',' << at(i, j).value;
    out << '\n';
  }
}

LabelMatrix LabelMatrix::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    return f;
  };
  std::string line;
  std::getline(in, line);
  auto header = split(line);
  if (header.empty() || header[0] != "doc_id") {
    throw MalformedRecord(1, "label matrix header must start with doc_id");
  }
  std::vector<std::string> cols(header.begin() + 1, header.end());
  std::vector<std::string> rows;
  std::vector<std::vector<int>> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split(line);
    if (f.size() != cols.size() + 1) throw MalformedRecord(line_no, "wrong cell count");
    rows.push_back(f[0]);
    std::vector<int> r;
    for (std::size_t j = 1; j < f.size(); ++j) r.push_back(std::stoi(f[j]));
    cells.push_back(std::move(r));
  }
  LabelMatrix m(std::move(rows), std::move(cols));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = 0; j < cells[i].size(); ++j) m.set(i, j, WeakLabel{cells[i][j]});
  }
  return m;
}

LabelMatrix build_label_matrix(std::span<const LabelFunction> lfs,
                               std::span<const Document> docs) {
  if (lfs.empty()) throw EmptyLfSet("cannot build a label matrix without LFs");
  std::vector<std::string> row_ids, col_ids;
  for (const auto& d : docs) row_ids.push_back(d.id);
  for (const auto& lf : lfs) col_ids.push_back(lf.id());
  LabelMatrix m(std::move(row_ids), std::move(col_ids));
  FeatureCache cache(docs);
  for (std::size_t j = 0; j < lfs.size(); ++j) {
    const auto votes = apply_lf_all(lfs[j], cache);
    for (std::size_t i = 0; i < docs.size(); ++i) m.set(i, j, votes[i]);
  }
  return m;
}

double accuracy_of_votes(std::span<const WeakLabel> votes, std::span<const ClassIndex> gold) {
  if (votes.size() != gold.size()) throw LengthMismatch("votes and gold differ in length");
  double correct = 0.0, covered = 0.0;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (votes[i].is_abstain()) continue;
    covered += 1.0;
    if (votes[i].value == gold[i]) correct += 1.0;
  }
  return correct / (covered + kAccuracyEpsilon);
}

double coverage_of_votes(std::span<const WeakLabel> votes) {
  if (votes.empty()) return 0.0;
  const auto n = std::count_if(votes.begin(), votes.end(),
                               [](WeakLabel v) { return !v.is_abstain(); });
  return static_cast<double>(n) / static_cast<double>(votes.size());
}

std::vector<Document> documents_of(std::span<const LabeledExample> examples) {
  std::vector<Document> docs;
  docs.reserve(examples.size());
  for (const auto& e : examples) docs.push_back(e.doc);
  return docs;
}

std::vector<ClassIndex> golds_of(std::span<const LabeledExample> examples) {
  std::vector<ClassIndex> g;
  g.reserve(examples.size());
  for (const auto& e : examples) g.push_back(e.gold);
  return g;
}

double estimate_accuracy(const LabelFunction& lf, std::span<const LabeledExample> seed) {
  if (seed.empty()) throw PreconditionError("estimate_accuracy needs a non-empty seed");
  std::vector<WeakLabel> votes;
  for (const auto& e : seed) votes.push_back(apply_lf(lf, e.doc));
  return accuracy_of_votes(votes, golds_of(seed));
}

double estimate_coverage(const LabelFunction& lf, std::span<const Document> docs) {
  if (docs.empty()) throw PreconditionError("estimate_coverage needs documents");
  std::vector<WeakLabel> votes;
  for (const auto& d : docs) votes.push_back(apply_lf(lf, d));
  return coverage_of_votes(votes);
}

nlohmann::json lf_to_json(const LabelFunction& lf, const LabelSpace& labels) {
  json j = {{"id", lf.id()},
            {"category", to_string(lf.category())},
            {"threshold", lf.threshold()},
            {"est_accuracy", lf.est_accuracy},
            {"est_coverage", lf.est_coverage}};
  if (lf.is_surface()) {
    j["rule"] = surface_rule_to_json(lf.id(), lf.surface(), labels);
  } else {
    const auto& c = lf.classifier();
    j["featurizer"] = c.featurizer->describe();
    j["classifier"] = std::visit(
        [](const auto& clf) {
          json k = clf.to_json();
          k["kind"] = std::is_same_v<std::decay_t<decltype(clf)>, LinearClassifier> ? "linear"
                                                                                    : "mlp";
          return k;
        },
        c.classifier);
  }
  return j;
}

}  // namespace autolf
