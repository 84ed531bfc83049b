#include "autolf/downstream.hpp"

#include <fstream>
#include <set>

#include "autolf/errors.hpp"
#include "json.hpp"

namespace autolf {

using nlohmann::json;

TrainingTargets make_training_targets(std::span<const ProbabilisticLabel> probs,
                                      std::span<const Document> docs,
                                      const Featurizer& featurizer,
                                      const DownstreamConfig& config) {
  if (probs.size() != docs.size()) throw LengthMismatch("labels and documents differ in length");
  TrainingTargets t;
  t.mode = config.mlp.mode;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!probs[i].covered && !config.include_uncovered) continue;
    t.rows.push_back({featurizer.featurize(docs[i]), probs[i].dist, probs[i].covered});
  }
  return t;
}

MlpClassifier train_downstream(std::span<const ProbabilisticLabel> probs,
                               std::span<const Document> docs, const Featurizer& featurizer,
                               const DownstreamConfig& config, std::vector<double>* epoch_loss) {
  std::set<ClassIndex> classes;
  for (const auto& p : probs) {
    if (p.covered) classes.insert(argmax(p.dist));
  }
  if (classes.size() < 2) {
    throw DegenerateTargets("covered hard labels span " + std::to_string(classes.size()) +
                            " class(es)");
  }
  const auto targets = make_training_targets(probs, docs, featurizer, config);
  std::vector<SparseVec> x;
  std::vector<std::vector<double>> y;
  x.reserve(targets.rows.size());
  y.reserve(targets.rows.size());
  for (const auto& r : targets.rows) {
    x.push_back(r.features);
    y.push_back(r.target);
  }
  return train_mlp(x, y, probs.front().dist.size(), config.mlp, epoch_loss);
}

EvalReport evaluate_e2e(const MlpClassifier& clf, std::span<const LabeledExample> test,
                        const Featurizer& featurizer) {
  if (test.empty()) throw PreconditionError("evaluate_e2e needs a non-empty test split");
  std::vector<ClassIndex> pred, gold;
  for (const auto& e : test) {
    pred.push_back(clf.predict(featurizer.featurize(e.doc)));
    gold.push_back(e.gold);
  }
  auto f1 = weighted_f1(pred, gold, clf.num_classes);
  EvalReport rep;
  rep.coverage = 1.0;
  rep.per_class_f1 = std::move(f1.per_class);
  rep.weighted_f1 = f1.weighted;
  rep.label_quality = f1.weighted;
  rep.confusion = std::move(f1.confusion);
  rep.n_evaluated = test.size();
  return rep;
}

void write_checkpoint(const std::filesystem::path& path, const MlpClassifier& clf,
                      const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  json j = clf.to_json();
  j["config_hash"] = config_hash;
  out << j.dump() << '\n';
}

MlpClassifier read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return MlpClassifier::from_json(json::parse(in));
}

void write_predictions_jsonl(const std::filesystem::path& path, const MlpClassifier& clf,
                             std::span<const LabeledExample> test, const Featurizer& featurizer,
                             const LabelSpace& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& e : test) {
    const auto p = clf.predict_proba(featurizer.featurize(e.doc));
    out << json{{"doc_id", e.doc.id},
                {"dist", p},
                {"pred", labels.name(argmax(p))},
                {"gold", labels.name(e.gold)}}
               .dump()
        << '\n';
  }
}

}  // namespace autolf
