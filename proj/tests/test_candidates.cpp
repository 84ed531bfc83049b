#include "doctest.h"

#include <cmath>

#include "autolf/candidates.hpp"
#include "autolf/errors.hpp"
#include "autolf/synth.hpp"
#include "support.hpp"

using namespace autolf;

namespace {
std::vector<std::vector<double>> probs_of(std::initializer_list<std::pair<double, int>> pts) {
  // Two-class distributions with max probability p on class c.
  std::vector<std::vector<double>> out;
  for (auto [p, c] : pts) out.push_back(c == 0 ? std::vector<double>{p, 1 - p} : std::vector<double>{1 - p, p});
  return out;
}

Dataset small_separable(std::uint64_t seed = 0) {
  SynthSpec s;
  s.n_unlabeled = 200;
  s.n_seed = 40;
  s.n_test = 20;
  s.seed = seed;
  return make_synthetic(s);
}
}  // namespace

TEST_CASE("softmax of zero logits is uniform") {
  LinearClassifier clf(3, 4);
  std::vector<double> x(4, 1.0);
  auto p = clf.predict_proba(std::span<const double>(x));
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("bias (10, 0) puts almost all mass on the first class") {
  LinearClassifier clf(2, 1);
  clf.bias = {10.0, 0.0};
  SparseVec x;
  x.dim = 1;
  auto p = clf.predict_proba(x);
  CHECK(p[0] > 0.9999);
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-10.0))).epsilon(1e-12));
  CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("wrong feature dimension is rejected") {
  LinearClassifier clf(2, 3);
  SparseVec x;
  x.dim = 4;
  CHECK_THROWS_AS(clf.predict_proba(x), DimensionMismatch);
  std::vector<double> d(2, 0.0);
  CHECK_THROWS_AS(clf.predict_proba(std::span<const double>(d)), DimensionMismatch);
}

TEST_CASE("softmax is stable for large logits") {
  std::vector<double> z{1000.0, 999.0};
  softmax_inplace(z);
  CHECK(z[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(std::isfinite(z[1]));
}

TEST_CASE("weighted harmonic mean") {
  CHECK(whm(0.8, 0.5, 1.0) == doctest::Approx(0.8 / 1.3).epsilon(1e-12));
  CHECK(whm(0.8, 0.5, 1.0) == doctest::Approx(0.61538).epsilon(1e-5));
  CHECK(whm(0.8, 0.5, 0.0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(whm(0.8, 0.5, 0.1) == doctest::Approx(1.01 * 0.4 / 0.508).epsilon(1e-12));
  CHECK(whm(0.8, 0.5, 0.1) == doctest::Approx(0.79528).epsilon(1e-5));
  CHECK(whm(0.0, 0.0, 0.1) == 0.0);
  CHECK(whm(0.8, 0.5, 0.1) == doctest::Approx(testing::oracle_whm(0.8, 0.5, 0.1)).epsilon(1e-12));
}

TEST_CASE("omega grid") {
  auto g = omega_grid(0.01);
  REQUIRE(g.size() == 101);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK(g[60] == 0.6);
  CHECK(omega_grid(0.3) == std::vector<double>{0.0, 0.3, 0.6, 0.8999999999999999, 1.0});
  CHECK_THROWS_AS(omega_grid(0.0), PreconditionError);
  CHECK_THROWS_AS(omega_grid(1.5), PreconditionError);
}

TEST_CASE("flat confident classifier calibrates to omega 0") {
  auto seed = probs_of({{0.9, 0}, {0.9, 1}, {0.9, 0}});
  std::vector<ClassIndex> gold{0, 1, 0};
  auto curve = calibrate_from_probs(seed, gold, seed, 0.1, 0.01);
  CHECK(curve.best_omega == 0.0);
  CHECK(curve.grid.size() == 101);
  for (const auto& pt : curve.grid) {
    if (pt.omega < 0.9) {
      CHECK(pt.precision == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(pt.coverage == 1.0);
    } else {
      CHECK(pt.coverage == 0.0);
    }
  }
}

TEST_CASE("raising omega past a wrong 0.6 prediction trades coverage for precision") {
  auto seed = probs_of({{0.6, 1}, {0.9, 0}});
  std::vector<ClassIndex> gold{0, 0};
  auto curve = calibrate_from_probs(seed, gold, seed, 0.1, 0.01);
  // The vote needs max p > omega, so omega = 0.6 already drops the wrong
  // point: the smallest maximizer is the grid point 0.6 itself.
  CHECK(curve.best_omega == 0.6);
  CHECK(curve.best_omega <= 0.9);
  CHECK(curve.grid[59].whm == doctest::Approx(whm(0.5 / (1 + 5e-10), 1.0, 0.1)).epsilon(1e-9));
  CHECK(curve.grid[59].whm == doctest::Approx(0.5025).epsilon(1e-3));
  CHECK(curve.grid[60].whm == doctest::Approx(0.990).epsilon(1e-3));
  CHECK(curve.grid[60].precision == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(curve.grid[60].coverage == 0.5);

  auto ref = testing::oracle_calibrate(seed, {0, 0}, seed, 0.1, 100);
  CHECK(ref.best_omega == curve.best_omega);
}

TEST_CASE("beta 0 maximizes precision alone with ties toward smaller omega") {
  auto seed = probs_of({{0.55, 1}, {0.7, 0}, {0.8, 0}, {0.95, 0}});
  std::vector<ClassIndex> gold{0, 0, 0, 0};
  auto curve = calibrate_from_probs(seed, gold, seed, 0.0, 0.01);
  CHECK(curve.best_omega == 0.55);
  for (const auto& pt : curve.grid) CHECK(pt.whm == doctest::Approx(pt.precision).epsilon(1e-12));
}

TEST_CASE("calibration measures coverage on the unlabeled split for small seeds") {
  auto feat = std::make_shared<testing::IndexFeaturizer>(
      std::vector<std::string>{"s0", "s1", "u0", "u1", "u2", "u3"});
  LinearClassifier clf(2, feat->dim());
  clf.w(0, 0) = 3.0;   // s0 confident, correct
  clf.w(0, 1) = 3.0;   // s1 confident, correct
  CalibratedClassifierLF lf{clf, feat, 0.0};
  std::vector<LabeledExample> seed{{{"s0", ""}, 0}, {{"s1", ""}, 0}};
  std::vector<Document> unl{{"u0", ""}, {"u1", ""}, {"u2", ""}, {"u3", ""}};
  auto curve = calibrate_threshold(lf, seed, unl, 0.1, 0.01);
  // Unlabeled docs are uniform, so any omega >= 0.5 has coverage 0 on D.
  CHECK(curve.grid[50].coverage == 0.0);
  CHECK(lf.omega == curve.best_omega);
  CHECK(curve.best_omega < 0.5);
  auto big = calibrate_threshold(lf, seed, unl, 0.1, 0.01, 2);
  CHECK(big.grid[50].coverage == 1.0);
}

TEST_CASE("subsample draws") {
  std::vector<ClassIndex> gold{0, 1, 0, 1, 0};
  CHECK(draw_subsample(gold, 5, 3) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  auto a = draw_subsample(gold, 3, 3);
  CHECK(a == draw_subsample(gold, 3, 3));
  CHECK(a.size() == 3);
  std::vector<ClassIndex> one{1, 1, 1};
  CHECK_THROWS_AS(draw_subsample(one, 3, 0), DegenerateSubsample);
  CHECK_THROWS_AS(draw_subsample(one, 2, 0), DegenerateSubsample);
  CHECK_THROWS_AS(draw_subsample(gold, 0, 0), PreconditionError);
  CHECK_THROWS_AS(draw_subsample(gold, 6, 0), PreconditionError);
}

TEST_CASE("logistic regression fits a separable toy seed") {
  std::vector<std::string> ids{"a", "b", "c", "d"};
  auto feat = std::make_shared<testing::IndexFeaturizer>(ids);
  std::vector<LabeledExample> seed{{{"a", ""}, 0}, {{"b", ""}, 0}, {{"c", ""}, 1}, {{"d", ""}, 1}};
  LogisticConfig cfg;
  cfg.epochs = 200;
  auto clf = train_candidate(seed, *feat, 4, 1, cfg);
  CHECK(clf.trained_on == std::vector<std::size_t>{0, 1, 2, 3});
  for (const auto& e : seed) {
    auto p = clf.predict_proba(feat->featurize(e.doc));
    CHECK(argmax(p) == e.gold);
  }
  std::vector<LabeledExample> single{{{"a", ""}, 0}, {{"b", ""}, 0}};
  CHECK_THROWS_AS(train_candidate(single, *feat, 2, 1, cfg), DegenerateSubsample);
}

TEST_CASE("gradient descent never raises the objective") {
  std::vector<std::string> ids{"a", "b", "c", "d", "e"};
  auto feat = testing::IndexFeaturizer(ids);
  std::vector<SparseVec> x;
  for (const auto& id : ids) x.push_back(feat.featurize(Document{id, ""}));
  std::vector<ClassIndex> y{0, 1, 1, 0, 1};
  std::vector<double> trace;
  LogisticConfig cfg;
  auto clf = train_logistic(x, y, 2, cfg, &trace);
  CHECK(trace.size() == static_cast<std::size_t>(cfg.epochs) + 1);
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-9);
  CHECK(trace.back() == doctest::Approx(logistic_objective(clf, x, y, cfg.l2)).epsilon(1e-12));
}

TEST_CASE("linear classifier JSON round trip") {
  LinearClassifier clf(2, 3);
  clf.w(1, 2) = 0.25;
  clf.bias = {0.1, -0.1};
  clf.trained_on = {0, 2};
  clf.rng_seed = 9;
  auto back = LinearClassifier::from_json(clf.to_json());
  CHECK(back.weights == clf.weights);
  CHECK(back.bias == clf.bias);
  CHECK(back.trained_on == clf.trained_on);
  CHECK(back.rng_seed == 9);
}

TEST_CASE("candidate seeds are base + k and reruns are identical") {
  auto ds = small_separable();
  SynthesisConfig cfg;
  FeatureSpace space(ds, std::make_shared<HashingEmbedding>(64));
  auto r1 = synthesize_candidates(Category::Structural, space, 3, cfg, 7, "st");
  REQUIRE(r1.lfs.size() == 3);
  CHECK(r1.lfs[0].id() == "st-k01");
  CHECK(r1.lfs[2].id() == "st-k03");
  for (int k = 0; k < 3; ++k) {
    const auto& clf = std::get<LinearClassifier>(r1.lfs[static_cast<std::size_t>(k)].classifier().classifier);
    CHECK(clf.rng_seed == static_cast<std::uint64_t>(8 + k));
    CHECK(clf.trained_on.size() == 32);  // ceil(0.8 * 40)
  }
  FeatureSpace space2(ds, std::make_shared<HashingEmbedding>(64));
  auto r2 = synthesize_candidates(Category::Structural, space2, 3, cfg, 7, "st");
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& a = std::get<LinearClassifier>(r1.lfs[k].classifier().classifier);
    const auto& b = std::get<LinearClassifier>(r2.lfs[k].classifier().classifier);
    CHECK(a.weights == b.weights);
    CHECK(r1.lfs[k].threshold() == r2.lfs[k].threshold());
    CHECK(r1.lfs[k].est_accuracy == r2.lfs[k].est_accuracy);
  }
  // Variations rotate: ngram ranges (1,2), (1,1), (2,2).
  CHECK(r1.lfs[0].featurizer()->describe() != r1.lfs[1].featurizer()->describe());
}

TEST_CASE("one candidate on separable data is exact on the seed") {
  auto ds = small_separable(3);
  SynthesisConfig cfg;
  FeatureSpace space(ds, std::make_shared<HashingEmbedding>(64));
  for (auto cat : {Category::Structural, Category::Semantic}) {
    auto r = synthesize_candidates(cat, space, 1, cfg, 0, "c");
    REQUIRE(r.lfs.size() == 1);
    CHECK(r.lfs[0].est_accuracy == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.lfs[0].est_coverage > 0.0);
    CHECK(r.curves[0].best_omega == r.lfs[0].threshold());
    CHECK(r.lfs[0].category() == cat);
  }
}

TEST_CASE("degenerate seeds skip every candidate without failing") {
  Dataset ds;
  ds.labels = LabelSpace({"a", "b"});
  ds.unlabeled = {{"u0", "alpha beta"}, {"u1", "gamma"}};
  ds.unlabeled_gold = {std::nullopt, std::nullopt};
  ds.seed = {{{"s0", "alpha"}, 0}, {{"s1", "beta"}, 0}, {{"s2", "gamma"}, 0}};
  FeatureSpace space(ds, std::make_shared<HashingEmbedding>(16));
  auto r = synthesize_candidates(Category::Structural, space, 3, SynthesisConfig{}, 0, "x");
  CHECK(r.lfs.empty());
  CHECK(r.skipped.size() == 3);
  CHECK_THROWS_AS(synthesize_candidates(Category::Structural, space, 0, SynthesisConfig{}, 0, "x"),
                  PreconditionError);
  CHECK_THROWS_AS(synthesize_candidates(Category::Surface, space, 1, SynthesisConfig{}, 0, "x"),
                  PreconditionError);
}

TEST_CASE("abstain off sets every threshold to zero") {
  auto ds = small_separable(1);
  SynthesisConfig cfg;
  cfg.abstain_enabled = false;
  FeatureSpace space(ds, std::make_shared<HashingEmbedding>(64));
  auto r = synthesize_candidates(Category::Semantic, space, 2, cfg, 0, "x");
  for (const auto& lf : r.lfs) {
    CHECK(lf.threshold() == 0.0);
    CHECK(lf.est_coverage == 1.0);
  }
}

TEST_CASE("hidden-layer heads are supported") {
  auto ds = small_separable(2);
  SynthesisConfig cfg;
  cfg.head_widths = {8};
  cfg.logistic.epochs = 50;
  FeatureSpace space(ds, std::make_shared<HashingEmbedding>(32));
  auto r = synthesize_candidates(Category::Semantic, space, 1, cfg, 0, "h");
  REQUIRE(r.lfs.size() == 1);
  CHECK(std::holds_alternative<MlpClassifier>(r.lfs[0].classifier().classifier));
}

TEST_CASE("calibration curve CSV") {
  auto seed = probs_of({{0.9, 0}});
  std::vector<ClassIndex> gold{0};
  auto curve = calibrate_from_probs(seed, gold, seed, 0.1, 0.5);
  auto dir = testing::temp_dir("curve_csv");
  curve.write_csv(dir / "c.csv");
  auto text = testing::slurp(dir / "c.csv");
  CHECK(text.rfind("omega,precision,coverage,whm\n0.0000,", 0) == 0);
}
