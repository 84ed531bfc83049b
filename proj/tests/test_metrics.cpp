#include "doctest.h"

#include "autolf/errors.hpp"
#include "autolf/metrics.hpp"
#include "support.hpp"

using namespace autolf;
using testing::matrix_from;

TEST_CASE("coverage counts rows with a vote") {
  CHECK(coverage(matrix_from({{0, -1}, {-1, 1}, {-1, -1}})) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(coverage(matrix_from({{-1, -1}, {-1, -1}})) == 0.0);
  CHECK(coverage(matrix_from({{0, 1}, {1, 1}})) == 1.0);
}

TEST_CASE("weighted F1 from confusion counts") {
  std::vector<ClassIndex> gold{0, 0, 1, 1}, pred{0, 1, 1, 1};
  auto r = weighted_f1(pred, gold, 2);
  CHECK(r.per_class[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.per_class[1] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r.weighted == doctest::Approx(0.5 * (2.0 / 3.0) + 0.5 * 0.8).epsilon(1e-12));
  CHECK(r.weighted == doctest::Approx(0.7333).epsilon(1e-4));
  CHECK(r.confusion == std::vector<std::vector<long>>{{1, 1}, {0, 2}});

  auto perfect = weighted_f1(gold, gold, 2);
  CHECK(perfect.weighted == 1.0);
  for (double f : perfect.per_class) CHECK(f == 1.0);

  // Class 2 is in gold but never predicted: F1 0 with weight 1/4.
  std::vector<ClassIndex> g3{0, 0, 1, 2}, p3{0, 0, 1, 1};
  auto r3 = weighted_f1(p3, g3, 3);
  CHECK(r3.per_class[2] == 0.0);
  CHECK(r3.weighted == doctest::Approx(0.5 * 1.0 + 0.25 * (2.0 / 3.0)).epsilon(1e-12));

  CHECK_THROWS_AS(weighted_f1(std::vector<ClassIndex>{0}, gold, 2), LengthMismatch);
  CHECK_THROWS_AS(weighted_f1(std::vector<ClassIndex>{}, std::vector<ClassIndex>{}, 2), PreconditionError);
  CHECK_THROWS_AS(weighted_f1(std::vector<ClassIndex>{5}, std::vector<ClassIndex>{0}, 2), PreconditionError);
}

TEST_CASE("label quality is the product") {
  CHECK(label_quality(0.9, 0.8) == doctest::Approx(0.72).epsilon(1e-12));
  CHECK(label_quality(1.0, 0.37) == 0.37);
  CHECK(label_quality(0.0, 0.37) == 0.0);
}

TEST_CASE("labeling evaluation over covered rows") {
  auto m = matrix_from({{0, -1}, {1, 1}});
  std::vector<ProbabilisticLabel> p{{{0.9, 0.1}, true}, {{0.2, 0.8}, true}};
  std::vector<LabeledExample> gold{{{"r0", ""}, 0}, {{"r1", ""}, 1}};
  auto rep = evaluate_labeling(m, p, gold, 2);
  CHECK(rep.coverage == 1.0);
  CHECK(rep.weighted_f1 == 1.0);
  CHECK(rep.label_quality == 1.0);
  CHECK(rep.n_evaluated == 2);

  auto half = matrix_from({{0, -1}, {-1, -1}});
  std::vector<ProbabilisticLabel> ph{{{0.9, 0.1}, true}, {{0.5, 0.5}, false}};
  std::vector<LabeledExample> gh{{{"r0", ""}, 0}, {{"r1", ""}, 0}};
  auto rh = evaluate_labeling(half, ph, gh, 2);
  CHECK(rh.coverage == 0.5);
  CHECK(rh.weighted_f1 == 1.0);
  CHECK(rh.label_quality == 0.5);
  CHECK(rh.n_evaluated == 1);

  // Gold may come in any order; rows are matched by id.
  std::vector<LabeledExample> swapped{gold[1], gold[0]};
  CHECK(evaluate_labeling(m, p, swapped, 2).weighted_f1 == 1.0);

  std::vector<LabeledExample> wrong{{{"r0", ""}, 0}, {{"zz", ""}, 1}};
  CHECK_THROWS_AS(evaluate_labeling(m, p, wrong, 2), IdAlignment);
  std::vector<LabeledExample> short_gold{{{"r0", ""}, 0}};
  CHECK_THROWS_AS(evaluate_labeling(m, p, short_gold, 2), IdAlignment);
}

TEST_CASE("eval report JSON carries the product invariant") {
  auto m = matrix_from({{0}, {-1}});
  std::vector<ProbabilisticLabel> p{{{0.9, 0.1}, true}, {{0.5, 0.5}, false}};
  std::vector<LabeledExample> gold{{{"r0", ""}, 0}, {{"r1", ""}, 1}};
  auto rep = evaluate_labeling(m, p, gold, 2);
  auto j = rep.to_json();
  CHECK(j["label_quality"].get<double>() == j["coverage"].get<double>() * j["weighted_f1"].get<double>());
  CHECK(j.contains("confusion"));
  CHECK(j.contains("per_class_f1"));
}

TEST_CASE("results ledger appends rows under one header") {
  auto dir = testing::temp_dir("ledger");
  LedgerRow r{"2024-01-01T00:00:00Z", "data.jsonl", 0.9, 0.8, 0.72, 0.85, "abc"};
  append_ledger_row(dir / "l.csv", r);
  r.dataset = "other, \"quoted\"";
  append_ledger_row(dir / "l.csv", r);
  auto rows = read_ledger(dir / "l.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].coverage == 0.9);
  CHECK(rows[1].dataset == "other, \"quoted\"");
  CHECK(rows[1].config_hash == "abc");
  auto text = testing::slurp(dir / "l.csv");
  CHECK(text.rfind("timestamp,", 0) == 0);
}
