#include "doctest.h"

#include <cstdlib>

#include "autolf/commands.hpp"
#include "autolf/config.hpp"
#include "autolf/errors.hpp"
#include "support.hpp"

using namespace autolf;
namespace fs = std::filesystem;

namespace {
const fs::path kData = AUTOLF_DATA_DIR;
const fs::path kConfig = kData / "config.default.json";

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(testing::slurp(p)); }
}  // namespace

TEST_CASE("config JSON round trip and key checks") {
  PipelineConfig c;
  c.alpha = 0.7;
  c.labels = {"neg", "pos"};
  c.k_per_category[Category::Semantic] = 3;
  c.label_model.kind = LabelModelName::DawidSkene;
  c.head_widths = {0, 16};
  CHECK(config_from_json(config_to_json(c)) == c);
  CHECK(config_hash(config_from_json(config_to_json(c))) == config_hash(c));
  CHECK(config_hash(c) != config_hash(PipelineConfig{}));
  CHECK(config_hash(c).size() == 16);

  auto j = config_to_json(c);
  j["alhpa"] = 0.5;
  CHECK_THROWS_AS(config_from_json(j), PreconditionError);
  CHECK(config_from_json(nlohmann::json::object()) == PipelineConfig{});
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"schema_version", 2}}), PreconditionError);

  auto dir = testing::temp_dir("cfg");
  save_config(c, dir / "c.json");
  CHECK(load_config(dir / "c.json") == c);
  testing::spit(dir / "bad.json", "{not json");
  CHECK_THROWS_AS(load_config(dir / "bad.json"), PreconditionError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), IoError);
}

TEST_CASE("config validation") {
  auto bad = [](auto mutate) {
    PipelineConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), PreconditionError);
  };
  bad([](PipelineConfig& c) { c.alpha = 1.5; });
  bad([](PipelineConfig& c) { c.alpha = -0.1; });
  bad([](PipelineConfig& c) { c.beta = -1; });
  bad([](PipelineConfig& c) { c.k_per_category[Category::Surface] = 0; });
  bad([](PipelineConfig& c) { c.grid_step = 0; });
  bad([](PipelineConfig& c) { c.tau_dup[Category::Structural] = 1.5; });
  PipelineConfig ok;
  ok.alpha = 1.0;
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("sweep values") {
  PipelineConfig c;
  apply_sweep_value(c, "alpha", "0.5");
  CHECK(c.alpha == 0.5);
  apply_sweep_value(c, "beta", "2");
  CHECK(c.beta == 2.0);
  apply_sweep_value(c, "k", "7");
  for (auto& [cat, k] : c.k_per_category) CHECK(k == 7);
  apply_sweep_value(c, "abstain", "off");
  CHECK_FALSE(c.abstain_enabled);
  CHECK_THROWS_AS(apply_sweep_value(c, "k", "2.5"), PreconditionError);
  CHECK_THROWS_AS(apply_sweep_value(c, "alpha", "abc"), PreconditionError);
  CHECK_THROWS_AS(apply_sweep_value(c, "gamma", "1"), PreconditionError);
  CHECK_THROWS_AS(apply_sweep_value(c, "abstain", "maybe"), PreconditionError);
}

TEST_CASE("sha256 of a file") {
  auto dir = testing::temp_dir("sha");
  testing::spit(dir / "abc", "abc");
  CHECK(sha256_file(dir / "abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("run writes every artifact and a reproducible ledger row") {
  auto dir = testing::temp_dir("run");
  REQUIRE(cmd_run(kConfig, kData / "separable.jsonl", dir / "a") == kExitOk);
  for (const char* f : {"config.json", "lf_pool.json", "filter_reports.json", "label_matrix.csv",
                        "labels.jsonl", "eval_report.json", "model.json", "predictions.jsonl",
                        "results_ledger.csv", "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(dir / "a" / f), f);
  }
  CHECK_FALSE(fs::exists(dir / "a" / "manifest.json.tmp"));
  CHECK(fs::is_directory(dir / "a" / "calibration"));
  auto manifest = read_json(dir / "a" / "manifest.json");
  CHECK(manifest["inputs"]["data"]["sha256"] == sha256_file(kData / "separable.jsonl"));
  CHECK(manifest["config_hash"] == config_hash(load_config(kConfig)));
  auto report = read_json(dir / "a" / "eval_report.json");
  const auto& lab = report["labeling"];
  CHECK(lab["label_quality"].get<double>() ==
        doctest::Approx(lab["coverage"].get<double>() * lab["weighted_f1"].get<double>()).epsilon(1e-12));

  REQUIRE(cmd_run(kConfig, kData / "separable.jsonl", dir / "b") == kExitOk);
  CHECK(testing::slurp(dir / "a" / "labels.jsonl") == testing::slurp(dir / "b" / "labels.jsonl"));
  auto ra = read_ledger(dir / "a" / "results_ledger.csv");
  auto rb = read_ledger(dir / "b" / "results_ledger.csv");
  REQUIRE(ra.size() == 1);
  REQUIRE(rb.size() == 1);
  rb[0].timestamp = ra[0].timestamp;
  CHECK(ra[0] == rb[0]);

  // Re-evaluating the exported labels reproduces the run's report.
  REQUIRE(cmd_eval(dir / "a" / "labels.jsonl", kData / "separable.jsonl", dir / "eval.json", kConfig) ==
          kExitOk);
  auto ev = read_json(dir / "eval.json")["labeling"];
  CHECK(ev["coverage"].get<double>() == doctest::Approx(lab["coverage"].get<double>()).epsilon(1e-12));
  CHECK(ev["weighted_f1"].get<double>() ==
        doctest::Approx(lab["weighted_f1"].get<double>()).epsilon(1e-12));
}

TEST_CASE("ingest failures exit 2 with an error record") {
  auto dir = testing::temp_dir("run_fail");
  CHECK(cmd_run(kConfig, dir / "nope.jsonl", dir / "out") == kExitUsage);
  auto err = read_json(dir / "out" / "error.json");
  CHECK(err["stage"] == "ingest");
  CHECK(err["error"] == "IoError");

  testing::spit(dir / "bad.json", R"({"alpha": 3})");
  CHECK(cmd_run(dir / "bad.json", kData / "separable.jsonl", dir / "out2") == kExitUsage);
  CHECK(read_json(dir / "out2" / "error.json")["stage"] == "config");
}

TEST_CASE("sweep writes one ledger row and one CSV row per value") {
  auto dir = testing::temp_dir("sweep");
  REQUIRE(cmd_sweep(kConfig, kData / "separable.jsonl", "alpha", {"0.0", "0.5", "0.9"}, dir) ==
          kExitOk);
  CHECK(read_ledger(dir / "results_ledger.csv").size() == 3);
  std::istringstream csv(testing::slurp(dir / "sweep_alpha.csv"));
  std::vector<std::string> lines;
  for (std::string l; std::getline(csv, l);) lines.push_back(l);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "value,coverage,label_quality,e2e_f1,wall_time,status");
  for (std::size_t i = 1; i < 4; ++i) CHECK(lines[i].ends_with(",ok"));
  CHECK(fs::exists(dir / "alpha_0.5" / "labels.jsonl"));

  CHECK(cmd_sweep(kConfig, kData / "separable.jsonl", "alpha", {}, dir / "e") == kExitUsage);
  CHECK(cmd_sweep(kConfig, kData / "separable.jsonl", "alpha", {"2.0"}, dir / "f") == kExitUsage);
  CHECK(cmd_sweep(kConfig, kData / "separable.jsonl", "zeta", {"1"}, dir / "g") == kExitUsage);
}

TEST_CASE("eval of hand-made labels") {
  auto dir = testing::temp_dir("eval");
  const auto ds = load_dataset(kData / "separable.jsonl", infer_label_space(kData / "separable.jsonl",
                                                                          DataFormat::Jsonl));
  std::vector<std::string> ids;
  std::vector<ProbabilisticLabel> probs;
  for (std::size_t i = 0; i < ds.unlabeled.size(); ++i) {
    ids.push_back(ds.unlabeled[i].id);
    std::vector<double> d(ds.labels.size(), 0.0);
    d[static_cast<std::size_t>(*ds.unlabeled_gold[i])] = 1.0;
    // Every fourth row is left uncovered.
    probs.push_back({d, i % 4 != 0});
  }
  write_labels_jsonl(dir / "labels.jsonl", ids, probs, ds.labels);
  REQUIRE(cmd_eval(dir / "labels.jsonl", kData / "separable.jsonl", dir / "r.json") == kExitOk);
  auto r = read_json(dir / "r.json")["labeling"];
  const double cov = static_cast<double>(ds.unlabeled.size() - (ds.unlabeled.size() + 3) / 4) /
                     static_cast<double>(ds.unlabeled.size());
  CHECK(r["coverage"].get<double>() == doctest::Approx(cov).epsilon(1e-12));
  CHECK(r["weighted_f1"].get<double>() == 1.0);
  CHECK(r["label_quality"].get<double>() == doctest::Approx(cov).epsilon(1e-12));

  ids.pop_back();
  probs.pop_back();
  ids.push_back("not-a-doc");
  probs.push_back({std::vector<double>(ds.labels.size(), 0.5), true});
  write_labels_jsonl(dir / "bad.jsonl", ids, probs, ds.labels);
  CHECK(cmd_eval(dir / "bad.jsonl", kData / "separable.jsonl", dir / "bad" / "r.json") ==
        kExitIdAlignment);
  CHECK(read_json(dir / "bad" / "error.json")["error"] == "IdAlignment");
  CHECK(cmd_eval(dir / "none.jsonl", kData / "separable.jsonl", dir / "r2.json") == kExitUsage);
}

TEST_CASE("gen-synth is deterministic") {
  auto dir = testing::temp_dir("synth");
  REQUIRE(cmd_gen_synth("noisy", 3, dir / "a.jsonl") == kExitOk);
  REQUIRE(cmd_gen_synth("noisy", 3, dir / "b.jsonl") == kExitOk);
  REQUIRE(cmd_gen_synth("noisy", 4, dir / "c.jsonl") == kExitOk);
  CHECK(testing::slurp(dir / "a.jsonl") == testing::slurp(dir / "b.jsonl"));
  CHECK(testing::slurp(dir / "a.jsonl") != testing::slurp(dir / "c.jsonl"));
  CHECK(cmd_gen_synth("weird", 3, dir / "d.jsonl") == kExitUsage);
}

TEST_CASE("command-line binary exit codes") {
  auto dir = testing::temp_dir("bin");
  const std::string bin = AUTOLF_CLI_BIN;
  auto sh = [](const std::string& cmd) {
    const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  CHECK(sh(bin + " run --data " + (dir / "missing.jsonl").string() + " --out " + dir.string()) == 2);
  CHECK(sh(bin + " run --out " + dir.string()) == 2);
  CHECK(sh(bin + " frobnicate") == 2);
  CHECK(sh(bin + " gen-synth --kind separable --seed 1 --out " + (dir / "s.jsonl").string()) == 0);
  CHECK(fs::exists(dir / "s.jsonl"));
}
