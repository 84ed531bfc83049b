#include "autolf/commands.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "autolf/downstream.hpp"
#include "autolf/errors.hpp"
#include "autolf/synth.hpp"

namespace autolf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommandFailure {
  std::string stage;
  std::string error;
  std::string message;
  int exit_code;
};

void report_failure(const CommandFailure& f, const fs::path& out_dir, std::ostream& err) {
  const json j = {{"stage", f.stage}, {"error", f.error}, {"message", f.message}};
  err << j.dump() << '\n';
  if (out_dir.empty()) return;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream(out_dir / "error.json") << j.dump(2) << '\n';
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Whole file to a temp name, then rename, so readers never see a partial file.
void write_json_atomic(const fs::path& path, const json& j) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_json(tmp, j);
  fs::rename(tmp, path);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

LabelSpace resolve_labels(const PipelineConfig& config, const fs::path& data) {
  if (!config.labels.empty()) return LabelSpace(config.labels);
  const auto format = data.extension() == ".csv" ? DataFormat::Csv : DataFormat::Jsonl;
  return infer_label_space(data, format);
}

json pool_to_json(const LfPool& pool, const LabelSpace& labels) {
  json lfs = json::array();
  for (const auto& lf : pool.flatten()) lfs.push_back(lf_to_json(lf, labels));
  json skipped = json::array();
  for (const auto& s : pool.skip_reports) {
    skipped.push_back({{"candidate_id", s.candidate_id}, {"reason", s.reason}});
  }
  json shortfall = json::object();
  for (const auto& [c, n] : pool.shortfall) shortfall[std::string(to_string(c))] = n;
  return {{"rounds", pool.round},
          {"hit_round_limit", pool.hit_round_limit},
          {"shortfall", shortfall},
          {"skipped", skipped},
          {"lfs", lfs}};
}

std::string sanitize(const std::string& s) {
  std::string r;
  for (char ch : s) {
    r += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.' || ch == '_')
             ? ch
             : '_';
  }
  return r;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

RunSummary run_command(const RunOptions& options, std::ostream& err) {
  RunSummary summary;
  const auto start = std::chrono::steady_clock::now();
  auto fail = [&](CommandFailure f) {
    report_failure(f, options.out, err);
    summary.exit_code = f.exit_code;
    return summary;
  };

  PipelineConfig config;
  try {
    if (options.config_override) {
      config = *options.config_override;
    } else if (!options.config.empty()) {
      config = load_config(options.config);
    }
    if (options.seed_override) config.base_seed = *options.seed_override;
    config.validate();
  } catch (const Error& e) {
    return fail({"config", e.code(), e.what(), kExitUsage});
  } catch (const std::exception& e) {
    return fail({"config", "Exception", e.what(), kExitUsage});
  }
  summary.config_hash = config_hash(config);

  Dataset dataset;
  try {
    if (!fs::exists(options.data)) throw IoError("dataset not found: " + options.data.string());
    dataset = load_dataset(options.data, resolve_labels(config, options.data));
  } catch (const Error& e) {
    return fail({"ingest", e.code(), e.what(), kExitUsage});
  } catch (const std::exception& e) {
    return fail({"ingest", "Exception", e.what(), kExitUsage});
  }

  try {
    fs::create_directories(options.out);
  } catch (const std::exception& e) {
    return fail({"output", "IoError", e.what(), kExitStageFailure});
  }

  PipelineResult result;
  try {
    result = run_pipeline(dataset, config, options.providers, options.out);
  } catch (const StageError& e) {
    return fail({e.stage(), e.inner_code(), e.what(), kExitStageFailure});
  }

  std::map<std::string, std::string> artifacts;
  try {
    const auto& labels = dataset.labels;
    auto out = [&](const std::string& name) {
      artifacts[name] = name;
      return options.out / name;
    };
    save_config(config, out("config.json"));
    write_json(out("lf_pool.json"), pool_to_json(result.pool, labels));
    json reports = json::array();
    for (const auto& r : result.reports) reports.push_back(r.to_json());
    write_json(out("filter_reports.json"), reports);
    result.matrix.write_csv(out("label_matrix.csv"));
    write_labels_jsonl(out("labels.jsonl"), result.matrix.row_ids(), result.probs, labels);

    const auto lfs = result.pool.flatten();
    fs::create_directories(options.out / "calibration");
    for (const auto& lf : lfs) {
      auto it = result.curves.find(lf.id());
      if (it == result.curves.end()) continue;
      const std::string name = "calibration/" + sanitize(lf.id()) + ".csv";
      it->second.write_csv(out(name));
    }

    json report = {{"config_hash", summary.config_hash},
                   {"labels", labels.class_names()},
                   {"num_lfs", lfs.size()},
                   {"matrix_coverage", coverage(result.matrix)},
                   {"downstream_features", result.downstream_features->describe()}};
    if (result.labeling) report["labeling"] = result.labeling->to_json();
    if (result.e2e) report["e2e"] = result.e2e->to_json();
    write_json(out("eval_report.json"), report);

    write_checkpoint(out("model.json"), *result.model, summary.config_hash);
    if (!dataset.test.empty()) {
      write_predictions_jsonl(out("predictions.jsonl"), *result.model, dataset.test,
                              *result.downstream_features, labels);
    }

    LedgerRow row;
    row.timestamp = utc_timestamp();
    row.dataset = options.data.filename().string();
    row.coverage = result.labeling ? result.labeling->coverage : coverage(result.matrix);
    row.weighted_f1 = result.labeling ? result.labeling->weighted_f1 : 0.0;
    row.label_quality = result.labeling ? result.labeling->label_quality : 0.0;
    row.e2e_f1 = result.e2e ? result.e2e->weighted_f1 : 0.0;
    row.config_hash = summary.config_hash;
    const fs::path ledger =
        options.ledger.empty() ? options.out / "results_ledger.csv" : options.ledger;
    append_ledger_row(ledger, row);

    summary.labeling = result.labeling;
    summary.e2e = result.e2e;
    summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json inputs = {{"data", {{"path", options.data.string()}, {"sha256", sha256_file(options.data)}}}};
    if (!options.config.empty()) {
      inputs["config"] = {{"path", options.config.string()},
                          {"sha256", sha256_file(options.config)}};
    }
    json timings = json::array();
    for (const auto& t : result.timings) {
      timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    }
    json manifest = {{"config_hash", summary.config_hash},
                     {"inputs", inputs},
                     {"timings", timings},
                     {"wall_seconds", summary.wall_seconds},
                     {"ledger", ledger.string()},
                     {"artifacts", artifacts}};
    write_json_atomic(options.out / "manifest.json", manifest);
  } catch (const Error& e) {
    return fail({"write_artifacts", e.code(), e.what(), kExitStageFailure});
  } catch (const std::exception& e) {
    return fail({"write_artifacts", "Exception", e.what(), kExitStageFailure});
  }
  return summary;
}

int cmd_run(const fs::path& config, const fs::path& data, const fs::path& out,
            std::optional<std::uint64_t> seed_override) {
  RunOptions opts;
  opts.config = config;
  opts.data = data;
  opts.out = out;
  opts.seed_override = seed_override;
  return run_command(opts, std::cerr).exit_code;
}

void apply_sweep_value(PipelineConfig& config, const std::string& param,
                       const std::string& value) {
  auto number = [&] {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != value.size()) {
      throw PreconditionError("not a number for " + param + ": '" + value + "'");
    }
    return v;
  };
  if (param == "alpha") {
    config.alpha = number();
  } else if (param == "beta") {
    config.beta = number();
  } else if (param == "k") {
    const double v = number();
    if (v != static_cast<double>(static_cast<int>(v))) {
      throw PreconditionError("k must be an integer: '" + value + "'");
    }
    for (auto& [c, k] : config.k_per_category) k = static_cast<int>(v);
  } else if (param == "abstain") {
    if (value == "on" || value == "true" || value == "1") {
      config.abstain_enabled = true;
    } else if (value == "off" || value == "false" || value == "0") {
      config.abstain_enabled = false;
    } else {
      throw PreconditionError("abstain takes on/off, got '" + value + "'");
    }
  } else {
    throw PreconditionError("unknown sweep parameter '" + param +
                            "' (expected alpha, beta, k or abstain)");
  }
}

int cmd_sweep(const fs::path& config_path, const fs::path& data, const std::string& param,
              const std::vector<std::string>& values, const fs::path& out,
              std::optional<std::uint64_t> seed_override) {
  PipelineConfig base;
  try {
    if (values.empty()) throw PreconditionError("sweep needs at least one value");
    if (!config_path.empty()) base = load_config(config_path);
    if (seed_override) base.base_seed = *seed_override;
    // Reject bad parameters and values before any run starts.
    for (const auto& v : values) {
      PipelineConfig probe = base;
      apply_sweep_value(probe, param, v);
      probe.validate();
    }
    fs::create_directories(out);
  } catch (const Error& e) {
    report_failure({"config", e.code(), e.what(), kExitUsage}, out, std::cerr);
    return kExitUsage;
  } catch (const std::exception& e) {
    report_failure({"config", "Exception", e.what(), kExitUsage}, out, std::cerr);
    return kExitUsage;
  }

  const fs::path csv_path = out / ("sweep_" + param + ".csv");
  std::ofstream csv(csv_path);
  csv << "value,coverage,label_quality,e2e_f1,wall_time,status\n";
  bool any_failed = false;
  for (const auto& v : values) {
    RunOptions opts;
    opts.config = config_path;
    opts.data = data;
    opts.out = out / (param + "_" + sanitize(v));
    opts.ledger = out / "results_ledger.csv";
    PipelineConfig cfg = base;
    apply_sweep_value(cfg, param, v);
    opts.config_override = cfg;
    const auto s = run_command(opts, std::cerr);
    char buf[256];
    if (s.exit_code == kExitOk) {
      std::snprintf(buf, sizeof buf, "%s,%.10f,%.10f,%.10f,%.3f,ok\n", v.c_str(),
                    s.labeling ? s.labeling->coverage : 0.0,
                    s.labeling ? s.labeling->label_quality : 0.0,
                    s.e2e ? s.e2e->weighted_f1 : 0.0, s.wall_seconds);
    } else {
      any_failed = true;
      std::snprintf(buf, sizeof buf, "%s,,,,,failed(exit %d)\n", v.c_str(), s.exit_code);
    }
    csv << buf << std::flush;
  }
  return any_failed ? kExitStageFailure : kExitOk;
}

int cmd_eval(const fs::path& labels_path, const fs::path& gold_path, const fs::path& out,
             const fs::path& config_path) {
  const fs::path out_dir = out.parent_path();
  std::vector<LabelRecord> records;
  Dataset dataset;
  try {
    PipelineConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    if (!fs::exists(labels_path)) throw IoError("labels not found: " + labels_path.string());
    if (!fs::exists(gold_path)) throw IoError("dataset not found: " + gold_path.string());
    records = read_labels_jsonl(labels_path);
    dataset = load_dataset(gold_path, resolve_labels(config, gold_path));
  } catch (const Error& e) {
    report_failure({"ingest", e.code(), e.what(), kExitUsage}, out_dir, std::cerr);
    return kExitUsage;
  } catch (const std::exception& e) {
    report_failure({"ingest", "Exception", e.what(), kExitUsage}, out_dir, std::cerr);
    return kExitUsage;
  }
  try {
    std::vector<std::string> ids;
    std::vector<ProbabilisticLabel> probs;
    for (auto& r : records) {
      if (r.label.dist.size() != dataset.labels.size()) {
        throw DimensionMismatch("label " + r.doc_id + " has " +
                                std::to_string(r.label.dist.size()) + " classes");
      }
      ids.push_back(r.doc_id);
      probs.push_back(std::move(r.label));
    }
    const auto rep =
        evaluate_labeling(ids, probs, dataset.unlabeled_with_gold(), dataset.labels.size());
    if (!out_dir.empty()) fs::create_directories(out_dir);
    write_json(out, {{"labeling", rep.to_json()}, {"labels", dataset.labels.class_names()}});
  } catch (const IdAlignment& e) {
    report_failure({"evaluate", e.code(), e.what(), kExitIdAlignment}, out_dir, std::cerr);
    return kExitIdAlignment;
  } catch (const Error& e) {
    report_failure({"evaluate", e.code(), e.what(), kExitStageFailure}, out_dir, std::cerr);
    return kExitStageFailure;
  }
  return kExitOk;
}

int cmd_gen_synth(const std::string& kind, std::uint64_t seed, const fs::path& out) {
  try {
    SynthSpec spec;
    spec.kind = synth_kind_from_string(kind);
    spec.seed = seed;
    const auto dataset = make_synthetic(spec);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_dataset(dataset, out,
                 out.extension() == ".csv" ? DataFormat::Csv : DataFormat::Jsonl);
  } catch (const Error& e) {
    report_failure({"gen_synth", e.code(), e.what(), kExitUsage}, {}, std::cerr);
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace autolf
