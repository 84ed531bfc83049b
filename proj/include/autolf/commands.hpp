#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "autolf/pipeline.hpp"

namespace autolf {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitStageFailure = 1;
inline constexpr int kExitUsage = 2;  // ingest, config and argument errors
inline constexpr int kExitIdAlignment = 3;

struct RunOptions {
  std::filesystem::path config;  // empty: defaults
  std::filesystem::path data;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed_override;
  // Appended to by every run; defaults to <out>/results_ledger.csv.
  std::filesystem::path ledger;
  // Applied after loading the config file (used by sweeps).
  std::optional<PipelineConfig> config_override;
  PipelineProviders providers;
};

struct RunSummary {
  int exit_code = kExitOk;
  std::optional<EvalReport> labeling;
  std::optional<EvalReport> e2e;
  std::string config_hash;
  double wall_seconds = 0.0;
};

RunSummary run_command(const RunOptions& options, std::ostream& err);

int cmd_run(const std::filesystem::path& config, const std::filesystem::path& data,
            const std::filesystem::path& out,
            std::optional<std::uint64_t> seed_override = std::nullopt);

// param is one of alpha, beta, k, abstain. Each value runs in
// <out>/<param>_<value>; results go to <out>/sweep_<param>.csv and a shared
// <out>/results_ledger.csv.
int cmd_sweep(const std::filesystem::path& config, const std::filesystem::path& data,
              const std::string& param, const std::vector<std::string>& values,
              const std::filesystem::path& out,
              std::optional<std::uint64_t> seed_override = std::nullopt);

// Re-evaluates exported labels against the gold labels of the dataset's
// unlabeled split. The label space comes from `config` when given.
int cmd_eval(const std::filesystem::path& labels, const std::filesystem::path& gold,
             const std::filesystem::path& out, const std::filesystem::path& config = {});

int cmd_gen_synth(const std::string& kind, std::uint64_t seed, const std::filesystem::path& out);

// Applies one sweep value to a config. Throws PreconditionError on an unknown
// parameter or unparsable value.
void apply_sweep_value(PipelineConfig& config, const std::string& param,
                       const std::string& value);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace autolf
