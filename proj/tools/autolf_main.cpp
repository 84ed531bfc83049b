#include <iostream>

#include "CLI11.hpp"
#include "autolf/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"autolf: automatic label-function generation and weak supervision"};
  app.require_subcommand(1);

  std::string config, data, out, param, kind = "separable", labels;
  std::vector<std::string> values;
  std::optional<std::uint64_t> seed_override;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "Run the full labeling pipeline");
  run->add_option("--config", config, "Pipeline config JSON (defaults when omitted)");
  run->add_option("--data", data, "Dataset (JSONL or CSV)")->required();
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--seed-override", seed_override, "Replace the config's base seed");

  auto* sweep = app.add_subcommand("sweep", "Run once per value of one parameter");
  sweep->add_option("--config", config, "Pipeline config JSON");
  sweep->add_option("--data", data, "Dataset (JSONL or CSV)")->required();
  sweep->add_option("--out", out, "Output directory")->required();
  sweep->add_option("--param", param, "alpha, beta, k or abstain")->required();
  sweep->add_option("--values", values, "Values to try (comma separated)")->delimiter(',');
  sweep->add_option("--seed-override", seed_override, "Replace the config's base seed");

  auto* eval = app.add_subcommand("eval", "Evaluate exported labels against gold");
  eval->add_option("--labels", labels, "labels.jsonl from a run")->required();
  eval->add_option("--data", data, "Dataset with gold labels")->required();
  eval->add_option("--out", out, "Report path")->required();
  eval->add_option("--config", config, "Config naming the label order");

  auto* gen = app.add_subcommand("gen-synth", "Write a bundled synthetic dataset");
  gen->add_option("--kind", kind, "separable or noisy");
  gen->add_option("--seed", seed, "Generator seed");
  gen->add_option("--out", out, "Output dataset path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : autolf::kExitUsage;
  }

  if (*run) return autolf::cmd_run(config, data, out, seed_override);
  if (*sweep) return autolf::cmd_sweep(config, data, param, values, out, seed_override);
  if (*eval) return autolf::cmd_eval(labels, data, out, config);
  return autolf::cmd_gen_synth(kind, seed, out);
}
