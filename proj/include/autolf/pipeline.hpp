#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "autolf/config.hpp"
#include "autolf/errors.hpp"
#include "autolf/corpus.hpp"
#include "autolf/exploitation.hpp"
#include "autolf/label_model.hpp"
#include "autolf/metrics.hpp"
#include "autolf/mlp.hpp"
#include "autolf/surface.hpp"

namespace autolf {

// Raised when a pipeline stage fails; `stage` names it for the error JSON.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string inner_code, const std::string& message)
      : Error("StageError", message), stage_(std::move(stage)), inner_(std::move(inner_code)) {}
  const std::string& stage() const { return stage_; }
  const std::string& inner_code() const { return inner_; }

 private:
  std::string stage_;
  std::string inner_;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct PipelineResult {
  LfPool pool;
  std::vector<FilterReport> reports;
  std::map<std::string, CalibrationCurve> curves;  // by LF id
  LabelMatrix matrix;
  std::vector<ProbabilisticLabel> probs;
  std::optional<EvalReport> labeling;  // when the unlabeled split has gold
  std::optional<EvalReport> e2e;       // when a test split exists
  std::optional<MlpClassifier> model;
  std::shared_ptr<const TfidfFeaturizer> downstream_features;
  std::vector<StageTiming> timings;
};

// Providers default to the ones the config names; tests inject their own.
struct PipelineProviders {
  std::shared_ptr<const LfProvider> surface;  // null: build from config
  std::shared_ptr<const EmbeddingProvider> embedding;
};

std::shared_ptr<const EmbeddingProvider> make_embedding_provider(
    const PipelineConfig& config, const std::filesystem::path& out_dir);

PipelineResult run_pipeline(const Dataset& dataset, const PipelineConfig& config,
                            const PipelineProviders& providers = {},
                            const std::filesystem::path& out_dir = {});

}  // namespace autolf
