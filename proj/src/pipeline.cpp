#include "autolf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "autolf/candidates.hpp"
#include "autolf/downstream.hpp"
#include "autolf/errors.hpp"
#include "autolf/rng.hpp"

namespace autolf {

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

template <typename F>
auto stage(const char* name, std::vector<StageTiming>& timings, F&& body) {
  Stopwatch sw;
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      timings.push_back({name, sw.seconds()});
    } else {
      auto r = body();
      timings.push_back({name, sw.seconds()});
      return r;
    }
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.code(), e.what());
  } catch (const std::exception& e) {
    throw StageError(name, "Exception", e.what());
  }
}

std::string round_prefix(Category c, int round) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s-r%02d", std::string(to_string(c)).c_str(), round);
  return buf;
}

}  // namespace

std::shared_ptr<const EmbeddingProvider> make_embedding_provider(
    const PipelineConfig& config, const std::filesystem::path& out_dir) {
  if (config.embedding.kind == EmbeddingKind::Hashing) {
    return std::make_shared<HashingEmbedding>(config.embedding.dim);
  }
  const char* url = std::getenv("AUTOLF_EMBED_ENDPOINT");
  if (!url || !*url) {
    throw ProviderUnreachable("remote embeddings need AUTOLF_EMBED_ENDPOINT");
  }
  RemoteEndpoint ep;
  ep.url = url;
  if (const char* m = std::getenv("AUTOLF_EMBED_MODEL")) ep.model = m;
  if (const char* k = std::getenv("AUTOLF_EMBED_API_KEY")) ep.api_key = k;
  ep.timeout_seconds = config.embedding.timeout_seconds;
  ep.retries = config.embedding.retries;
  std::filesystem::path cache = config.embedding.cache_path;
  if (!cache.empty() && cache.is_relative() && !out_dir.empty()) cache = out_dir / cache;
  return std::make_shared<RemoteEmbedding>(ep, config.embedding.dim, cache);
}

PipelineResult run_pipeline(const Dataset& dataset, const PipelineConfig& config,
                            const PipelineProviders& providers,
                            const std::filesystem::path& out_dir) {
  PipelineResult result;
  auto& timings = result.timings;

  std::shared_ptr<const LfProvider> surface_provider = providers.surface;
  std::shared_ptr<const EmbeddingProvider> embedding = providers.embedding;
  stage("providers", timings, [&] {
    config.validate();
    if (!embedding) embedding = make_embedding_provider(config, out_dir);
    if (!surface_provider && config.surface_provider.kind == ProviderKind::Remote) {
      auto ep = RemoteLlmProvider::endpoint_from_env();
      if (!ep) throw ProviderUnreachable("remote LF generation needs AUTOLF_LLM_ENDPOINT");
      ep->timeout_seconds = config.surface_provider.timeout_seconds;
      ep->retries = config.surface_provider.retries;
      surface_provider = std::make_shared<RemoteLlmProvider>(*ep);
    }
  });

  FeatureSpace space(dataset, embedding);
  const SynthesisConfig synth = config.synthesis();

  // Few-shot examples for the surface provider: a fresh seeded sample of the
  // seed set every round, or the whole seed when it is small enough.
  auto prompt_examples = [&](int round) {
    std::vector<std::size_t> order(dataset.seed.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t n = std::min(order.size(), config.surface_provider.prompt_examples);
    if (n < order.size()) {
      Rng rng = make_rng(config.base_seed + 50000 + static_cast<std::uint64_t>(round));
      shuffle(order, rng);
      order.resize(n);
      std::sort(order.begin(), order.end());
    }
    std::vector<std::pair<std::string, std::string>> out;
    for (auto i : order) {
      out.emplace_back(dataset.seed[i].doc.text, dataset.labels.name(dataset.seed[i].gold));
    }
    return out;
  };

  std::map<Category, CandidateGenerator> generators;
  generators[Category::Surface] = [&](int round, int count, const CoverageHint& hint) {
    GenerationRequest req;
    req.task_description = config.task_description;
    req.class_names = dataset.labels.class_names();
    req.examples = prompt_examples(round);
    req.count = count;
    for (auto c : hint.gap_classes) req.coverage_gap_classes.push_back(dataset.labels.name(c));
    CandidateBatch batch;
    const std::string prefix = round_prefix(Category::Surface, round);
    GenerationResult gen;
    try {
      if (surface_provider) {
        gen = generate_surface_lfs(*surface_provider, req);
      } else {
        const OfflineSurfaceProvider offline(config.base_seed + 100 * static_cast<std::uint64_t>(round),
                                             config.surface_provider.top_t);
        gen = generate_surface_lfs(offline, req);
      }
    } catch (const ProviderUnreachable& e) {
      batch.skipped.push_back({prefix, std::string("ProviderUnreachable: ") + e.what()});
      return batch;
    } catch (const MalformedProviderReply& e) {
      batch.skipped.push_back({prefix, std::string("MalformedProviderReply: ") + e.what()});
      return batch;
    }
    if (gen.warnings > 0) {
      batch.skipped.push_back({prefix, std::to_string(gen.warnings) + " malformed rule(s) dropped"});
    }
    for (std::size_t k = 0; k < gen.rules.size(); ++k) {
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "-k%02zu", k + 1);
      batch.lfs.emplace_back(prefix + suffix, Category::Surface, gen.rules[k]);
    }
    return batch;
  };
  auto classifier_generator = [&](Category cat, std::uint64_t offset) {
    return [&, cat, offset](int round, int count, const CoverageHint&) {
      const std::uint64_t base = config.base_seed + offset +
                                 static_cast<std::uint64_t>(round - 1) *
                                     static_cast<std::uint64_t>(count);
      auto synthesized =
          synthesize_candidates(cat, space, count, synth, base, round_prefix(cat, round));
      for (std::size_t i = 0; i < synthesized.lfs.size(); ++i) {
        result.curves[synthesized.lfs[i].id()] = synthesized.curves[i];
      }
      return CandidateBatch{std::move(synthesized.lfs), std::move(synthesized.skipped)};
    };
  };
  generators[Category::Structural] = classifier_generator(Category::Structural, 100000);
  generators[Category::Semantic] = classifier_generator(Category::Semantic, 200000);

  auto explored = stage("explore_exploit", timings, [&] {
    return run_exploitation_loop(dataset, config.exploitation(), generators, &space.seed_cache(),
                                 &space.unlabeled_cache());
  });
  result.pool = std::move(explored.pool);
  result.reports = std::move(explored.reports);
  const auto lfs = result.pool.flatten();

  result.matrix = stage("label_matrix", timings, [&] {
    return build_label_matrix(lfs, dataset.unlabeled);
  });
  result.probs = stage("aggregate", timings, [&] {
    return aggregate(result.matrix, config.label_model_kind(lfs), dataset.labels);
  });
  if (dataset.has_unlabeled_gold()) {
    result.labeling = stage("evaluate_labeling", timings, [&] {
      return evaluate_labeling(result.matrix, result.probs, dataset.unlabeled_with_gold(),
                               dataset.labels.size());
    });
  }
  result.downstream_features = space.tfidf({1, 2});
  result.model = stage("downstream_train", timings, [&] {
    return train_downstream(result.probs, dataset.unlabeled, *result.downstream_features,
                            config.downstream());
  });
  if (!dataset.test.empty()) {
    result.e2e = stage("evaluate_e2e", timings, [&] {
      return evaluate_e2e(*result.model, dataset.test, *result.downstream_features);
    });
  }
  return result;
}

}  // namespace autolf
