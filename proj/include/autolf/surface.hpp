#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "autolf/corpus.hpp"
#include "autolf/features.hpp"
#include "autolf/types.hpp"
#include "json.hpp"

namespace autolf {

enum class MatchMode { Token, Substring };

// Keyword rule: votes class k when patterns of exactly one class match.
struct SurfaceRule {
  std::map<ClassIndex, std::set<std::string>> patterns;
  MatchMode match_mode = MatchMode::Token;

  // Lowercases and trims every pattern, drops empty ones. Throws
  // PreconditionError for class indices outside [0, num_classes).
  void normalize(std::size_t num_classes);
  std::set<std::string> all_patterns() const;
  bool empty() const;

  friend bool operator==(const SurfaceRule&, const SurfaceRule&) = default;
};

WeakLabel eval_surface(const SurfaceRule& rule, const Document& doc);
WeakLabel eval_surface(const SurfaceRule& rule, std::string_view text);

// Jaccard similarity of the class-agnostic pattern unions. Two empty rules
// count as identical.
double surface_similarity(const SurfaceRule& a, const SurfaceRule& b);

nlohmann::json surface_rule_to_json(const std::string& id, const SurfaceRule& rule,
                                    const LabelSpace& labels);
// Throws PreconditionError or UnknownLabel on schema violations.
std::pair<std::string, SurfaceRule> surface_rule_from_json(const nlohmann::json& j,
                                                           const LabelSpace& labels);

struct GenerationRequest {
  std::string task_description;
  std::vector<std::string> class_names;
  std::vector<std::pair<std::string, std::string>> examples;  // (text, class name)
  int count = 1;
  // Classes whose share of weak votes lags their seed prior, most lagging
  // first. Filled from the exploitation loop's coverage-gap feedback.
  std::vector<std::string> coverage_gap_classes;
};

struct GenerationResult {
  std::vector<SurfaceRule> rules;
  int warnings = 0;
};

class LfProvider {
 public:
  virtual ~LfProvider() = default;
  virtual GenerationResult generate(const GenerationRequest& request) const = 0;
  virtual std::string kind() const = 0;
};

// Builds rules from class-discriminative seed tokens: tokens are ranked per
// class by add-1 smoothed log-odds over the request's examples, the top
// max(top_t, count) per class are shuffled with the provider seed, and rule k
// takes the k-th disjoint slice from every class.
class OfflineSurfaceProvider final : public LfProvider {
 public:
  explicit OfflineSurfaceProvider(std::uint64_t rng_seed, std::size_t top_t = 5,
                                  Tokenizer tokenizer = {});
  GenerationResult generate(const GenerationRequest& request) const override;
  std::string kind() const override { return "offline_seeded"; }

 private:
  std::uint64_t rng_seed_;
  std::size_t top_t_;
  Tokenizer tokenizer_;
};

struct TokenScore {
  std::string token;
  double log_odds = 0.0;
};

// Tokens with positive smoothed log-odds for `cls`, best first, ties by token.
std::vector<TokenScore> rank_discriminative_tokens(
    const std::vector<std::pair<std::string, std::string>>& examples,
    const std::string& cls, const Tokenizer& tokenizer);

// Chat-completions client. The reply must embed a JSON array of rule
// objects; the first well-formed array is used.
class RemoteLlmProvider final : public LfProvider {
 public:
  explicit RemoteLlmProvider(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  GenerationResult generate(const GenerationRequest& request) const override;
  std::string kind() const override { return "remote_llm"; }

  // Reads AUTOLF_LLM_ENDPOINT, AUTOLF_LLM_MODEL, AUTOLF_LLM_API_KEY.
  static std::optional<RemoteEndpoint> endpoint_from_env();

 private:
  RemoteEndpoint endpoint_;
};

std::string build_generation_prompt(const GenerationRequest& request);

// Extracts the first substring of `reply` that parses as a JSON array.
std::optional<nlohmann::json> extract_json_array(const std::string& reply);

// Validates each element as a rule object; invalid elements count as warnings.
GenerationResult parse_rule_reply(const std::string& reply,
                                  const std::vector<std::string>& class_names);

// Returns up to request.count rules. Throws PreconditionError for count < 1.
GenerationResult generate_surface_lfs(const LfProvider& provider,
                                      const GenerationRequest& request);

}  // namespace autolf
