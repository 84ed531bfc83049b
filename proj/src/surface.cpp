#include "autolf/surface.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

#include "autolf/errors.hpp"
#include "autolf/http.hpp"
#include "autolf/rng.hpp"

namespace autolf {

using nlohmann::json;

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Surface:
      return "surface";
    case Category::Structural:
      return "structural";
    case Category::Semantic:
      return "semantic";
  }
  return "?";
}

Category category_from_string(std::string_view s) {
  if (s == "surface") return Category::Surface;
  if (s == "structural") return Category::Structural;
  if (s == "semantic") return Category::Semantic;
  throw PreconditionError("unknown category: " + std::string(s));
}

namespace {

const Tokenizer kMatchTokenizer{true, 1};

std::string lower_trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool contains_phrase(const std::vector<std::string>& doc,
                     const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > doc.size()) return false;
  return std::search(doc.begin(), doc.end(), phrase.begin(), phrase.end()) != doc.end();
}

}  // namespace

void SurfaceRule::normalize(std::size_t num_classes) {
  std::map<ClassIndex, std::set<std::string>> out;
  for (const auto& [cls, pats] : patterns) {
    if (cls < 0 || static_cast<std::size_t>(cls) >= num_classes) {
      throw PreconditionError("surface rule class index out of range: " + std::to_string(cls));
    }
    auto& dst = out[cls];
    for (const auto& p : pats) {
      auto n = lower_trim(p);
      if (!n.empty()) dst.insert(std::move(n));
    }
  }
  patterns = std::move(out);
}

std::set<std::string> SurfaceRule::all_patterns() const {
  std::set<std::string> all;
  for (const auto& [cls, pats] : patterns) all.insert(pats.begin(), pats.end());
  return all;
}

bool SurfaceRule::empty() const {
  return std::all_of(patterns.begin(), patterns.end(),
                     [](const auto& kv) { return kv.second.empty(); });
}

WeakLabel eval_surface(const SurfaceRule& rule, const Document& doc) {
  return eval_surface(rule, std::string_view(doc.text));
}

WeakLabel eval_surface(const SurfaceRule& rule, std::string_view text) {
  std::vector<std::string> doc_tokens;
  std::string lowered;
  if (rule.match_mode == MatchMode::Token) {
    doc_tokens = kMatchTokenizer.tokenize(text);
  } else {
    lowered = lower_trim(text);
  }
  ClassIndex matched = kAbstain;
  for (const auto& [cls, pats] : rule.patterns) {
    const bool hit = std::any_of(pats.begin(), pats.end(), [&](const std::string& p) {
      if (rule.match_mode == MatchMode::Token) {
        return contains_phrase(doc_tokens, kMatchTokenizer.tokenize(p));
      }
      return lowered.find(p) != std::string::npos;
    });
    if (!hit) continue;
    if (matched != kAbstain) return WeakLabel::abstain();  // conflict
    matched = cls;
  }
  return WeakLabel::of(matched);
}

double surface_similarity(const SurfaceRule& a, const SurfaceRule& b) {
  const auto sa = a.all_patterns();
  const auto sb = b.all_patterns();
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& p : sa) inter += sb.count(p);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

json surface_rule_to_json(const std::string& id, const SurfaceRule& rule,
                          const LabelSpace& labels) {
  json pats = json::object();
  for (const auto& [cls, set] : rule.patterns) {
    pats[labels.name(cls)] = std::vector<std::string>(set.begin(), set.end());
  }
  return {{"id", id},
          {"match_mode", rule.match_mode == MatchMode::Token ? "token" : "substring"},
          {"patterns", pats}};
}

std::pair<std::string, SurfaceRule> surface_rule_from_json(const json& j,
                                                           const LabelSpace& labels) {
  if (!j.is_object()) throw PreconditionError("rule is not an object");
  SurfaceRule rule;
  std::string id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : "";
  const std::string mode = j.value("match_mode", "token");
  if (mode == "token") {
    rule.match_mode = MatchMode::Token;
  } else if (mode == "substring") {
    rule.match_mode = MatchMode::Substring;
  } else {
    throw PreconditionError("unknown match_mode: " + mode);
  }
  if (!j.contains("patterns") || !j["patterns"].is_object()) {
    throw PreconditionError("rule lacks a \"patterns\" object");
  }
  for (const auto& [name, list] : j["patterns"].items()) {
    auto idx = labels.index_of(name);
    if (!idx) throw UnknownLabel(name);
    if (!list.is_array()) throw PreconditionError("patterns for " + name + " not an array");
    auto& dst = rule.patterns[*idx];
    for (const auto& p : list) {
      if (!p.is_string()) throw PreconditionError("pattern is not a string");
      dst.insert(p.get<std::string>());
    }
  }
  rule.normalize(labels.size());
  if (rule.empty()) throw PreconditionError("rule has no patterns");
  return {std::move(id), std::move(rule)};
}

std::vector<TokenScore> rank_discriminative_tokens(
    const std::vector<std::pair<std::string, std::string>>& examples,
    const std::string& cls, const Tokenizer& tokenizer) {
  std::map<std::string, std::pair<double, double>> df;  // (in class, out of class)
  double n_in = 0.0, n_out = 0.0;
  for (const auto& [text, label] : examples) {
    const bool in = label == cls;
    (in ? n_in : n_out) += 1.0;
    auto toks = tokenizer.tokenize(text);
    std::set<std::string> uniq(toks.begin(), toks.end());
    for (const auto& t : uniq) {
      auto& [a, b] = df[t];
      (in ? a : b) += 1.0;
    }
  }
  auto logit = [](double p) { return std::log(p / (1.0 - p)); };
  std::vector<TokenScore> ranked;
  for (const auto& [tok, counts] : df) {
    const double p_in = (counts.first + 1.0) / (n_in + 2.0);
    const double p_out = (counts.second + 1.0) / (n_out + 2.0);
    const double score = logit(p_in) - logit(p_out);
    if (score > 0.0) ranked.push_back({tok, score});
  }
  std::sort(ranked.begin(), ranked.end(), [](const TokenScore& a, const TokenScore& b) {
    if (a.log_odds != b.log_odds) return a.log_odds > b.log_odds;
    return a.token < b.token;
  });
  return ranked;
}

OfflineSurfaceProvider::OfflineSurfaceProvider(std::uint64_t rng_seed, std::size_t top_t,
                                               Tokenizer tokenizer)
    : rng_seed_(rng_seed), top_t_(top_t), tokenizer_(tokenizer) {}

GenerationResult OfflineSurfaceProvider::generate(const GenerationRequest& request) const {
  if (request.count < 1) throw PreconditionError("generation count must be >= 1");
  const auto count = static_cast<std::size_t>(request.count);
  const std::size_t pool_size = std::max(top_t_, count);
  Rng rng = make_rng(rng_seed_);
  std::vector<SurfaceRule> rules(count);
  for (std::size_t c = 0; c < request.class_names.size(); ++c) {
    auto ranked = rank_discriminative_tokens(request.examples, request.class_names[c], tokenizer_);
    std::vector<std::string> pool;
    for (std::size_t i = 0; i < ranked.size() && i < pool_size; ++i) {
      pool.push_back(ranked[i].token);
    }
    shuffle(pool, rng);
    // Rule k takes [k*P/count, (k+1)*P/count) of the shuffled pool.
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t lo = k * pool_size / count;
      const std::size_t hi = (k + 1) * pool_size / count;
      for (std::size_t i = lo; i < hi && i < pool.size(); ++i) {
        rules[k].patterns[static_cast<ClassIndex>(c)].insert(pool[i]);
      }
    }
  }
  GenerationResult out;
  for (auto& r : rules) {
    r.normalize(request.class_names.size());
    if (!r.empty()) out.rules.push_back(std::move(r));
  }
  return out;
}

std::string build_generation_prompt(const GenerationRequest& request) {
  std::ostringstream p;
  p << "Task Description:\n" << request.task_description << "\n\n";
  p << "Available Labels (zero-based index: name):\n";
  for (std::size_t i = 0; i < request.class_names.size(); ++i) {
    p << "  " << i << ": " << request.class_names[i] << "\n";
  }
  if (!request.examples.empty()) {
    p << "\nLabeled examples:\n";
    for (const auto& [text, label] : request.examples) {
      p << "  [" << label << "] " << text << "\n";
    }
  }
  if (!request.coverage_gap_classes.empty()) {
    p << "\nCurrent labeling functions rarely vote for: ";
    for (std::size_t i = 0; i < request.coverage_gap_classes.size(); ++i) {
      p << (i ? ", " : "") << request.coverage_gap_classes[i];
    }
    p << ". Prefer keywords for these classes.\n";
  }
  p << "\nWrite " << request.count
    << " keyword labeling rules. Each rule lists lowercase keywords or short phrases "
       "per label; a document receives a label when it contains one of that label's "
       "keywords. Reply with a JSON array only, each element of the form\n"
       "{\"id\": \"rule_1\", \"match_mode\": \"token\", \"patterns\": {\"<label name>\": "
       "[\"keyword\", ...]}}\n";
  return p.str();
}

std::optional<json> extract_json_array(const std::string& reply) {
  for (std::size_t start = reply.find('['); start != std::string::npos;
       start = reply.find('[', start + 1)) {
    // Scan to the matching bracket, honoring strings.
    int depth = 0;
    bool in_str = false, esc = false;
    for (std::size_t i = start; i < reply.size(); ++i) {
      const char c = reply[i];
      if (in_str) {
        if (esc) {
          esc = false;
        } else if (c == '\\') {
          esc = true;
        } else if (c == '"') {
          in_str = false;
        }
        continue;
      }
      if (c == '"') {
        in_str = true;
      } else if (c == '[') {
        ++depth;
      } else if (c == ']' && --depth == 0) {
        auto parsed = json::parse(reply.substr(start, i - start + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_array()) return parsed;
        break;
      }
    }
  }
  return std::nullopt;
}

GenerationResult parse_rule_reply(const std::string& reply,
                                  const std::vector<std::string>& class_names) {
  auto arr = extract_json_array(reply);
  if (!arr) throw MalformedProviderReply(reply.substr(0, 200));
  const LabelSpace labels(class_names);
  GenerationResult out;
  for (const auto& item : *arr) {
    try {
      out.rules.push_back(surface_rule_from_json(item, labels).second);
    } catch (const Error&) {
      ++out.warnings;
    }
  }
  if (out.rules.empty()) throw MalformedProviderReply(reply.substr(0, 200));
  return out;
}

std::optional<RemoteEndpoint> RemoteLlmProvider::endpoint_from_env() {
  const char* url = std::getenv("AUTOLF_LLM_ENDPOINT");
  if (!url || !*url) return std::nullopt;
  RemoteEndpoint ep;
  ep.url = url;
  if (const char* m = std::getenv("AUTOLF_LLM_MODEL")) ep.model = m;
  if (const char* k = std::getenv("AUTOLF_LLM_API_KEY")) ep.api_key = k;
  return ep;
}

GenerationResult RemoteLlmProvider::generate(const GenerationRequest& request) const {
  if (request.count < 1) throw PreconditionError("generation count must be >= 1");
  const json body = {
      {"model", endpoint_.model},
      {"temperature", 0},
      {"messages",
       {{{"role", "system"},
         {"content", "You write keyword labeling rules for text classification."}},
        {{"role", "user"}, {"content", build_generation_prompt(request)}}}}};
  const json reply = post_json(endpoint_.url, body, endpoint_.api_key,
                               endpoint_.timeout_seconds, endpoint_.retries,
                               endpoint_.backoff_ms);
  std::string content;
  try {
    content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw MalformedProviderReply(reply.dump().substr(0, 200));
  }
  return parse_rule_reply(content, request.class_names);
}

GenerationResult generate_surface_lfs(const LfProvider& provider,
                                      const GenerationRequest& request) {
  if (request.count < 1) throw PreconditionError("generation count must be >= 1");
  auto result = provider.generate(request);
  if (result.rules.size() > static_cast<std::size_t>(request.count)) {
    result.rules.resize(static_cast<std::size_t>(request.count));
  }
  return result;
}

}  // namespace autolf
