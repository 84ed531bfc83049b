#include "autolf/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "autolf/errors.hpp"
#include "autolf/http.hpp"
#include "autolf/rng.hpp"

namespace autolf {

using nlohmann::json;

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

void l2_normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  if (s == 0.0) return;
  const double n = std::sqrt(s);
  for (double& x : v) x /= n;
}

}  // namespace

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= min_token_len && !cur.empty()) tokens.push_back(cur);
    cur.clear();
  };
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      cur += lowercase && c < 0x80 ? static_cast<char>(std::tolower(c))
                                   : static_cast<char>(c);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

double SparseVec::norm() const {
  double s = 0.0;
  for (double v : value) s += v * v;
  return std::sqrt(s);
}

double SparseVec::dot(std::span<const double> dense) const {
  if (dense.size() != dim) {
    throw DimensionMismatch("expected " + std::to_string(dim) + ", got " +
                            std::to_string(dense.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < index.size(); ++i) s += value[i] * dense[index[i]];
  return s;
}

std::vector<double> SparseVec::to_dense() const {
  std::vector<double> out(dim, 0.0);
  for (std::size_t i = 0; i < index.size(); ++i) out[index[i]] = value[i];
  return out;
}

SparseVec SparseVec::from_dense(std::span<const double> dense) {
  SparseVec v;
  v.dim = dense.size();
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      v.index.push_back(static_cast<std::uint32_t>(i));
      v.value.push_back(dense[i]);
    }
  }
  return v;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("cosine of unequal lengths");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens,
                                NgramRange range) {
  std::vector<std::string> out;
  for (int n = range.min_n; n <= range.max_n; ++n) {
    const auto un = static_cast<std::size_t>(n);
    if (un == 0 || tokens.size() < un) continue;
    for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
      std::string g = tokens[i];
      for (std::size_t k = 1; k < un; ++k) {
        g += ' ';
        g += tokens[i + k];
      }
      out.push_back(std::move(g));
    }
  }
  return out;
}

SparseVec TfidfModel::transform(const Document& doc) const {
  return transform(std::string_view(doc.text));
}

SparseVec TfidfModel::transform(std::string_view text) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& g : ngrams(tokenizer.tokenize(text), ngram_range)) {
    auto it = vocabulary.find(g);
    if (it != vocabulary.end()) counts[it->second] += 1.0;
  }
  SparseVec v;
  v.dim = dim();
  double sq = 0.0;
  for (const auto& [col, tf] : counts) {
    const double w = tf * idf[col];
    v.index.push_back(col);
    v.value.push_back(w);
    sq += w * w;
  }
  if (sq > 0.0) {
    const double n = std::sqrt(sq);
    for (double& x : v.value) x /= n;
  }
  return v;
}

json TfidfModel::to_json() const {
  json vocab = json::object();
  for (const auto& [term, col] : vocabulary) vocab[term] = col;
  return {{"tokenizer",
           {{"lowercase", tokenizer.lowercase}, {"min_token_len", tokenizer.min_token_len}}},
          {"ngram_range", {ngram_range.min_n, ngram_range.max_n}},
          {"min_df", min_df},
          {"vocabulary", vocab},
          {"idf", idf}};
}

TfidfModel TfidfModel::from_json(const json& j) {
  TfidfModel m;
  m.tokenizer.lowercase = j.at("tokenizer").at("lowercase").get<bool>();
  m.tokenizer.min_token_len = j.at("tokenizer").at("min_token_len").get<std::size_t>();
  m.ngram_range = {j.at("ngram_range").at(0).get<int>(), j.at("ngram_range").at(1).get<int>()};
  m.min_df = j.at("min_df").get<std::size_t>();
  for (const auto& [term, col] : j.at("vocabulary").items()) {
    m.vocabulary[term] = col.get<std::uint32_t>();
  }
  m.idf = j.at("idf").get<std::vector<double>>();
  if (m.idf.size() != m.vocabulary.size()) {
    throw PreconditionError("tfidf model: idf and vocabulary sizes differ");
  }
  return m;
}

TfidfModel fit_tfidf(std::span<const Document> docs, const Tokenizer& tokenizer,
                     NgramRange range, std::size_t min_df) {
  if (docs.empty()) throw PreconditionError("fit_tfidf needs at least one document");
  std::map<std::string, std::size_t> df;
  for (const auto& d : docs) {
    auto grams = ngrams(tokenizer.tokenize(d.text), range);
    std::set<std::string> uniq(grams.begin(), grams.end());
    for (const auto& g : uniq) ++df[g];
  }
  TfidfModel m;
  m.tokenizer = tokenizer;
  m.ngram_range = range;
  m.min_df = min_df;
  const double n = static_cast<double>(docs.size());
  for (const auto& [term, count] : df) {
    if (count < min_df) continue;
    m.vocabulary.emplace(term, static_cast<std::uint32_t>(m.idf.size()));
    m.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  if (m.vocabulary.empty()) throw EmptyVocabulary("no terms survive tokenization");
  return m;
}

std::vector<double> transform_tfidf(const TfidfModel& model, const Document& doc) {
  return model.transform(doc).to_dense();
}

HashingEmbedding::HashingEmbedding(std::size_t dim, Tokenizer tokenizer)
    : dim_(dim), tokenizer_(tokenizer) {
  if (dim == 0) throw PreconditionError("embedding dim must be positive");
}

std::pair<std::size_t, double> HashingEmbedding::slot(std::string_view term) const {
  constexpr std::uint64_t kIndexSeed = 0x9e3779b97f4a7c15ULL;
  constexpr std::uint64_t kSignSeed = 0xc2b2ae3d27d4eb4fULL;
  const std::size_t idx = fnv1a(term, kIndexSeed) % dim_;
  const double sign = (fnv1a(term, kSignSeed) >> 63) ? 1.0 : -1.0;
  return {idx, sign};
}

std::vector<double> HashingEmbedding::embed_text(std::string_view text) const {
  std::vector<double> v(dim_, 0.0);
  for (const auto& g : ngrams(tokenizer_.tokenize(text), {1, 2})) {
    auto [idx, sign] = slot(g);
    v[idx] += sign;
  }
  l2_normalize(v);
  return v;
}

std::vector<double> HashingEmbedding::embed(const Document& doc) const {
  return embed_text(doc.text);
}

std::string HashingEmbedding::config_key() const {
  return "hashing/" + std::to_string(dim_) + "/" + std::to_string(tokenizer_.min_token_len);
}

RemoteEmbedding::RemoteEmbedding(RemoteEndpoint endpoint, std::size_t dim,
                                 std::filesystem::path cache_path)
    : endpoint_(std::move(endpoint)), dim_(dim), cache_path_(std::move(cache_path)) {
  load_cache();
}

std::string RemoteEmbedding::config_key() const {
  return "remote/" + endpoint_.url + "/" + endpoint_.model + "/" + std::to_string(dim_);
}

std::string RemoteEmbedding::provider_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config_key())));
  return buf;
}

void RemoteEmbedding::load_cache() {
  if (cache_path_.empty() || !std::filesystem::exists(cache_path_)) return;
  std::ifstream in(cache_path_);
  std::string line;
  const std::string mine = provider_hash();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      continue;  // torn trailing line from an interrupted run
    }
    if (j.value("provider_hash", "") != mine) continue;
    auto vec = j.at("vector").get<std::vector<double>>();
    if (vec.size() == dim_) cache_[j.at("doc_id").get<std::string>()] = std::move(vec);
  }
}

std::vector<double> RemoteEmbedding::embed(const Document& doc) const {
  std::lock_guard lock(mu_);
  if (auto it = cache_.find(doc.id); it != cache_.end()) return it->second;
  std::vector<double> vec;
  if (doc.text.empty()) {
    vec.assign(dim_, 0.0);
  } else {
    json reply = post_json(endpoint_.url, {{"model", endpoint_.model}, {"input", {doc.text}}},
                           endpoint_.api_key, endpoint_.timeout_seconds,
                           endpoint_.retries, endpoint_.backoff_ms);
    ++remote_calls_;
    try {
      vec = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception&) {
      throw MalformedProviderReply(reply.dump().substr(0, 200));
    }
    if (vec.size() != dim_) {
      throw DimensionMismatch("remote embedding has dim " + std::to_string(vec.size()) +
                              ", configured " + std::to_string(dim_));
    }
    l2_normalize(vec);
  }
  if (!cache_path_.empty()) {
    std::ofstream out(cache_path_, std::ios::app);
    out << json{{"doc_id", doc.id}, {"provider_hash", provider_hash()}, {"vector", vec}}.dump()
        << '\n';
  }
  cache_[doc.id] = vec;
  return vec;
}

std::string TfidfFeaturizer::describe() const {
  return "tfidf:" + std::to_string(model_->ngram_range.min_n) + "-" +
         std::to_string(model_->ngram_range.max_n) + "/" + std::to_string(model_->dim());
}

std::vector<SparseVec> featurize_all(const Featurizer& featurizer,
                                     std::span<const Document> docs) {
  std::vector<SparseVec> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(featurizer.featurize(d));
  return out;
}

}  // namespace autolf
