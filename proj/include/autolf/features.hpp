#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "autolf/corpus.hpp"
#include "json.hpp"

namespace autolf {

// Lowercases ASCII and splits on anything that is not alphanumeric. Bytes of
// multi-byte UTF-8 sequences count as word characters.
struct Tokenizer {
  bool lowercase = true;
  std::size_t min_token_len = 2;

  std::vector<std::string> tokenize(std::string_view text) const;
};

// Sorted-index sparse vector.
struct SparseVec {
  std::size_t dim = 0;
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t nnz() const { return index.size(); }
  double norm() const;
  double dot(std::span<const double> dense) const;
  std::vector<double> to_dense() const;
  static SparseVec from_dense(std::span<const double> dense);
};

double cosine(std::span<const double> a, std::span<const double> b);

struct NgramRange {
  int min_n = 1;
  int max_n = 2;
  friend bool operator==(const NgramRange&, const NgramRange&) = default;
};

// Contiguous n-grams of `tokens` joined by single spaces.
std::vector<std::string> ngrams(const std::vector<std::string>& tokens,
                                NgramRange range);

class TfidfModel {
 public:
  Tokenizer tokenizer;
  NgramRange ngram_range;
  std::size_t min_df = 1;
  // Terms map to columns in lexicographic order, so fitting is invariant to
  // document order.
  std::map<std::string, std::uint32_t> vocabulary;
  std::vector<double> idf;

  std::size_t dim() const { return idf.size(); }
  SparseVec transform(const Document& doc) const;
  SparseVec transform(std::string_view text) const;

  nlohmann::json to_json() const;
  static TfidfModel from_json(const nlohmann::json& j);
};

// idf_t = ln((1 + N) / (1 + df_t)) + 1 over terms with df >= min_df.
TfidfModel fit_tfidf(std::span<const Document> docs, const Tokenizer& tokenizer,
                     NgramRange range = {}, std::size_t min_df = 1);

std::vector<double> transform_tfidf(const TfidfModel& model, const Document& doc);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> embed(const Document& doc) const = 0;
  virtual std::size_t dim() const = 0;
  // Stable identifier of the provider configuration.
  virtual std::string config_key() const = 0;
};

// Signed feature hashing of tokens and token bigrams, L2-normalized.
class HashingEmbedding final : public EmbeddingProvider {
 public:
  explicit HashingEmbedding(std::size_t dim = 256, Tokenizer tokenizer = {});
  std::vector<double> embed(const Document& doc) const override;
  std::vector<double> embed_text(std::string_view text) const;
  std::size_t dim() const override { return dim_; }
  std::string config_key() const override;

  // Coordinate and sign a term hashes to.
  std::pair<std::size_t, double> slot(std::string_view term) const;

 private:
  std::size_t dim_;
  Tokenizer tokenizer_;
};

struct RemoteEndpoint {
  std::string url;  // scheme://host[:port]/path
  std::string model;
  std::string api_key;
  int timeout_seconds = 30;
  int retries = 3;
  int backoff_ms = 200;
};

// OpenAI-style embeddings endpoint: POST {"model", "input": [text]} and read
// data[0].embedding. Results are cached by (provider hash, doc id) in memory
// and, when a cache path is given, in an append-only JSONL file.
class RemoteEmbedding final : public EmbeddingProvider {
 public:
  RemoteEmbedding(RemoteEndpoint endpoint, std::size_t dim,
                  std::filesystem::path cache_path = {});
  std::vector<double> embed(const Document& doc) const override;
  std::size_t dim() const override { return dim_; }
  std::string config_key() const override;
  std::string provider_hash() const;
  std::size_t remote_calls() const { return remote_calls_; }

 private:
  void load_cache();

  RemoteEndpoint endpoint_;
  std::size_t dim_;
  std::filesystem::path cache_path_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, std::vector<double>> cache_;
  mutable std::size_t remote_calls_ = 0;
};

// Maps a document to the feature vector a classifier consumes.
class Featurizer {
 public:
  virtual ~Featurizer() = default;
  virtual SparseVec featurize(const Document& doc) const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string describe() const = 0;
};

class TfidfFeaturizer final : public Featurizer {
 public:
  explicit TfidfFeaturizer(std::shared_ptr<const TfidfModel> model)
      : model_(std::move(model)) {}
  SparseVec featurize(const Document& doc) const override {
    return model_->transform(doc);
  }
  std::size_t dim() const override { return model_->dim(); }
  std::string describe() const override;
  const TfidfModel& model() const { return *model_; }

 private:
  std::shared_ptr<const TfidfModel> model_;
};

class EmbeddingFeaturizer final : public Featurizer {
 public:
  explicit EmbeddingFeaturizer(std::shared_ptr<const EmbeddingProvider> provider)
      : provider_(std::move(provider)) {}
  SparseVec featurize(const Document& doc) const override {
    return SparseVec::from_dense(provider_->embed(doc));
  }
  std::size_t dim() const override { return provider_->dim(); }
  std::string describe() const override { return "embedding:" + provider_->config_key(); }

 private:
  std::shared_ptr<const EmbeddingProvider> provider_;
};

std::vector<SparseVec> featurize_all(const Featurizer& featurizer,
                                     std::span<const Document> docs);

}  // namespace autolf
