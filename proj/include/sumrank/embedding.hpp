#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sumrank/corpus.hpp"
#include "sumrank/errors.hpp"
#include "sumrank/io.hpp"
#include "sumrank/rouge.hpp"

namespace sumrank {

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

/// dot(a,b) / (|a| |b|), clamped into [-1, 1].
/// Errors on dimension mismatch and on zero-norm input.
inline double cosine_similarity(const EmbeddingVector& a,
                                const EmbeddingVector& b) {
  if (a.dim() != b.dim())
    throw Error("cosine_similarity: dimension mismatch (" +
                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) +
                ")");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw Error("cosine_similarity: zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

/// Source of one embedding per text. Same text always maps to the same vector
/// within one provider instance, and every vector has the same dimension.
/// embed_document defaults to embedding the document text; file-backed
/// providers key documents by id instead.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual EmbeddingVector embed(const std::string& text) const = 0;

  virtual EmbeddingVector embed_document(const Document& doc) const {
    return embed(doc.text);
  }

  virtual std::size_t dim() const = 0;

  /// Stable identity string stored in trained models; scoring requires the
  /// inference-time provider to match the training-time one.
  virtual std::string fingerprint() const = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline double unit_double(std::uint64_t bits) {
  // 53 high bits -> [0, 1)
  return static_cast<double>(bits >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace detail

/// Offline stand-in for a sentence encoder: hashed bag-of-words random
/// projection. Each token hashes to a fixed pseudorandom row in [-1, 1]^dim
/// (derived from the token hash and the provider seed); a text embeds as the
/// count-weighted sum of its token rows. Fully deterministic.
class HashedProjectionProvider final : public EmbeddingProvider {
 public:
  explicit HashedProjectionProvider(std::size_t dim = 256,
                                    std::uint64_t seed = 1)
      : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw ProviderError("embedding dimension must be positive");
  }

  EmbeddingVector embed(const std::string& text) const override {
    EmbeddingVector v;
    v.values.assign(dim_, 0.0);
    for (const auto& token : tokenize(text)) {
      std::uint64_t state = fnv1a64(token) ^ seed_;
      for (std::size_t i = 0; i < dim_; ++i)
        v.values[i] += detail::unit_double(detail::splitmix64(state)) * 2.0 - 1.0;
    }
    return v;
  }

  std::size_t dim() const override { return dim_; }

  std::string fingerprint() const override {
    return "hashed-bow/dim=" + std::to_string(dim_) +
           "/seed=" + std::to_string(seed_);
  }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Embeddings loaded from a JSONL file of {"id": ..., "vector": [...]}
/// records. Documents are looked up by id, free-form queries by the query
/// string itself; a missing key is an error naming that key.
class PrecomputedEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit PrecomputedEmbeddingProvider(const std::string& path) {
    std::uint64_t content_hash = fnv1a64(read_file(path));
    for (const auto& rec : read_jsonl(path)) {
      auto where = [&] { return path + ":" + std::to_string(rec.line); };
      if (!rec.value.contains("id") || !rec.value["id"].is_string())
        throw ProviderError(where() + ": record missing string id");
      if (!rec.value.contains("vector") || !rec.value["vector"].is_array())
        throw ProviderError(where() + ": record missing vector array");
      EmbeddingVector v;
      for (const auto& x : rec.value["vector"]) {
        if (!x.is_number())
          throw ProviderError(where() + ": vector entries must be numbers");
        v.values.push_back(x.get<double>());
      }
      if (v.dim() == 0) throw ProviderError(where() + ": empty vector");
      if (dim_ == 0)
        dim_ = v.dim();
      else if (v.dim() != dim_)
        throw ProviderError(where() + ": vector length " +
                            std::to_string(v.dim()) +
                            " differs from established dimension " +
                            std::to_string(dim_));
      vectors_[rec.value["id"].get<std::string>()] = std::move(v);
    }
    if (vectors_.empty())
      throw ProviderError(path + ": no embedding records");
    fingerprint_ = "precomputed/dim=" + std::to_string(dim_) +
                   "/fnv=" + to_hex(content_hash);
  }

  EmbeddingVector embed(const std::string& text) const override {
    return lookup(text);
  }

  EmbeddingVector embed_document(const Document& doc) const override {
    return lookup(doc.id);
  }

  std::size_t dim() const override { return dim_; }

  std::string fingerprint() const override { return fingerprint_; }

 private:
  EmbeddingVector lookup(const std::string& key) const {
    auto it = vectors_.find(key);
    if (it == vectors_.end())
      throw ProviderError("no precomputed embedding for \"" + key + "\"");
    return it->second;
  }

  std::unordered_map<std::string, EmbeddingVector> vectors_;
  std::size_t dim_ = 0;
  std::string fingerprint_;
};

}  // namespace sumrank
