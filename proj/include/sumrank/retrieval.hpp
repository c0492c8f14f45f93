#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "sumrank/corpus.hpp"
#include "sumrank/embedding.hpp"
#include "sumrank/errors.hpp"
#include "sumrank/rouge.hpp"

namespace sumrank {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Inverted statistics over one corpus. idf uses the non-negative variant
/// ln((N - df + 0.5) / (df + 0.5) + 1).
struct Bm25Index {
  std::unordered_map<std::string, std::size_t> doc_freq;
  std::vector<std::unordered_map<std::string, std::size_t>> doc_term_freq;
  std::vector<std::size_t> doc_len;
  double avgdl = 0.0;
  double k1 = 1.2;
  double b = 0.75;
  std::vector<std::string> doc_ids;

  std::size_t size() const { return doc_ids.size(); }

  double idf(const std::string& term) const {
    auto it = doc_freq.find(term);
    double df = it == doc_freq.end() ? 0.0 : static_cast<double>(it->second);
    double n = static_cast<double>(size());
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
  }
};

inline Bm25Index build_bm25(const Corpus& corpus, Bm25Params params = {}) {
  if (corpus.empty()) throw Error("build_bm25: empty corpus");
  if (params.k1 <= 0.0) throw Error("build_bm25: k1 must be positive");
  if (params.b < 0.0 || params.b > 1.0)
    throw Error("build_bm25: b must lie in [0, 1]");
  Bm25Index index;
  index.k1 = params.k1;
  index.b = params.b;
  std::size_t total_len = 0;
  for (const auto& doc : corpus.documents) {
    index.doc_ids.push_back(doc.id);
    std::unordered_map<std::string, std::size_t> tf;
    auto tokens = tokenize(doc.text);
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [term, count] : tf) ++index.doc_freq[term];
    index.doc_len.push_back(tokens.size());
    total_len += tokens.size();
    index.doc_term_freq.push_back(std::move(tf));
  }
  index.avgdl =
      static_cast<double>(total_len) / static_cast<double>(corpus.size());
  return index;
}

struct RetrievalHit {
  std::string doc_id;
  double score = 0.0;
};

namespace detail {

/// Sorts scores descending, ties broken by ascending doc id, and keeps the
/// first top_k.
inline std::vector<RetrievalHit> top_hits(
    const std::vector<std::string>& doc_ids, const std::vector<double>& scores,
    std::size_t top_k) {
  std::vector<std::size_t> order(doc_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return doc_ids[a] < doc_ids[b];
  });
  std::vector<RetrievalHit> hits;
  hits.reserve(std::min(top_k, order.size()));
  for (std::size_t i = 0; i < order.size() && i < top_k; ++i)
    hits.push_back({doc_ids[order[i]], scores[order[i]]});
  return hits;
}

}  // namespace detail

/// BM25 score of every indexed document against the query, best first.
/// Query tokens are iterated with multiplicity; terms absent from the index
/// contribute zero. Returns at most top_k hits.
inline std::vector<RetrievalHit> retrieve_sparse(const Bm25Index& index,
                                                 const std::string& query,
                                                 std::size_t top_k) {
  if (top_k < 1) throw Error("retrieve_sparse: top_k must be >= 1");
  auto query_tokens = tokenize(query);
  std::vector<double> scores(index.size(), 0.0);
  for (const auto& term : query_tokens) {
    double idf = index.idf(term);
    for (std::size_t d = 0; d < index.size(); ++d) {
      auto it = index.doc_term_freq[d].find(term);
      if (it == index.doc_term_freq[d].end()) continue;
      double tf = static_cast<double>(it->second);
      double len_norm = index.avgdl > 0.0
                            ? static_cast<double>(index.doc_len[d]) / index.avgdl
                            : 0.0;
      scores[d] += idf * tf * (index.k1 + 1.0) /
                   (tf + index.k1 * (1.0 - index.b + index.b * len_norm));
    }
  }
  return detail::top_hits(index.doc_ids, scores, top_k);
}

/// Cosine similarity between the query embedding and each document
/// embedding, best first. Provider failures are rethrown with the document id
/// attached.
inline std::vector<RetrievalHit> retrieve_dense(const EmbeddingProvider& provider,
                                                const Corpus& corpus,
                                                const std::string& query,
                                                std::size_t top_k) {
  if (top_k < 1) throw Error("retrieve_dense: top_k must be >= 1");
  EmbeddingVector query_vec = provider.embed(query);
  std::vector<std::string> ids;
  std::vector<double> scores;
  ids.reserve(corpus.size());
  scores.reserve(corpus.size());
  for (const auto& doc : corpus.documents) {
    try {
      scores.push_back(cosine_similarity(query_vec, provider.embed_document(doc)));
    } catch (const Error& e) {
      throw ProviderError("doc \"" + doc.id + "\": " + e.what());
    }
    ids.push_back(doc.id);
  }
  return detail::top_hits(ids, scores, top_k);
}

/// Token-level similarity: ROUGE-L F1 between query and document text,
/// best first.
inline std::vector<RetrievalHit> retrieve_rouge(const Corpus& corpus,
                                                const std::string& query,
                                                std::size_t top_k) {
  if (top_k < 1) throw Error("retrieve_rouge: top_k must be >= 1");
  auto query_tokens = tokenize(query);
  std::vector<std::string> ids;
  std::vector<double> scores;
  for (const auto& doc : corpus.documents) {
    ids.push_back(doc.id);
    scores.push_back(rouge_l(query_tokens, tokenize(doc.text)).f1);
  }
  return detail::top_hits(ids, scores, top_k);
}

enum class RetrievalStrategy { bm25, dense, rouge };

inline const char* to_string(RetrievalStrategy s) {
  switch (s) {
    case RetrievalStrategy::bm25:
      return "bm25";
    case RetrievalStrategy::dense:
      return "dense";
    case RetrievalStrategy::rouge:
      return "rouge";
  }
  return "?";
}

inline RetrievalStrategy parse_strategy(const std::string& name) {
  if (name == "bm25") return RetrievalStrategy::bm25;
  if (name == "dense") return RetrievalStrategy::dense;
  if (name == "rouge") return RetrievalStrategy::rouge;
  throw ConfigError("unknown retrieval strategy \"" + name +
                    "\" (expected bm25, dense, or rouge)");
}

/// Picks the one in-context demonstration for an inference document.
/// Only pool documents carrying a gold summary are eligible. The sparse index
/// (or provider handle) is built once and reused across queries.
class DemonstrationSelector {
 public:
  DemonstrationSelector(RetrievalStrategy strategy, const Corpus& pool,
                        const EmbeddingProvider* provider = nullptr,
                        Bm25Params params = {})
      : strategy_(strategy), provider_(provider) {
    pool_.name = pool.name;
    for (const auto& doc : pool.documents)
      if (doc.has_summary()) pool_.documents.push_back(doc);
    if (pool_.empty())
      throw Error("demonstration pool has no document with a summary");
    if (strategy_ == RetrievalStrategy::bm25)
      index_ = build_bm25(pool_, params);
    if (strategy_ == RetrievalStrategy::dense && provider_ == nullptr)
      throw Error("dense demonstration selection requires an embedding provider");
  }

  /// Top-1 demonstration for the document. With exclude_self, a pool entry
  /// sharing the inference document's id is skipped.
  Document select(const Document& inference_doc, bool exclude_self) const {
    // Ids are unique, so at most one hit can be the document itself.
    std::size_t top_k = exclude_self ? 2 : 1;
    std::vector<RetrievalHit> hits;
    switch (strategy_) {
      case RetrievalStrategy::bm25:
        hits = retrieve_sparse(index_, inference_doc.text, top_k);
        break;
      case RetrievalStrategy::dense:
        hits = retrieve_dense(*provider_, pool_, inference_doc.text, top_k);
        break;
      case RetrievalStrategy::rouge:
        hits = retrieve_rouge(pool_, inference_doc.text, top_k);
        break;
    }
    for (const auto& hit : hits) {
      if (exclude_self && hit.doc_id == inference_doc.id) continue;
      return *pool_.find(hit.doc_id);
    }
    throw Error("no demonstration available for doc \"" + inference_doc.id +
                "\" after excluding itself");
  }

  const Corpus& eligible_pool() const { return pool_; }

  /// The most similar possible demonstration: the inference document itself,
  /// which must carry its gold summary.
  static Document upper_bound(const Document& inference_doc) {
    if (!inference_doc.has_summary())
      throw Error("upper-bound demonstration requires a gold summary on doc \"" +
                  inference_doc.id + "\"");
    return inference_doc;
  }

 private:
  RetrievalStrategy strategy_;
  Corpus pool_;
  const EmbeddingProvider* provider_;
  Bm25Index index_;
};

inline Document select_demonstration(RetrievalStrategy strategy,
                                     const Corpus& pool,
                                     const Document& inference_doc,
                                     bool exclude_self,
                                     const EmbeddingProvider* provider = nullptr,
                                     Bm25Params params = {}) {
  DemonstrationSelector selector(strategy, pool, provider, params);
  return selector.select(inference_doc, exclude_self);
}

}  // namespace sumrank
