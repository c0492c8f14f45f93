#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sumrank/io.hpp"
#include "sumrank/rouge.hpp"

namespace sumrank {

/// One corpus record. id is unique within its corpus; text is the source
/// document; summary, when present, is the gold reference.
struct Document {
  std::string id;
  std::string text;
  std::optional<std::string> summary;
  std::optional<std::string> domain;

  bool has_summary() const { return summary.has_value(); }
};

/// Ordered, immutable-after-load document collection. Order is stable across
/// load/save round trips.
struct Corpus {
  std::vector<Document> documents;
  std::string name;

  std::size_t size() const { return documents.size(); }
  bool empty() const { return documents.empty(); }

  const Document* find(const std::string& id) const {
    for (const auto& d : documents)
      if (d.id == id) return &d;
    return nullptr;
  }
};

namespace detail {

inline std::string corpus_name_from_path(const std::string& path) {
  auto slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  auto dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace detail

/// Loads a corpus from a UTF-8 JSONL file: one object per line with fields
/// id (string), text (string), and optional summary / domain strings. Extra
/// fields are ignored. Line order becomes document order. Errors name the
/// offending line.
inline Corpus load_corpus(const std::string& path) {
  Corpus corpus;
  corpus.name = detail::corpus_name_from_path(path);
  std::unordered_map<std::string, std::size_t> first_line;
  for (const auto& rec : read_jsonl(path)) {
    const json& v = rec.value;
    auto where = [&] { return path + ":" + std::to_string(rec.line); };
    if (!v.contains("id") || !v["id"].is_string() ||
        v["id"].get<std::string>().empty())
      throw CorpusError(where() + ": record missing non-empty string id");
    if (!v.contains("text") || !v["text"].is_string() ||
        v["text"].get<std::string>().empty())
      throw CorpusError(where() + ": record missing non-empty string text");
    Document doc;
    doc.id = v["id"].get<std::string>();
    doc.text = v["text"].get<std::string>();
    if (v.contains("summary")) {
      if (!v["summary"].is_string() || v["summary"].get<std::string>().empty())
        throw CorpusError(where() + ": summary must be a non-empty string");
      doc.summary = v["summary"].get<std::string>();
    }
    if (v.contains("domain")) {
      if (!v["domain"].is_string())
        throw CorpusError(where() + ": domain must be a string");
      doc.domain = v["domain"].get<std::string>();
    }
    auto [it, inserted] = first_line.emplace(doc.id, rec.line);
    if (!inserted)
      throw CorpusError(where() + ": duplicate id \"" + doc.id +
                        "\" (first seen at line " + std::to_string(it->second) +
                        ")");
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
  JsonlWriter out(path);
  for (const auto& doc : corpus.documents) {
    json rec;
    rec["id"] = doc.id;
    rec["text"] = doc.text;
    if (doc.summary) rec["summary"] = *doc.summary;
    if (doc.domain) rec["domain"] = *doc.domain;
    out.write(rec);
  }
}

/// Uniform sample of n documents without replacement, preserving the input's
/// relative order. Deterministic for a fixed (corpus, n, seed): selection
/// sampling driven by mt19937_64.
inline Corpus sample_corpus(const Corpus& corpus, std::size_t n,
                            std::uint64_t seed) {
  if (n > corpus.size())
    throw CorpusError("sample_corpus: n = " + std::to_string(n) +
                      " exceeds corpus size " + std::to_string(corpus.size()));
  std::mt19937_64 rng(seed);
  Corpus out;
  out.name = corpus.name;
  std::size_t remaining = corpus.size();
  std::size_t needed = n;
  for (const auto& doc : corpus.documents) {
    if (needed == 0) break;
    // P(select) = needed / remaining; the modulo bias at 64 bits is
    // far below observable.
    if (rng() % remaining < needed) {
      out.documents.push_back(doc);
      --needed;
    }
    --remaining;
  }
  return out;
}

/// Document count and mean token lengths. Documents without a summary are
/// excluded from the summary average; with no summarized documents the
/// summary average is 0 by convention.
struct CorpusStats {
  std::size_t count = 0;
  double avg_text_tokens = 0.0;
  double avg_summary_tokens = 0.0;
};

inline CorpusStats corpus_stats(const Corpus& corpus,
                                const Tokenizer& tok = tokenize) {
  CorpusStats stats;
  stats.count = corpus.size();
  if (corpus.empty()) return stats;
  std::size_t text_tokens = 0, summary_tokens = 0, with_summary = 0;
  for (const auto& doc : corpus.documents) {
    text_tokens += tok(doc.text).size();
    if (doc.summary) {
      summary_tokens += tok(*doc.summary).size();
      ++with_summary;
    }
  }
  stats.avg_text_tokens =
      static_cast<double>(text_tokens) / static_cast<double>(corpus.size());
  if (with_summary > 0)
    stats.avg_summary_tokens = static_cast<double>(summary_tokens) /
                               static_cast<double>(with_summary);
  return stats;
}

}  // namespace sumrank
