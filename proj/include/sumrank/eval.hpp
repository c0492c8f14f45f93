#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sumrank/chat.hpp"
#include "sumrank/corpus.hpp"
#include "sumrank/embedding.hpp"
#include "sumrank/errors.hpp"
#include "sumrank/generate.hpp"
#include "sumrank/io.hpp"
#include "sumrank/ranker.hpp"
#include "sumrank/retrieval.hpp"
#include "sumrank/rouge.hpp"

namespace sumrank {

enum class EvalMode {
  zero,
  random_demo,
  random_demo_no_summary,
  similar_demo,
  similar_demo_no_summary,
  upper_bound,
  pads
};

inline const char* to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::zero:
      return "zero";
    case EvalMode::random_demo:
      return "random_demo";
    case EvalMode::random_demo_no_summary:
      return "random_demo_no_summary";
    case EvalMode::similar_demo:
      return "similar_demo";
    case EvalMode::similar_demo_no_summary:
      return "similar_demo_no_summary";
    case EvalMode::upper_bound:
      return "upper_bound";
    case EvalMode::pads:
      return "pads";
  }
  return "?";
}

inline EvalMode parse_mode(const std::string& name) {
  for (EvalMode mode :
       {EvalMode::zero, EvalMode::random_demo, EvalMode::random_demo_no_summary,
        EvalMode::similar_demo, EvalMode::similar_demo_no_summary,
        EvalMode::upper_bound, EvalMode::pads})
    if (name == to_string(mode)) return mode;
  throw ConfigError("unknown eval mode \"" + name + "\"");
}

inline bool mode_uses_demo(EvalMode mode) { return mode != EvalMode::zero; }

inline bool mode_uses_demo_summary(EvalMode mode) {
  return mode != EvalMode::random_demo_no_summary &&
         mode != EvalMode::similar_demo_no_summary;
}

struct DocumentRow {
  std::string doc_id;
  std::size_t selected = 0;
  std::vector<double> candidate_rouge_l;
};

struct EvalReport {
  std::string mode;
  RougeReport rouge;
  std::size_t n_evaluated = 0;
  std::size_t n_skipped = 0;
  std::vector<DocumentRow> rows;
  std::vector<SkipRecord> skips;
};

struct EvalOptions {
  GenerationConfig generation;
  RetrievalStrategy strategy = RetrievalStrategy::bm25;
  Bm25Params bm25;
  std::uint64_t seed = 1;     // random_demo draw stream
  std::size_t parallelism = 4;
  bool exclude_self = false;  // skip the pool entry sharing the inference id
};

/// Highest-ROUGE-L candidate against the gold; ties go to the lowest index.
/// The reachable upper reference for any reranker.
inline std::size_t oracle_select(const std::vector<std::string>& candidates,
                                 const std::string& gold,
                                 const Tokenizer& tok = tokenize) {
  if (gold.empty()) throw Error("oracle_select: gold must be non-empty");
  if (candidates.empty()) throw Error("oracle_select: no candidates");
  TokenList gold_tokens = tok(gold);
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double score = rouge_l(tok(candidates[i]), gold_tokens).f1;
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

namespace detail {

/// Demonstrations are fixed sequentially before any generation runs, so the
/// random stream and retrieval results never depend on thread scheduling.
inline std::vector<std::optional<Document>> pick_demonstrations(
    EvalMode mode, const Corpus& test, const Corpus& pool,
    const EmbeddingProvider* provider, const EvalOptions& options) {
  std::vector<std::optional<Document>> demos(test.size());
  if (!mode_uses_demo(mode)) return demos;

  if (mode == EvalMode::upper_bound) {
    for (std::size_t i = 0; i < test.size(); ++i)
      demos[i] = DemonstrationSelector::upper_bound(test.documents[i]);
    return demos;
  }

  if (mode == EvalMode::random_demo ||
      mode == EvalMode::random_demo_no_summary) {
    Corpus eligible;
    for (const auto& doc : pool.documents)
      if (doc.has_summary()) eligible.documents.push_back(doc);
    if (eligible.empty())
      throw Error("demonstration pool has no document with a summary");
    std::mt19937_64 rng(options.seed);
    for (std::size_t i = 0; i < test.size(); ++i) {
      const Document* demo = nullptr;
      do {
        demo = &eligible.documents[rng() % eligible.size()];
      } while (options.exclude_self && demo->id == test.documents[i].id &&
               eligible.size() > 1);
      if (options.exclude_self && demo->id == test.documents[i].id)
        throw Error("cannot exclude doc \"" + demo->id +
                    "\" from a single-document pool");
      demos[i] = *demo;
    }
    return demos;
  }

  if (mode == EvalMode::similar_demo ||
      mode == EvalMode::similar_demo_no_summary || mode == EvalMode::pads) {
    DemonstrationSelector selector(options.strategy, pool, provider,
                                   options.bm25);
    for (std::size_t i = 0; i < test.size(); ++i)
      demos[i] = selector.select(test.documents[i], options.exclude_self);
    return demos;
  }

  throw Error("unhandled eval mode");
}

}  // namespace detail

/// Runs one experimental arm over the test corpus: pick demonstrations,
/// generate (k candidates, or one summary in zero mode), select per mode,
/// and aggregate macro ROUGE over the evaluated documents.
inline EvalReport run_mode(EvalMode mode, const Corpus& test, const Corpus& pool,
                           ChatTransport& transport,
                           const EmbeddingProvider* provider,
                           const RankerModel* model,
                           const EvalOptions& options) {
  options.generation.validate();
  if (test.empty()) throw Error("run_mode: empty test corpus");
  for (const auto& doc : test.documents)
    if (!doc.has_summary())
      throw Error("test doc \"" + doc.id + "\" has no gold summary to score against");
  if (mode == EvalMode::pads && model == nullptr)
    throw Error("pads mode requires a ranker model");
  if (options.strategy == RetrievalStrategy::dense &&
      mode_uses_demo(mode) && mode != EvalMode::upper_bound &&
      mode != EvalMode::random_demo &&
      mode != EvalMode::random_demo_no_summary && provider == nullptr)
    throw Error("dense demonstration selection requires an embedding provider");

  auto demos =
      detail::pick_demonstrations(mode, test, pool, provider, options);

  std::vector<GenerationOutcome> outcomes(test.size());
  bool with_summary = mode_uses_demo_summary(mode);
  run_bounded(test.size(), options.parallelism, [&](std::size_t i) {
    if (mode == EvalMode::zero) {
      outcomes[i] =
          generate_zero_shot(transport, test.documents[i], options.generation);
    } else {
      outcomes[i] = generate_candidates(transport, demos[i], test.documents[i],
                                        options.generation, with_summary);
    }
  });

  EvalReport report;
  report.mode = to_string(mode);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& outcome = outcomes[i];
    if (!outcome.ok()) {
      ++report.n_skipped;
      report.skips.push_back(*outcome.skip);
      continue;
    }
    const Document& doc = test.documents[i];
    const CandidateSet& set = *outcome.candidates;
    std::size_t selected = 0;
    if (mode == EvalMode::pads)
      selected = select_best(*model, doc, set.candidates, *provider);
    DocumentRow row;
    row.doc_id = doc.id;
    row.selected = selected;
    TokenList gold_tokens = tokenize(*doc.summary);
    for (const auto& cand : set.candidates)
      row.candidate_rouge_l.push_back(rouge_l(tokenize(cand), gold_tokens).f1);
    report.rows.push_back(std::move(row));
    pairs.push_back({set.candidates[selected], *doc.summary});
    ++report.n_evaluated;
  }
  if (!pairs.empty()) report.rouge = corpus_rouge(pairs);
  return report;
}

/// Candidate-score dispersion relative to the first candidate, per metric.
struct SpreadDelta {
  double best = 0.0;   // mean relative gain of the best candidate, >= 0
  double worst = 0.0;  // mean relative loss of the worst candidate, <= 0
};

struct SpreadStats {
  SpreadDelta r1;
  SpreadDelta r2;
  SpreadDelta rl;
  double not_first_best = 0.0;  // fraction of docs whose best is not index 0
  std::size_t n_documents = 0;
};

namespace detail {

/// Delta of value against the first candidate's score, relative when the
/// first score is positive, raw otherwise.
inline double relative_delta(double value, double first) {
  if (first > 0.0) return (value - first) / first;
  return value - first;
}

}  // namespace detail

/// Per-document best/worst ROUGE deltas against candidate 0, averaged over
/// documents. Golds come from the corpus.
inline SpreadStats candidate_spread(const std::vector<CandidateSet>& sets,
                                    const Corpus& corpus,
                                    const Tokenizer& tok = tokenize) {
  if (sets.empty()) throw Error("candidate_spread: no candidate sets");
  SpreadStats stats;
  std::size_t not_first = 0;
  for (const auto& set : sets) {
    const Document* doc = corpus.find(set.doc_id);
    if (doc == nullptr)
      throw Error("candidate doc \"" + set.doc_id + "\" not found in corpus");
    if (!doc->has_summary())
      throw Error("doc \"" + set.doc_id + "\" has no gold summary");
    if (set.candidates.size() < 2)
      throw Error("doc \"" + set.doc_id + "\" needs at least 2 candidates");
    TokenList gold = tok(*doc->summary);
    std::vector<double> r1, r2, rl;
    for (const auto& cand : set.candidates) {
      TokenList hyp = tok(cand);
      r1.push_back(rouge_n(hyp, gold, 1).f1);
      r2.push_back(rouge_n(hyp, gold, 2).f1);
      rl.push_back(rouge_l(hyp, gold).f1);
    }
    auto fold = [](const std::vector<double>& scores, SpreadDelta& delta) {
      double best = *std::max_element(scores.begin(), scores.end());
      double worst = *std::min_element(scores.begin(), scores.end());
      delta.best += detail::relative_delta(best, scores[0]);
      delta.worst += detail::relative_delta(worst, scores[0]);
    };
    fold(r1, stats.r1);
    fold(r2, stats.r2);
    fold(rl, stats.rl);
    std::size_t best_index = 0;
    for (std::size_t i = 1; i < rl.size(); ++i)
      if (rl[i] > rl[best_index]) best_index = i;
    if (best_index != 0) ++not_first;
    ++stats.n_documents;
  }
  double n = static_cast<double>(stats.n_documents);
  for (SpreadDelta* delta : {&stats.r1, &stats.r2, &stats.rl}) {
    delta->best /= n;
    delta->worst /= n;
  }
  stats.not_first_best = static_cast<double>(not_first) / n;
  return stats;
}

struct QualificationCounts {
  std::size_t multi_turn_qualified = 0;
  std::size_t multi_turn_total = 0;
  std::size_t concatenation_qualified = 0;
  std::size_t concatenation_total = 0;
};

/// Per-arm "qualified/total" counts over the same document set. A document
/// qualifies when its reply parsed into k candidates within the retry budget.
inline QualificationCounts format_qualification_counts(
    const std::vector<GenerationOutcome>& multi_turn,
    const std::vector<GenerationOutcome>& concatenation) {
  auto ids = [](const std::vector<GenerationOutcome>& arm) {
    std::vector<std::string> out;
    for (const auto& o : arm)
      out.push_back(o.ok() ? o.candidates->doc_id : o.skip->doc_id);
    std::sort(out.begin(), out.end());
    return out;
  };
  if (ids(multi_turn) != ids(concatenation))
    throw Error("format_qualification_counts: arms cover different documents");
  QualificationCounts counts;
  counts.multi_turn_total = multi_turn.size();
  counts.concatenation_total = concatenation.size();
  for (const auto& o : multi_turn)
    if (o.ok()) ++counts.multi_turn_qualified;
  for (const auto& o : concatenation)
    if (o.ok()) ++counts.concatenation_qualified;
  return counts;
}

inline std::string render_counts(std::size_t qualified, std::size_t total) {
  return std::to_string(qualified) + "/" + std::to_string(total);
}

namespace detail {

/// Table presentation: score times 100 with one decimal, e.g. "23.4".
inline std::string render_score(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", value * 100.0);
  return buf;
}

inline void append_padded(std::string& out, const std::string& cell,
                          std::size_t width, bool left) {
  std::string pad(width > cell.size() ? width - cell.size() : 0, ' ');
  if (left)
    out += cell + pad;
  else
    out += pad + cell;
}

}  // namespace detail

/// Fixed-width text table, one row per report, F1 scores times 100 with one
/// decimal. Byte-deterministic for fixed inputs.
inline std::string render_report_table(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw Error("render_report_table: no reports");
  constexpr std::size_t kModeWidth = 26;
  constexpr std::size_t kCellWidth = 8;
  std::string out;
  detail::append_padded(out, "mode", kModeWidth, true);
  for (const char* head : {"R-1", "R-2", "R-L", "docs", "skipped"})
    detail::append_padded(out, head, kCellWidth, false);
  out += '\n';
  for (const auto& report : reports) {
    detail::append_padded(out, report.mode, kModeWidth, true);
    detail::append_padded(out, detail::render_score(report.rouge.r1.f1),
                          kCellWidth, false);
    detail::append_padded(out, detail::render_score(report.rouge.r2.f1),
                          kCellWidth, false);
    detail::append_padded(out, detail::render_score(report.rouge.rl.f1),
                          kCellWidth, false);
    detail::append_padded(out, std::to_string(report.n_evaluated), kCellWidth,
                          false);
    detail::append_padded(out, std::to_string(report.n_skipped), kCellWidth,
                          false);
    out += '\n';
  }
  return out;
}

namespace detail {

inline json rouge_score_to_json(const RougeScore& score) {
  json out;
  out["precision"] = score.precision;
  out["recall"] = score.recall;
  out["f1"] = score.f1;
  return out;
}

}  // namespace detail

inline json report_to_json(const EvalReport& report) {
  json out;
  out["mode"] = report.mode;
  out["n_evaluated"] = report.n_evaluated;
  out["n_skipped"] = report.n_skipped;
  json rouge;
  rouge["rouge1"] = detail::rouge_score_to_json(report.rouge.r1);
  rouge["rouge2"] = detail::rouge_score_to_json(report.rouge.r2);
  rouge["rougeL"] = detail::rouge_score_to_json(report.rouge.rl);
  rouge["n_pairs"] = report.rouge.n_pairs;
  out["rouge"] = std::move(rouge);
  json rows = json::array();
  for (const auto& row : report.rows) {
    json r;
    r["doc_id"] = row.doc_id;
    r["selected"] = row.selected;
    r["candidate_rouge_l"] = row.candidate_rouge_l;
    rows.push_back(std::move(r));
  }
  out["per_document"] = std::move(rows);
  json skips = json::array();
  for (const auto& skip : report.skips) {
    json s;
    s["doc_id"] = skip.doc_id;
    s["reason"] = skip.reason;
    s["detail"] = skip.detail;
    s["retries_used"] = skip.retries_used;
    skips.push_back(std::move(s));
  }
  out["skips"] = std::move(skips);
  return out;
}

inline void write_report(const std::string& path, const EvalReport& report) {
  write_file(path, report_to_json(report).dump(2) + "\n");
}

inline json spread_to_json(const SpreadStats& stats) {
  json out;
  auto delta = [](const SpreadDelta& d) {
    json j;
    j["best"] = d.best;
    j["worst"] = d.worst;
    return j;
  };
  out["r1"] = delta(stats.r1);
  out["r2"] = delta(stats.r2);
  out["rl"] = delta(stats.rl);
  out["not_first_best"] = stats.not_first_best;
  out["n_documents"] = stats.n_documents;
  return out;
}

}  // namespace sumrank
