#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sumrank/chat.hpp"
#include "sumrank/corpus.hpp"
#include "sumrank/errors.hpp"
#include "sumrank/io.hpp"

namespace sumrank {

/// Why a document was dropped from the run. Skipped documents stay out of
/// every downstream denominator but are persisted so counts reconstruct.
struct SkipRecord {
  std::string doc_id;
  std::string reason;  // "format_exhausted" or "content_filtered"
  std::string detail;
  int retries_used = 0;
};

struct GenerationOutcome {
  std::optional<CandidateSet> candidates;
  std::optional<SkipRecord> skip;

  bool ok() const { return candidates.has_value(); }
};

// Assistant reply standing in for the demonstration round, whose content is
// never used. Injected without a network call on offline transports.
inline constexpr const char* kDemonstrationAck = "OK.";

namespace detail {

inline GenerationOutcome run_format_loop(ChatTransport& transport,
                                         ChatTranscript transcript,
                                         const std::string& doc_id,
                                         const GenerationConfig& cfg) {
  GenerationOutcome outcome;
  for (int retries = 0;; ++retries) {
    ChatMessage reply;
    try {
      reply = send_chat(transport, transcript, cfg);
    } catch (const ContentFilteredError& e) {
      outcome.skip = SkipRecord{doc_id, "content_filtered", e.what(), retries};
      return outcome;
    }
    ParseResult parsed = parse_candidates(reply.content, cfg.k);
    if (parsed.ok()) {
      transcript.messages.push_back(reply);
      outcome.candidates =
          CandidateSet{doc_id, std::move(parsed.candidates),
                       std::move(transcript), retries};
      return outcome;
    }
    if (retries >= cfg.max_format_retries) {
      outcome.skip =
          SkipRecord{doc_id, "format_exhausted", parsed.error, retries};
      return outcome;
    }
    transcript.messages.push_back(reply);
    transcript.messages.push_back(build_format_reminder(cfg.k));
  }
}

/// Demonstration round: the reply is requested only to keep the live
/// conversation real; its content is replaced by the fixed acknowledgement in
/// both live and replay runs, so replay digests match recordings.
inline void add_demonstration_round(ChatTransport& transport,
                                    ChatTranscript& transcript,
                                    const ChatMessage& demo_turn,
                                    const GenerationConfig& cfg) {
  transcript.messages.push_back(demo_turn);
  if (!transport.offline()) send_chat(transport, transcript, cfg);
  transcript.add_assistant(kDemonstrationAck);
}

}  // namespace detail

/// k-candidate generation with the multi-turn layout: optional demonstration
/// round, inference turn, then format retries up to the budget. Exhaustion or
/// a content filter yields a skip record instead of a CandidateSet.
inline GenerationOutcome generate_candidates(ChatTransport& transport,
                                             const std::optional<Document>& demo,
                                             const Document& doc,
                                             const GenerationConfig& cfg,
                                             bool demo_with_summary = true) {
  cfg.validate();
  ChatTranscript transcript;
  if (demo) {
    ChatMessage turn = demo_with_summary
                           ? build_demonstration_turn(*demo)
                           : build_demonstration_turn_text_only(*demo);
    detail::add_demonstration_round(transport, transcript, turn, cfg);
  }
  transcript.messages.push_back(
      build_inference_turn(doc, cfg.k, demo.has_value()));
  return detail::run_format_loop(transport, std::move(transcript), doc.id, cfg);
}

/// Ablation arm: demonstration and inference request joined into a single
/// user turn, no demonstration round. Retry handling is unchanged.
inline GenerationOutcome generate_concatenated(ChatTransport& transport,
                                               const Document& demo,
                                               const Document& doc,
                                               const GenerationConfig& cfg,
                                               bool demo_with_summary = true) {
  cfg.validate();
  ChatMessage demo_turn = demo_with_summary
                              ? build_demonstration_turn(demo)
                              : build_demonstration_turn_text_only(demo);
  ChatMessage inference_turn = build_inference_turn(doc, cfg.k, true);
  ChatTranscript transcript;
  transcript.add_user(demo_turn.content + "\n" + inference_turn.content);
  return detail::run_format_loop(transport, std::move(transcript), doc.id, cfg);
}

/// Single-summary request for the zero-shot arm: the whole reply is the
/// summary, so there is no format loop. Content filtering still skips.
inline GenerationOutcome generate_zero_shot(ChatTransport& transport,
                                            const Document& doc,
                                            const GenerationConfig& cfg) {
  cfg.validate();
  ChatTranscript transcript;
  transcript.messages.push_back(build_zero_shot_turn(doc));
  GenerationOutcome outcome;
  ChatMessage reply;
  try {
    reply = send_chat(transport, transcript, cfg);
  } catch (const ContentFilteredError& e) {
    outcome.skip = SkipRecord{doc.id, "content_filtered", e.what(), 0};
    return outcome;
  }
  transcript.messages.push_back(reply);
  outcome.candidates =
      CandidateSet{doc.id, {reply.content}, std::move(transcript), 0};
  return outcome;
}

/// Runs fn(0..count-1) with at most `parallelism` calls in flight. fn writes
/// its own slot, so completion order never reorders results. The first
/// exception is rethrown after all workers stop.
template <class Fn>
inline void run_bounded(std::size_t count, std::size_t parallelism, Fn&& fn) {
  if (parallelism < 1) throw Error("run_bounded: parallelism must be >= 1");
  if (count == 0) return;
  std::size_t workers = std::min(parallelism, count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      while (!failed.load()) {
        std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Generates outcomes for every document in input order. demo_for(i) supplies
/// the demonstration (or nullopt) for document i.
template <class DemoFn>
inline std::vector<GenerationOutcome> generate_corpus(
    ChatTransport& transport, const Corpus& corpus, const GenerationConfig& cfg,
    DemoFn&& demo_for, std::size_t parallelism = 4,
    bool demo_with_summary = true) {
  std::vector<GenerationOutcome> outcomes(corpus.size());
  run_bounded(corpus.size(), parallelism, [&](std::size_t i) {
    outcomes[i] = generate_candidates(transport, demo_for(i),
                                      corpus.documents[i], cfg,
                                      demo_with_summary);
  });
  return outcomes;
}

inline json outcome_to_json(const GenerationOutcome& outcome) {
  json record;
  if (outcome.ok()) {
    const CandidateSet& set = *outcome.candidates;
    record["doc_id"] = set.doc_id;
    record["candidates"] = set.candidates;
    record["retries_used"] = set.retries_used;
  } else if (outcome.skip) {
    const SkipRecord& skip = *outcome.skip;
    record["doc_id"] = skip.doc_id;
    record["skip_reason"] = skip.reason;
    record["detail"] = skip.detail;
    record["retries_used"] = skip.retries_used;
  } else {
    throw Error("outcome carries neither candidates nor a skip record");
  }
  return record;
}

inline void write_outcomes(const std::string& path,
                           const std::vector<GenerationOutcome>& outcomes) {
  JsonlWriter writer(path);
  for (const auto& outcome : outcomes) writer.write(outcome_to_json(outcome));
}

inline std::vector<GenerationOutcome> read_outcomes(const std::string& path) {
  std::vector<GenerationOutcome> outcomes;
  for (const auto& record : read_jsonl(path)) {
    const json& value = record.value;
    auto context = [&](const std::string& msg) {
      return IoError(path + ":" + std::to_string(record.line) + ": " + msg);
    };
    if (!value.contains("doc_id") || !value["doc_id"].is_string())
      throw context("candidate record needs a string doc_id");
    GenerationOutcome outcome;
    if (value.contains("skip_reason")) {
      SkipRecord skip;
      skip.doc_id = value["doc_id"].get<std::string>();
      skip.reason = value["skip_reason"].get<std::string>();
      skip.detail = value.value("detail", "");
      skip.retries_used = value.value("retries_used", 0);
      outcome.skip = std::move(skip);
    } else {
      if (!value.contains("candidates") || !value["candidates"].is_array())
        throw context("candidate record needs a candidates array");
      CandidateSet set;
      set.doc_id = value["doc_id"].get<std::string>();
      for (const auto& item : value["candidates"]) {
        if (!item.is_string() || item.get<std::string>().empty())
          throw context("candidates must be non-empty strings");
        set.candidates.push_back(item.get<std::string>());
      }
      if (set.candidates.empty())
        throw context("candidates array must not be empty");
      set.retries_used = value.value("retries_used", 0);
      outcome.candidates = std::move(set);
    }
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

}  // namespace sumrank
