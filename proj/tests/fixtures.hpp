#pragma once

// Shared synthetic corpora, scripted model transports, and scratch
// directories used across the test binaries.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sumrank/chat.hpp"
#include "sumrank/corpus.hpp"
#include "sumrank/rouge.hpp"

namespace testkit {

namespace fs = std::filesystem;

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<std::uint64_t> counter{0};
    path_ = fs::temp_directory_path() /
            ("sumrank_" + tag + "_" + std::to_string(counter.fetch_add(1)) +
             "_" + std::to_string(static_cast<std::uint64_t>(
                       std::random_device{}())));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Transport backed by a pure function of the request. Thread safe because the
// script captures no mutable state.
class ScriptedTransport : public sumrank::ChatTransport {
 public:
  using Script = std::function<std::string(const sumrank::ChatRequest&)>;

  explicit ScriptedTransport(Script script) : script_(std::move(script)) {}

  std::string complete(const sumrank::ChatRequest& request) override {
    return script_(request);
  }

 private:
  Script script_;
};

// Decorator retaining every request, for asserting prompt construction.
class CapturingTransport : public sumrank::ChatTransport {
 public:
  explicit CapturingTransport(sumrank::ChatTransport& inner) : inner_(inner) {}

  std::string complete(const sumrank::ChatRequest& request) override {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      requests_.push_back(request);
    }
    return inner_.complete(request);
  }
  bool offline() const override { return inner_.offline(); }

  std::vector<sumrank::ChatRequest> requests() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return requests_;
  }

 private:
  sumrank::ChatTransport& inner_;
  mutable std::mutex mutex_;
  std::vector<sumrank::ChatRequest> requests_;
};

// Decorator counting completions, for asserting request budgets.
class CountingTransport : public sumrank::ChatTransport {
 public:
  explicit CountingTransport(sumrank::ChatTransport& inner) : inner_(inner) {}

  std::string complete(const sumrank::ChatRequest& request) override {
    calls_.fetch_add(1);
    return inner_.complete(request);
  }
  bool offline() const override { return inner_.offline(); }

  std::uint64_t calls() const { return calls_.load(); }

 private:
  sumrank::ChatTransport& inner_;
  std::atomic<std::uint64_t> calls_{0};
};

// Request inspection helpers keyed off the prompt wording.
inline bool has_demo_turn(const sumrank::ChatRequest& req) {
  for (const auto& m : req.messages)
    if (m.content.find("I will present you the text") != std::string::npos)
      return true;
  return false;
}

inline int reminder_count(const sumrank::ChatRequest& req) {
  int n = 0;
  for (const auto& m : req.messages)
    if (m.content.rfind("Answer in this format:", 0) == 0) ++n;
  return n;
}

inline bool is_zero_shot(const sumrank::ChatRequest& req) {
  for (const auto& m : req.messages)
    if (m.content.find("Generate one summary of the following text.") !=
        std::string::npos)
      return true;
  return false;
}

// Pulls the document text out of the most recent prompt turn.
inline std::string requested_text(const sumrank::ChatRequest& req) {
  const std::string marker = "the following text. Text: ";
  const std::string tail = " Summary:";
  for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
    auto pos = it->content.find(marker);
    if (pos == std::string::npos) continue;
    std::string text = it->content.substr(pos + marker.size());
    auto end = text.rfind(tail);
    if (end != std::string::npos) text = text.substr(0, end);
    return text;
  }
  return "";
}

// Planted-signal fixture. Every document owns twelve private content tokens;
// the gold summary is the first six. A candidate keeping n gold tokens padded
// with off-document noise scores ROUGE-L f1 = n/6 against gold, so candidate
// quality is exactly its kept-token count.
inline const std::vector<std::size_t>& planted_kept_levels() {
  static const std::vector<std::size_t> levels = {6, 5, 3, 2, 1};
  return levels;
}

inline std::string planted_token(std::size_t doc, std::size_t j) {
  return "d" + std::to_string(doc) + "w" + std::to_string(j);
}

inline std::string planted_text(std::size_t doc) {
  std::string text;
  for (std::size_t j = 0; j < 12; ++j) {
    if (!text.empty()) text += ' ';
    text += planted_token(doc, j);
  }
  return text;
}

inline std::string planted_gold(std::size_t doc) {
  std::string gold;
  for (std::size_t j = 0; j < 6; ++j) {
    if (!gold.empty()) gold += ' ';
    gold += planted_token(doc, j);
  }
  return gold;
}

inline std::string planted_candidate(std::size_t doc, std::size_t kept,
                                     std::size_t slot) {
  std::string out;
  for (std::size_t j = 0; j < kept && j < 6; ++j) {
    if (!out.empty()) out += ' ';
    out += planted_token(doc, j);
  }
  for (std::size_t j = kept; j < 6; ++j) {
    if (!out.empty()) out += ' ';
    out += "n" + std::to_string(doc) + "s" + std::to_string(slot) + "x" +
           std::to_string(j);
  }
  return out;
}

// Candidate list for one document: the five quality levels rotated by doc
// index, so the best candidate sits at the front only once every five docs.
inline std::vector<std::string> planted_candidates(std::size_t doc) {
  const auto& levels = planted_kept_levels();
  std::vector<std::string> out;
  for (std::size_t p = 0; p < levels.size(); ++p) {
    std::size_t kept = levels[(p + doc % levels.size()) % levels.size()];
    out.push_back(planted_candidate(doc, kept, p));
  }
  return out;
}

inline std::size_t planted_best_position(std::size_t doc) {
  std::size_t r = doc % planted_kept_levels().size();
  return (planted_kept_levels().size() - r) % planted_kept_levels().size();
}

inline sumrank::Document planted_doc(std::size_t doc) {
  sumrank::Document d;
  d.id = "doc" + std::to_string(1000 + doc);
  d.text = planted_text(doc);
  d.summary = planted_gold(doc);
  return d;
}

inline sumrank::Corpus planted_corpus(std::size_t count, std::string name,
                                      std::size_t offset = 0) {
  sumrank::Corpus corpus;
  corpus.name = std::move(name);
  for (std::size_t i = 0; i < count; ++i)
    corpus.documents.push_back(planted_doc(offset + i));
  return corpus;
}

inline std::string enumerate_reply(const std::vector<std::string>& items) {
  std::string reply;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!reply.empty()) reply += '\n';
    reply += std::to_string(i + 1) + ": " + items[i];
  }
  return reply;
}

// Scripted model over a planted corpus: k-candidate prompts get the rotated
// quality ladder, zero-shot prompts get a single one-token-kept summary.
// Texts in fail_until answer garbage until that many format reminders have
// accumulated; texts in always_fail never answer with labels.
struct PlantedModel {
  std::unordered_map<std::string, std::size_t> doc_by_text;
  std::unordered_map<std::string, int> fail_until;
  std::unordered_set<std::string> always_fail;

  explicit PlantedModel(const sumrank::Corpus& corpus) {
    for (const auto& d : corpus.documents) {
      // Recover the planted index from the first token "d<i>w0".
      auto w = d.text.find('w');
      doc_by_text[d.text] =
          static_cast<std::size_t>(std::stoul(d.text.substr(1, w - 1)));
    }
  }

  std::string operator()(const sumrank::ChatRequest& req) const {
    std::string text = requested_text(req);
    auto it = doc_by_text.find(text);
    if (it == doc_by_text.end())
      return "1: unknown\n2: unknown\n3: unknown\n4: unknown\n5: unknown";
    std::size_t doc = it->second;
    if (is_zero_shot(req)) return planted_candidate(doc, 1, 9);
    if (always_fail.count(text) != 0)
      return "Here are some summaries without any numbering at all.";
    auto fail = fail_until.find(text);
    if (fail != fail_until.end() && reminder_count(req) < fail->second)
      return "Sorry, I forgot the required format.";
    return enumerate_reply(planted_candidates(doc));
  }
};

// Random token material for the scoring oracles.
inline sumrank::TokenList random_tokens(std::mt19937_64& rng,
                                        std::size_t min_len,
                                        std::size_t max_len,
                                        std::size_t vocab) {
  std::size_t len = min_len + rng() % (max_len - min_len + 1);
  sumrank::TokenList tokens;
  for (std::size_t i = 0; i < len; ++i)
    tokens.push_back("t" + std::to_string(rng() % vocab));
  return tokens;
}

inline std::string join_tokens(const sumrank::TokenList& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

inline sumrank::Corpus corpus_from_token_lists(
    const std::vector<sumrank::TokenList>& docs, const std::string& name) {
  sumrank::Corpus corpus;
  corpus.name = name;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    sumrank::Document d;
    d.id = "r" + std::to_string(100 + i);
    d.text = join_tokens(docs[i]);
    corpus.documents.push_back(std::move(d));
  }
  return corpus;
}

}  // namespace testkit
