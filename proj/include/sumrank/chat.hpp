#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sumrank/corpus.hpp"
#include "sumrank/errors.hpp"
#include "sumrank/io.hpp"

namespace sumrank {

enum class ChatRole { system, user, assistant };

inline const char* to_string(ChatRole role) {
  switch (role) {
    case ChatRole::system:
      return "system";
    case ChatRole::user:
      return "user";
    case ChatRole::assistant:
      return "assistant";
  }
  return "?";
}

inline ChatRole parse_role(const std::string& name) {
  if (name == "system") return ChatRole::system;
  if (name == "user") return ChatRole::user;
  if (name == "assistant") return ChatRole::assistant;
  throw Error("unknown chat role \"" + name + "\"");
}

struct ChatMessage {
  ChatRole role = ChatRole::user;
  std::string content;
};

/// Ordered conversation: at most one leading system message, then user and
/// assistant turns in strict alternation starting with user.
struct ChatTranscript {
  std::vector<ChatMessage> messages;

  void add_user(std::string content) {
    messages.push_back({ChatRole::user, std::move(content)});
  }
  void add_assistant(std::string content) {
    messages.push_back({ChatRole::assistant, std::move(content)});
  }
  bool ends_with_user() const {
    return !messages.empty() && messages.back().role == ChatRole::user;
  }
};

inline void validate_transcript(const ChatTranscript& transcript) {
  std::size_t i = 0;
  const auto& msgs = transcript.messages;
  if (i < msgs.size() && msgs[i].role == ChatRole::system) ++i;
  ChatRole expected = ChatRole::user;
  for (; i < msgs.size(); ++i) {
    if (msgs[i].role == ChatRole::system)
      throw Error("transcript: system message after turn " + std::to_string(i));
    if (msgs[i].role != expected)
      throw Error("transcript: expected " + std::string(to_string(expected)) +
                  " at turn " + std::to_string(i) + ", found " +
                  to_string(msgs[i].role));
    if (msgs[i].content.empty())
      throw Error("transcript: empty content at turn " + std::to_string(i));
    expected =
        expected == ChatRole::user ? ChatRole::assistant : ChatRole::user;
  }
}

struct GenerationConfig {
  int k = 5;
  int max_format_retries = 5;
  double sampling_temperature = 1.0;
  std::string model_name = "gpt-3.5-turbo";
  int transport_max_attempts = 3;
  int transport_backoff_ms = 100;

  void validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (max_format_retries < 0)
      throw ConfigError("max_format_retries must be >= 0");
    if (sampling_temperature < 0.0)
      throw ConfigError("sampling_temperature must be >= 0");
    if (model_name.empty()) throw ConfigError("model_name must be non-empty");
    if (transport_max_attempts < 1)
      throw ConfigError("transport_max_attempts must be >= 1");
    if (transport_backoff_ms < 0)
      throw ConfigError("transport_backoff_ms must be >= 0");
  }
};

/// One document's generation result: exactly k candidates in the model's
/// emission order, plus the conversation that produced them.
struct CandidateSet {
  std::string doc_id;
  std::vector<std::string> candidates;
  ChatTranscript transcript;
  int retries_used = 0;
};

inline ChatMessage build_demonstration_turn(const Document& demo) {
  if (!demo.has_summary())
    throw Error("demonstration doc \"" + demo.id + "\" has no summary");
  return {ChatRole::user,
          "I will present you the text and its standard summary, considering "
          "it as an example. Text: " +
              demo.text + " Summary: " + *demo.summary};
}

/// Demonstration presenting the document alone, for the *_no_summary arms.
inline ChatMessage build_demonstration_turn_text_only(const Document& demo) {
  return {ChatRole::user,
          "I will present you the text, considering it as an example. Text: " +
              demo.text};
}

inline ChatMessage build_inference_turn(const Document& doc, int k,
                                        bool with_demo) {
  if (k < 1) throw Error("build_inference_turn: k must be >= 1");
  std::string head = with_demo ? "Combining the above example, generate "
                               : "Generate ";
  return {ChatRole::user, head + std::to_string(k) +
                              " different summaries of the following text. "
                              "Text: " +
                              doc.text + " Summary:"};
}

inline ChatMessage build_zero_shot_turn(const Document& doc) {
  return {ChatRole::user,
          "Generate one summary of the following text. Text: " + doc.text +
              " Summary:"};
}

inline ChatMessage build_format_reminder(int k) {
  return {ChatRole::user,
          "Answer in this format: 1: xxx\n..." + std::to_string(k) + ": xxx"};
}

/// Parser outcome; a format failure is an expected retry-loop event, not an
/// exception.
struct ParseResult {
  std::vector<std::string> candidates;
  std::string error;
  bool ok() const { return error.empty(); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin])))
    ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1])))
    --end;
  return s.substr(begin, end - begin);
}

/// Recognizes "<digits>." or "<digits>:" at the start of a line, requiring
/// whitespace or end-of-line after the separator so "1.5 million" is not a
/// label. Returns the label value and the rest of the line.
inline bool match_label(const std::string& line, long& label,
                        std::string& rest) {
  std::size_t i = 0;
  while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
    ++i;
  std::size_t digits_begin = i;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])))
    ++i;
  if (i == digits_begin) return false;
  if (i >= line.size() || (line[i] != '.' && line[i] != ':')) return false;
  std::size_t sep = i;
  ++i;
  if (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
    return false;
  label = std::stol(line.substr(digits_begin, sep - digits_begin));
  rest = line.substr(i);
  return true;
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string::npos) {
      lines.push_back(text.substr(begin));
      break;
    }
    std::string line = text.substr(begin, end - begin);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    begin = end + 1;
  }
  return lines;
}

}  // namespace detail

/// Extracts k enumerated candidates from a model reply. Labels "n." and "n:"
/// are both accepted; they must run exactly 1..k in order. Text before the
/// first label is ignored; lines after a label join its item until the next
/// label.
inline ParseResult parse_candidates(const std::string& response_text, int k) {
  if (k < 1) throw Error("parse_candidates: k must be >= 1");
  ParseResult result;
  std::vector<long> labels;
  std::vector<std::string> items;
  bool in_item = false;
  for (const auto& line : detail::split_lines(response_text)) {
    long label = 0;
    std::string rest;
    if (detail::match_label(line, label, rest)) {
      labels.push_back(label);
      items.push_back(detail::trim(rest));
      in_item = true;
    } else if (in_item) {
      std::string piece = detail::trim(line);
      if (piece.empty()) continue;
      if (!items.back().empty()) items.back() += ' ';
      items.back() += piece;
    }
  }
  if (static_cast<long>(labels.size()) != k) {
    result.error = "expected " + std::to_string(k) + " items, found " +
                   std::to_string(labels.size());
    return result;
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == static_cast<long>(i) + 1) continue;
    bool duplicate =
        i > 0 && std::find(labels.begin(), labels.begin() + i, labels[i]) !=
                     labels.begin() + i;
    result.error = duplicate
                       ? "duplicate label " + std::to_string(labels[i])
                       : "label " + std::to_string(labels[i]) +
                             " out of order at position " + std::to_string(i + 1);
    return result;
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].empty()) {
      result.error = "empty item at label " + std::to_string(i + 1);
      return result;
    }
  }
  result.candidates = std::move(items);
  return result;
}

/// One chat-completion request. k is not part of the wire body (each attempt
/// asks for a single completion); it participates in the replay digest so
/// recordings are scoped to the candidate count that produced them.
struct ChatRequest {
  std::string model_name;
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
  int k = 1;
};

/// FNV-1a over every request field with separator bytes between them.
/// Identical requests digest identically across processes, which is what
/// makes recordings portable.
inline std::uint64_t chat_digest(const ChatRequest& request) {
  std::uint64_t h = fnv1a64(request.model_name);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8g", request.temperature);
  h = fnv1a64("\x1e", h);
  h = fnv1a64(buf, h);
  h = fnv1a64("\x1e", h);
  h = fnv1a64(std::to_string(request.k), h);
  for (const auto& msg : request.messages) {
    h = fnv1a64("\x1e", h);
    h = fnv1a64(to_string(msg.role), h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(msg.content, h);
  }
  return h;
}

inline std::string chat_digest_hex(const ChatRequest& request) {
  return to_hex(chat_digest(request));
}

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;

  /// Returns the assistant reply text for the request.
  virtual std::string complete(const ChatRequest& request) = 0;

  /// True when no network round trip happens; the pipeline then injects the
  /// placeholder demonstration reply instead of requesting one.
  virtual bool offline() const { return false; }
};

/// Serves recorded replies keyed by request digest. Lookup table is fixed at
/// construction, so concurrent reads need no lock. When one digest appears on
/// several lines the last line wins.
class ReplayTransport : public ChatTransport {
 public:
  explicit ReplayTransport(const std::string& path) {
    for (const auto& record : read_jsonl(path)) {
      const json& value = record.value;
      if (!value.contains("digest") || !value["digest"].is_string() ||
          !value.contains("reply") || !value["reply"].is_string())
        throw IoError(path + ":" + std::to_string(record.line) +
                      ": replay record needs string fields digest and reply");
      replies_[value["digest"].get<std::string>()] =
          value["reply"].get<std::string>();
    }
  }

  explicit ReplayTransport(std::unordered_map<std::string, std::string> replies)
      : replies_(std::move(replies)) {}

  std::string complete(const ChatRequest& request) override {
    std::string digest = chat_digest_hex(request);
    auto it = replies_.find(digest);
    if (it == replies_.end())
      throw MissingRecordingError(digest);
    return it->second;
  }

  bool offline() const override { return true; }

  std::size_t size() const { return replies_.size(); }

 private:
  std::unordered_map<std::string, std::string> replies_;
};

/// Passes requests through to an inner transport and appends every
/// (digest, reply) pair to a replay file.
class RecordingTransport : public ChatTransport {
 public:
  RecordingTransport(ChatTransport& inner, const std::string& path)
      : inner_(inner), writer_(path) {}

  std::string complete(const ChatRequest& request) override {
    std::string reply = inner_.complete(request);
    json record;
    record["digest"] = chat_digest_hex(request);
    record["reply"] = reply;
    std::lock_guard<std::mutex> lock(mutex_);
    writer_.write(record);
    writer_.flush();
    return reply;
  }

  bool offline() const override { return inner_.offline(); }

 private:
  ChatTransport& inner_;
  JsonlWriter writer_;
  std::mutex mutex_;
};

/// Sends the transcript and returns the assistant reply, retrying retryable
/// transport failures with exponential backoff. An empty reply is treated as
/// a retryable failure so transcripts never hold empty assistant turns.
inline ChatMessage send_chat(ChatTransport& transport,
                             const ChatTranscript& transcript,
                             const GenerationConfig& cfg) {
  if (!transcript.ends_with_user())
    throw Error("send_chat: transcript must end with a user message");
  validate_transcript(transcript);
  ChatRequest request{cfg.model_name, transcript.messages,
                      cfg.sampling_temperature, cfg.k};
  for (int attempt = 0;; ++attempt) {
    try {
      std::string reply = transport.complete(request);
      if (reply.empty())
        throw TransportError("transport returned an empty reply", true);
      return {ChatRole::assistant, std::move(reply)};
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt + 1 >= cfg.transport_max_attempts) throw;
      auto delay = std::chrono::milliseconds(
          static_cast<long long>(cfg.transport_backoff_ms) << attempt);
      std::this_thread::sleep_for(delay);
    }
  }
}

}  // namespace sumrank
