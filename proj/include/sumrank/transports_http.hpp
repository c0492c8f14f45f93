#pragma once

// Network-facing pieces live in this header so the rest of the library stays
// free of the HTTP and TLS dependencies.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <mutex>
#include <string>
#include <utility>

#include "sumrank/chat.hpp"
#include "sumrank/embedding.hpp"
#include "sumrank/errors.hpp"
#include "sumrank/io.hpp"

namespace sumrank {

namespace detail {

/// Splits "scheme://host[:port]/path" into the client base and request path.
inline std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("url \"" + url + "\" has no scheme");
  auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

inline std::string env_or_empty(const std::string& name) {
  const char* value = std::getenv(name.c_str());
  return value == nullptr ? std::string() : std::string(value);
}

inline bool status_is_retryable(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

inline httplib::Headers auth_headers(const std::string& api_key) {
  httplib::Headers headers;
  if (!api_key.empty())
    headers.emplace("Authorization", "Bearer " + api_key);
  return headers;
}

}  // namespace detail

struct LiveChatConfig {
  std::string url;  // full chat-completions endpoint
  std::string api_key_env = "API_KEY";
  int connect_timeout_s = 10;
  int read_timeout_s = 60;
};

/// One HTTP round trip per completion against an OpenAI-compatible
/// chat-completions endpoint. Requests are serialized by a mutex; the
/// pipeline's bounded parallelism queues on it.
class LiveChatTransport : public ChatTransport {
 public:
  explicit LiveChatTransport(LiveChatConfig config)
      : config_(std::move(config)),
        api_key_(detail::env_or_empty(config_.api_key_env)) {
    auto [base, path] = detail::split_url(config_.url);
    base_ = base;
    path_ = path;
  }

  std::string complete(const ChatRequest& request) override {
    json body;
    body["model"] = request.model_name;
    json messages = json::array();
    for (const auto& msg : request.messages) {
      json m;
      m["role"] = to_string(msg.role);
      m["content"] = msg.content;
      messages.push_back(std::move(m));
    }
    body["messages"] = std::move(messages);
    body["temperature"] = request.temperature;

    httplib::Result res = post(body.dump());
    if (!res)
      throw TransportError(
          "connection to " + config_.url + " failed: " + httplib::to_string(res.error()),
          true);
    if (res->status != 200) {
      if (is_content_filter_body(res->body))
        throw ContentFilteredError("endpoint refused the request (status " +
                                   std::to_string(res->status) + ")");
      throw TransportError("endpoint returned status " +
                               std::to_string(res->status),
                           detail::status_is_retryable(res->status));
    }
    return extract_reply(res->body);
  }

 private:
  httplib::Result post(const std::string& body) {
    std::lock_guard<std::mutex> lock(mutex_);
    httplib::Client client(base_);
    client.set_connection_timeout(config_.connect_timeout_s, 0);
    client.set_read_timeout(config_.read_timeout_s, 0);
    return client.Post(path_, detail::auth_headers(api_key_), body,
                       "application/json");
  }

  static bool is_content_filter_body(const std::string& body) {
    json parsed = json::parse(body, nullptr, false);
    return parsed.is_object() && parsed.contains("error") &&
           parsed["error"].is_object() &&
           parsed["error"].value("code", "") == "content_filter";
  }

  std::string extract_reply(const std::string& body) const {
    json parsed = json::parse(body, nullptr, false);
    if (!parsed.is_object() || !parsed.contains("choices") ||
        !parsed["choices"].is_array() || parsed["choices"].empty())
      throw TransportError("malformed completion response from " + config_.url,
                           false);
    const json& choice = parsed["choices"][0];
    if (choice.value("finish_reason", "") == "content_filter")
      throw ContentFilteredError("completion stopped by content filter");
    if (!choice.contains("message") || !choice["message"].is_object() ||
        !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string())
      throw TransportError("completion response carries no message content",
                           false);
    return choice["message"]["content"].get<std::string>();
  }

  LiveChatConfig config_;
  std::string api_key_;
  std::string base_;
  std::string path_;
  std::mutex mutex_;
};

struct RemoteEmbeddingConfig {
  std::string url;  // full embeddings endpoint
  std::string model;
  std::size_t dim = 0;  // expected vector length, must be known up front
  std::string api_key_env = "API_KEY";
  int connect_timeout_s = 10;
  int read_timeout_s = 60;
};

/// Embeddings from an OpenAI-compatible embeddings endpoint. The declared
/// dimension is enforced on every reply.
class RemoteEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config)
      : config_(std::move(config)),
        api_key_(detail::env_or_empty(config_.api_key_env)) {
    if (config_.dim < 1)
      throw ConfigError("remote embedding dim must be >= 1");
    auto [base, path] = detail::split_url(config_.url);
    base_ = base;
    path_ = path;
  }

  EmbeddingVector embed(const std::string& text) const override {
    json body;
    body["model"] = config_.model;
    body["input"] = text;

    httplib::Result res = post(body.dump());
    if (!res)
      throw ProviderError("connection to " + config_.url +
                          " failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw ProviderError("embeddings endpoint returned status " +
                          std::to_string(res->status));
    json parsed = json::parse(res->body, nullptr, false);
    if (!parsed.is_object() || !parsed.contains("data") ||
        !parsed["data"].is_array() || parsed["data"].empty() ||
        !parsed["data"][0].contains("embedding") ||
        !parsed["data"][0]["embedding"].is_array())
      throw ProviderError("malformed embeddings response from " + config_.url);
    EmbeddingVector vec;
    for (const auto& v : parsed["data"][0]["embedding"])
      vec.values.push_back(v.get<double>());
    if (vec.dim() != config_.dim)
      throw ProviderError("embeddings endpoint returned dim " +
                          std::to_string(vec.dim()) + ", expected " +
                          std::to_string(config_.dim));
    return vec;
  }

  std::size_t dim() const override { return config_.dim; }

  std::string fingerprint() const override {
    return "remote/model=" + config_.model +
           "/dim=" + std::to_string(config_.dim);
  }

 private:
  httplib::Result post(const std::string& body) const {
    std::lock_guard<std::mutex> lock(mutex_);
    httplib::Client client(base_);
    client.set_connection_timeout(config_.connect_timeout_s, 0);
    client.set_read_timeout(config_.read_timeout_s, 0);
    return client.Post(path_, detail::auth_headers(api_key_), body,
                       "application/json");
  }

  RemoteEmbeddingConfig config_;
  std::string api_key_;
  std::string base_;
  std::string path_;
  mutable std::mutex mutex_;
};

}  // namespace sumrank
