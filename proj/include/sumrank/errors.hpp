#pragma once

#include <stdexcept>
#include <string>

namespace sumrank {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system / serialization failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Corpus file violates the record contract (duplicate id, missing field, ...).
class CorpusError : public Error {
 public:
  using Error::Error;
};

/// Run configuration is missing, inconsistent, or carries unknown fields.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An embedding provider could not produce a vector.
class ProviderError : public Error {
 public:
  using Error::Error;
};

/// Chat endpoint failure. Retryable errors are transient (timeouts, 429, 5xx)
/// and are retried with exponential backoff; non-retryable ones surface
/// immediately.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool retryable)
      : Error(what), retryable_(retryable) {}

  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

/// The endpoint refused the request on content-policy grounds. The affected
/// document is skipped, not retried.
class ContentFilteredError : public Error {
 public:
  using Error::Error;
};

/// Replay transport has no recording for the request digest.
class MissingRecordingError : public Error {
 public:
  explicit MissingRecordingError(const std::string& digest)
      : Error("no recorded reply for request digest " + digest),
        digest_(digest) {}

  const std::string& digest() const { return digest_; }

 private:
  std::string digest_;
};

/// Model checkpoint is corrupt or carries an unsupported version tag.
class ModelIoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sumrank
