#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sabia {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or precondition (bad chunk sizes, duplicate model ids, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Data violates a structural contract: wrong dimension, wrong embedder, corrupt record.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class UnsupportedVersionError : public Error {
 public:
  explicit UnsupportedVersionError(int version)
      : Error("unsupported store format_version " + std::to_string(version)), version_(version) {}
  int version() const noexcept { return version_; }

 private:
  int version_;
};

/// Upstream HTTP provider answered with a non-2xx status (or could not be reached).
class ProviderError : public Error {
 public:
  ProviderError(int status, std::string body_excerpt)
      : Error("provider error: HTTP " + std::to_string(status) +
              (body_excerpt.empty() ? std::string{} : ": " + body_excerpt)),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}
  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

class TimeoutError : public Error {
 public:
  using Error::Error;
};

/// Response could not be parsed according to the wire protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

/// Judge reply was unparseable or out of range twice in a row.
class JudgeFormatError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Wraps a failure inside the RAG pipeline with the stage that produced it
/// ("retrieval" or "generation").
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, bool timeout = false)
      : Error(stage + ": " + what), stage_(std::move(stage)), timeout_(timeout) {}
  const std::string& stage() const noexcept { return stage_; }
  bool timeout() const noexcept { return timeout_; }

 private:
  std::string stage_;
  bool timeout_;
};

}  // namespace sabia
