#pragma once

#include <stdexcept>
#include <string>

namespace ragforensics {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DegenerateVector : public Error {
 public:
  using Error::Error;
};

class EmbedError : public Error {
 public:
  using Error::Error;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  LoadError(const std::string& message, std::size_t line)
      : Error(message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// --- model gateway ---

/// Transport-level failure that survived the retry budget.
class RetryableError : public Error {
 public:
  using Error::Error;
};

/// Non-2xx answer from a remote endpoint.
class GatewayError : public Error {
 public:
  GatewayError(const std::string& message, int status)
      : Error(message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Scripted model asked for a prompt it has no entry for.
class ScriptMiss : public Error {
 public:
  explicit ScriptMiss(std::string digest)
      : Error("no scripted response for prompt digest " + digest),
        digest_(std::move(digest)) {}
  const std::string& digest() const noexcept { return digest_; }

 private:
  std::string digest_;
};

class BenignGenError : public Error {
 public:
  using Error::Error;
};

class NotCalibrated : public Error {
 public:
  using Error::Error;
};

class InsufficientSample : public Error {
 public:
  using Error::Error;
};

class AdaptiveAlreadyApplied : public Error {
 public:
  using Error::Error;
};

}  // namespace ragforensics
