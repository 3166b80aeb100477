#pragma once

#include <stdexcept>
#include <string>

namespace aria {

// Base of every error raised by the engine. Each subclass names one failure
// class from the module contracts so callers can catch precisely.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CycleError : public Error {
 public:
  using Error::Error;
};

class UnknownNode : public Error {
 public:
  using Error::Error;
};

// Transport or process failure after retries were exhausted.
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

// Wire payload could not be decoded.
class MalformedResponse : public Error {
 public:
  using Error::Error;
};

class CacheMiss : public Error {
 public:
  explicit CacheMiss(std::string digest)
      : Error("cache miss for digest " + digest), digest_(std::move(digest)) {}
  const std::string& digest() const { return digest_; }

 private:
  std::string digest_;
};

class PlanningFailed : public Error {
 public:
  using Error::Error;
};

class DependencyUnresolved : public Error {
 public:
  using Error::Error;
};

class ScorerFailed : public Error {
 public:
  using Error::Error;
};

class EmptyLabels : public Error {
 public:
  using Error::Error;
};

class IndexUnavailable : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyMatrix : public Error {
 public:
  using Error::Error;
};

class InsufficientAttempts : public Error {
 public:
  using Error::Error;
};

// Configuration schema violation. `field()` is the dotted path of the
// offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace aria
