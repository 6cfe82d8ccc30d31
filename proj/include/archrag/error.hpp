#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace archrag {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or missing configuration (missing base URL, invalid parameter, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A line-oriented input file could not be parsed.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(std::string id)
      : Error("duplicate doc_id '" + id + "'"), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t actual)
      : Error("dimension mismatch: expected " + std::to_string(expected) +
              ", got " + std::to_string(actual)) {}
};

/// Failure talking to an external backend (LLM, embedder, NER, judge).
class BackendError : public Error {
 public:
  BackendError(std::string component, const std::string& what, int status = 0,
               bool retryable = true)
      : Error(component + ": " + what),
        component_(std::move(component)),
        status_(status),
        retryable_(retryable) {}

  const std::string& component() const noexcept { return component_; }
  /// HTTP status, 0 for transport-level failures.
  int status() const noexcept { return status_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  std::string component_;
  int status_;
  bool retryable_;
};

class AnnotationError : public Error {
 public:
  AnnotationError(std::string chunk_id, const std::string& what)
      : Error("annotation of " + chunk_id + " failed: " + what),
        chunk_id_(std::move(chunk_id)) {}
  const std::string& chunk_id() const noexcept { return chunk_id_; }

 private:
  std::string chunk_id_;
};

/// Index file is unreadable: wrong magic/version or truncated.
class IndexFormatError : public Error {
 public:
  IndexFormatError(std::uint64_t offset, const std::string& what)
      : Error("index format error at byte " + std::to_string(offset) + ": " +
              what),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// A metric is not defined on the given input (e.g. fewer than two items).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

}  // namespace archrag
