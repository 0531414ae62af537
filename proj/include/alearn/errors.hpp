// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace alearn {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV row, checkpoint, curve file).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  /// 1-based line number, 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

/// Duplicate ids, unknown class names, overlapping partitions.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Dimension mismatch between matrices, models or examples.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Training preconditions not met (e.g. a single class).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// A configuration value or argument outside its valid range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// The label source failed to answer.
class OracleError : public Error {
 public:
  using Error::Error;
};

/// A submission that does not match the outstanding query.
class ConflictError : public Error {
 public:
  using Error::Error;
};

/// Lookup of an id that does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// The unlabeled pool has no instances left to query.
class PoolExhaustedError : public Error {
 public:
  using Error::Error;
};

}  // namespace alearn
