// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace lapeig {

/// Failure categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  usage = 1,
  data = 2,
  numerical = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad arguments or parameter combinations supplied by the caller.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Input data that cannot be used: malformed files, missing labels, absent classes.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Binary or text container that does not follow its documented layout.
class FormatError : public DataError {
 public:
  explicit FormatError(const std::string& what) : DataError(what) {}
};

/// Decoded content that violates a domain invariant (NaN attention, negative weights, ...).
class ValidationError : public DataError {
 public:
  explicit ValidationError(const std::string& what) : DataError(what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

}  // namespace lapeig
