#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hsi {

enum class ErrorKind {
  Input,
  Io,
  BehindCamera,
  EmptyElement,
  Vocabulary,
  Placement,
  Transport,
  Schema,
  Validation,
  Numeric,
};

std::string_view to_string(ErrorKind kind);

/// Base of every error raised by the library. `kind()` lets callers branch
/// without catching each subclass.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed reasoner response. The raw payload is kept for debugging.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::string raw_payload)
      : Error(ErrorKind::Schema, what), raw_payload_(std::move(raw_payload)) {}

  const std::string& raw_payload() const noexcept { return raw_payload_; }

 private:
  std::string raw_payload_;
};

/// A contact graph that still violates its invariants after the repair round.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> violations)
      : Error(ErrorKind::Validation, what), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace hsi
