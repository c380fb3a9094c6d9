/// @file  errors.hpp
/// @brief Exception hierarchy shared by every addkit module

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace addkit {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value lies outside the carrier set of an algebra.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Two weight vectors of different dimension were combined.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Division by zero. `component()` is the offending vector index, or npos for
/// scalar algebras.
class ArithmeticError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit ArithmeticError(const std::string& what, std::size_t component = npos)
      : Error(what), component_(component) {}

  std::size_t component() const noexcept { return component_; }

 private:
  std::size_t component_;
};

/// Unknown operation names, malformed algebra descriptors.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A NodeRef was handed to a Manager that does not own it.
class OwnershipError : public Error {
 public:
  using Error::Error;
};

/// Missing or malformed evaluation input.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Errors that carry a location inside a document: "line:col" for syntax
/// errors, a JSON pointer for validation errors, a column for expressions.
class LocatedError : public Error {
 public:
  LocatedError(const std::string& what, std::string location)
      : Error(location.empty() ? what : location + ": " + what),
        message_(what),
        location_(std::move(location)) {}

  const std::string& message() const noexcept { return message_; }
  const std::string& location() const noexcept { return location_; }

 private:
  std::string message_;
  std::string location_;
};

class ParseError : public LocatedError {
 public:
  using LocatedError::LocatedError;
};

class ValidationError : public LocatedError {
 public:
  using LocatedError::LocatedError;
};

/// Lookup of a diagram name that is not bound.
class UnknownDiagramError : public Error {
 public:
  explicit UnknownDiagramError(const std::string& name)
      : Error("unknown diagram '" + name + "'"), name_(name) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

}  // namespace addkit
