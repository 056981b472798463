#pragma once

#include <stdexcept>
#include <string>

namespace ufce {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A dataset column named by the schema descriptor is missing, or the
/// descriptor itself is malformed.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(what + " (row " + std::to_string(row) + ")"), row_(row) {}
  explicit ParseError(const std::string& what) : Error(what), row_(0) {}

  [[nodiscard]] std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class CardinalityError : public Error {
 public:
  using Error::Error;
};

/// No training row carries the desired label, so no counterfactual can be
/// anchored in the desired space.
class DesiredSpaceEmpty : public Error {
 public:
  using Error::Error;
};

class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

/// The instance is already classified as the desired label.
class NothingToExplain : public Error {
 public:
  using Error::Error;
};

}  // namespace ufce
