#pragma once

#include <stdexcept>
#include <string>

namespace phdeval {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FileNotFound : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class ZeroDimension : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyMask : public Error {
 public:
  using Error::Error;
};

/// One side of a point-set comparison was empty.
class EmptySkeleton : public Error {
 public:
  enum class Side { X, Y };
  EmptySkeleton(Side side, const std::string& what) : Error(what), side_(side) {}
  Side side() const noexcept { return side_; }

 private:
  Side side_;
};

class OutOfBounds : public Error {
 public:
  using Error::Error;
};

class NonFiniteScore : public Error {
 public:
  using Error::Error;
};

class DuplicateSubjectVote : public Error {
 public:
  using Error::Error;
};

class MissingScores : public Error {
 public:
  using Error::Error;
};

class ManifestMismatch : public Error {
 public:
  using Error::Error;
};

/// Malformed input document; line is 1-based, 0 when not applicable.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace phdeval
