#pragma once

#include <stdexcept>
#include <string>

namespace eslsc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A serialized record is malformed; the message names the offending field.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A record parsed but violates a question invariant (no blanks, duplicate options, ...).
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Option segments cannot be substituted into the stem.
class FillError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced by a forward op or a loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Index, id or length outside its allowed range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Missing, unreadable or mutually incompatible artifact files.
class ArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace eslsc
