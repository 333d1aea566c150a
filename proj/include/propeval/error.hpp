#pragma once

#include <stdexcept>
#include <string>

namespace propeval {

// Every failure raised by the library derives from Error so the CLI can map
// the category to an exit code without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document; the message names the offending JSON path.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A well-formed record that violates the interchange schema (missing
// geometry for the task, polygon with too few vertices, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Dangling image/category references or duplicate identifiers.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Invalid run-length data: negative counts, bad characters, wrong totals.
class CodecError : public Error {
 public:
  using Error::Error;
};

// Masks of differing size combined in one operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace propeval
