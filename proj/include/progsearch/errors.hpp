#pragma once

#include <stdexcept>
#include <string>

namespace progsearch {

/// Bad argument or configuration (ranges, shapes, invalid configs).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A search was asked to run over zero rows.
class EmptyInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failure: open, short write, permissions.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FormatErrc {
  bad_magic,
  bad_version,
  truncated,
  zero_dim,
  duplicate_id,
  non_finite,
  malformed,
};

const char* to_string(FormatErrc code);

/// A file that opened fine but does not conform to its format.
class FormatError : public IoError {
 public:
  FormatError(FormatErrc code, const std::string& what)
      : IoError(std::string(to_string(code)) + ": " + what), code_(code) {}

  FormatErrc code() const noexcept { return code_; }

 private:
  FormatErrc code_;
};

}  // namespace progsearch
