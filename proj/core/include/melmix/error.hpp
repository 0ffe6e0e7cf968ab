#pragma once

#include <stdexcept>
#include <string>

namespace melmix {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Matrix/vector shape disagreement.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid parameter value (dropout p >= 1, w >= L/2, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed input bytes: JSON, SMF, WAV, TEN1, MEL1.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Input value outside the accepted domain (non-Hangul syllable, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// Value outside a configured range (pitch outside vocabulary, frame past end).
class RangeError : public Error {
 public:
  using Error::Error;
};

// Paired sequences that fail to line up (notes vs lyrics, frames vs mel).
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Token id outside the embedding table.
class VocabError : public Error {
 public:
  using Error::Error;
};

// Input that is structurally valid but has nothing to operate on.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Non-finite value where a finite one is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Operation not supported by the given model variant.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Filesystem read/write failure.
class IoError : public Error {
 public:
  using Error::Error;
};

// Bad run configuration (CLI / config file level).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace melmix
