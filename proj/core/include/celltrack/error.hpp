#pragma once

#include <stdexcept>
#include <string>

namespace celltrack {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or volume extents that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files (PGM, CSV, .ctn, JSON).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values or keys. Maps to CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage needs an artifact an earlier stage has not produced. Exit code 3.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or degenerate model. Exit code 4.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace celltrack
