#pragma once

#include <stdexcept>
#include <string>

namespace seeds {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A file was readable but its contents are malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Image or label map dimensions are unusable or disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is out of range or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A mathematical precondition (normalization, bin count, ...) does not hold.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace seeds
