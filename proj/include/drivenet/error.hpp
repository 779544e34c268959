#pragma once

#include <stdexcept>
#include <string>

namespace drivenet {

// Base type for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tensor dimensions do not line up; the message names the offending dims.
struct ShapeError : Error {
  using Error::Error;
};

// Scalar argument outside its valid range (dropout rate, class label, ...).
struct ValueError : Error {
  using Error::Error;
};

// Could not open / read / write a file.
struct IoError : Error {
  using Error::Error;
};

// Malformed file contents (PNM header, manifest CSV, DRVN container).
struct FormatError : Error {
  using Error::Error;
};

// File ends before the announced payload does.
struct TruncatedError : FormatError {
  using FormatError::FormatError;
};

// Container carries a format version this build does not understand.
struct VersionError : FormatError {
  using FormatError::FormatError;
};

// Bad run configuration (unknown key, unparseable value, missing input path).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace drivenet
