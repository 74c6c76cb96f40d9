#ifndef PFORGE_ERRORS_HPP
#define PFORGE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pforge {

/// Shape of an input does not match what the operation expects.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Index (e.g. user index) outside the valid range.
class IndexError : public std::out_of_range {
 public:
  explicit IndexError(const std::string& what) : std::out_of_range(what) {}
};

/// Scalar parameter outside its domain (negative delta, zero noise power, ...).
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// Matrix inversion requested on a rank-deficient system.
class SingularMatrixError : public std::runtime_error {
 public:
  explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed file contents; the message carries the byte offset of the problem.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// File version newer than this build can read.
class UnsupportedVersionError : public FormatError {
 public:
  explicit UnsupportedVersionError(const std::string& what) : FormatError(what) {}
};

/// Inconsistent run configuration (model dims vs dataset dims, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem problem: missing file, short read, failed write.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite value where the computation cannot continue.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pforge

#endif  // PFORGE_ERRORS_HPP
