#pragma once

#include <stdexcept>
#include <string>

namespace sdfdiff {

/// Precondition violated by the caller (bad sizes, radii, indices, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A query point lies outside the grid's bounding box.
class OutOfDomain : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Interpolated SDF gradient too small to define a surface normal.
class DegenerateNormal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values met during an update (e.g. NaN gradients).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read, written or parsed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sdfdiff
