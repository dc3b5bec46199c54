#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace taskprior {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// File could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Array or CSV header is structurally invalid (bad magic, version,
/// dtype, fortran order, ragged rows, ...).
class MalformedHeader : public Error {
 public:
  using Error::Error;
};

/// An ingested value is NaN or infinite. Carries the offending location.
class NonFinite : public Error {
 public:
  NonFinite(std::int64_t row, std::int64_t col)
      : Error("non-finite value at row " + std::to_string(row) + ", col " +
              std::to_string(col)),
        row_(row),
        col_(col) {}
  std::int64_t row() const { return row_; }
  std::int64_t col() const { return col_; }

 private:
  std::int64_t row_;
  std::int64_t col_;
};

/// Array has the wrong number of dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A sample's feature vector has (near-)zero norm where a direction is
/// required. Carries the row index.
class ZeroRow : public Error {
 public:
  explicit ZeroRow(std::int64_t row)
      : Error("feature row " + std::to_string(row) +
              " has near-zero norm after centering"),
        row_(row) {}
  std::int64_t row() const { return row_; }

 private:
  std::int64_t row_;
};

class NotSquare : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

/// pair_probability was called with two identical edges; use
/// edge_probability instead.
class SameEdge : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration was requested beyond its hard size cap.
class TooLarge : public Error {
 public:
  using Error::Error;
};

/// The kernel has no low-rank factor; call factorize() first.
class MissingFactor : public Error {
 public:
  using Error::Error;
};

class InvalidClassCount : public Error {
 public:
  using Error::Error;
};

/// A sampled task cannot be probed (a class is absent from the train
/// split, or the test split is empty).
class DegenerateTask : public Error {
 public:
  using Error::Error;
};

class MissingModel : public Error {
 public:
  using Error::Error;
};

/// Catch-all for invalid scalar parameters (temperature, split, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace taskprior
