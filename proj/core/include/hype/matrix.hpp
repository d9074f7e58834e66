#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hype {

/// Storage width of a matrix. Arithmetic always accumulates in double;
/// f32 matrices round every stored value to the nearest float.
enum class FloatWidth { f32, f64 };

const char* to_string(FloatWidth width);

/// Largest finite value representable at the given storage width.
double width_max(FloatWidth width);

/// Dimension or width incompatibility between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation produced a value that is not finite at the storage width.
class OverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Distribution { StandardNormal, UniformSigned };

/// Dense row-major matrix of real values. Immutable by convention once
/// built: all operations return fresh matrices. Every stored value is
/// finite; writes that would store NaN/Inf at the chosen width throw
/// OverflowError instead.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, FloatWidth width = FloatWidth::f64);

  /// Builds a rows x cols matrix from fn(i, j).
  template <typename Fn>
  static Matrix from_fn(std::size_t rows, std::size_t cols, Fn&& fn,
                        FloatWidth width = FloatWidth::f64) {
    Matrix m(rows, cols, width);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        m.set(i, j, fn(i, j));
      }
    }
    return m;
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows,
                          FloatWidth width = FloatWidth::f64);
  static Matrix identity(std::size_t n, FloatWidth width = FloatWidth::f64);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  FloatWidth width() const noexcept { return width_; }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  /// Rounds v to the storage width and stores it; throws OverflowError if
  /// the rounded value is not finite.
  void set(std::size_t r, std::size_t c, double v);

  std::span<const double> values() const noexcept { return data_; }

  Matrix transpose() const;
  Matrix slice_cols(std::size_t first, std::size_t count) const;

  /// Numeric equality: same width, same shape, entrywise == (so -0 == +0).
  friend bool operator==(const Matrix& a, const Matrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  FloatWidth width_ = FloatWidth::f64;
  std::vector<double> data_;
};

/// Bit-level equality of shape, width and every stored value.
bool bits_equal(const Matrix& a, const Matrix& b);

/// Standard product. Requires a.cols == b.rows and matching widths.
/// Accumulates each entry in double over ascending inner index regardless
/// of storage width.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Row-wise softmax with per-row max subtraction.
Matrix row_softmax(const Matrix& a);

/// Horizontal concatenation; a occupies the leading columns.
Matrix concat_cols(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double factor);

/// Deterministic seeded fill. The generator is pinned: mt19937_64 uniforms
/// via (x >> 11) * 2^-53, normals via Box-Muller, so the same seed yields
/// the same matrix on any platform.
Matrix random_fill(std::size_t rows, std::size_t cols, std::uint64_t seed,
                   Distribution dist, FloatWidth width = FloatWidth::f64);

double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// max over entries of |actual - reference| / max(1, |reference|).
double max_rel_error(const Matrix& actual, const Matrix& reference);

std::string shape_string(const Matrix& a);

}  // namespace hype
