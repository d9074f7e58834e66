#include "hype/matrix.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>

namespace hype {

namespace {

double round_to_width(double v, FloatWidth width) {
  return width == FloatWidth::f32 ? static_cast<double>(static_cast<float>(v)) : v;
}

void require_same_width(const Matrix& a, const Matrix& b, const char* op) {
  if (a.width() != b.width()) {
    throw ShapeError(std::string(op) + ": width mismatch (" + to_string(a.width()) + " vs " +
                     to_string(b.width()) + ")");
  }
}

}  // namespace

const char* to_string(FloatWidth width) {
  return width == FloatWidth::f32 ? "f32" : "f64";
}

double width_max(FloatWidth width) {
  return width == FloatWidth::f32 ? static_cast<double>(std::numeric_limits<float>::max())
                                  : std::numeric_limits<double>::max();
}

Matrix::Matrix(std::size_t rows, std::size_t cols, FloatWidth width)
    : rows_(rows), cols_(cols), width_(width), data_(rows * cols, 0.0) {}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows,
                         FloatWidth width) {
  const std::size_t nr = rows.size();
  const std::size_t nc = nr == 0 ? 0 : rows.begin()->size();
  Matrix m(nr, nc, width);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != nc) {
      throw ShapeError("from_rows: ragged row lengths");
    }
    std::size_t j = 0;
    for (double v : row) {
      m.set(i, j++, v);
    }
    ++i;
  }
  return m;
}

Matrix Matrix::identity(std::size_t n, FloatWidth width) {
  Matrix m(n, n, width);
  for (std::size_t i = 0; i < n; ++i) {
    m.set(i, i, 1.0);
  }
  return m;
}

void Matrix::set(std::size_t r, std::size_t c, double v) {
  const double stored = round_to_width(v, width_);
  if (!std::isfinite(stored)) {
    throw OverflowError("non-finite value at (" + std::to_string(r) + ", " + std::to_string(c) +
                        ") for width " + to_string(width_));
  }
  data_[r * cols_ + c] = stored;
}

Matrix Matrix::transpose() const {
  Matrix out(cols_, rows_, width_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) {
      out.data_[j * rows_ + i] = data_[i * cols_ + j];
    }
  }
  return out;
}

Matrix Matrix::slice_cols(std::size_t first, std::size_t count) const {
  if (first + count > cols_) {
    throw ShapeError("slice_cols: range [" + std::to_string(first) + ", " +
                     std::to_string(first + count) + ") exceeds " + std::to_string(cols_) +
                     " columns");
  }
  Matrix out(rows_, count, width_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < count; ++j) {
      out.data_[i * count + j] = data_[i * cols_ + first + j];
    }
  }
  return out;
}

bool operator==(const Matrix& a, const Matrix& b) {
  if (a.width_ != b.width_ || a.rows_ != b.rows_ || a.cols_ != b.cols_) {
    return false;
  }
  return std::equal(a.data_.begin(), a.data_.end(), b.data_.begin());
}

bool bits_equal(const Matrix& a, const Matrix& b) {
  if (a.width() != b.width() || a.rows() != b.rows() || a.cols() != b.cols()) {
    return false;
  }
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(av[i]) != std::bit_cast<std::uint64_t>(bv[i])) {
      return false;
    }
  }
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_same_width(a, b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_string(a) + " x " + shape_string(b));
  }
  const std::size_t n = a.rows();
  const std::size_t k = a.cols();
  const std::size_t m = b.cols();
  Matrix out(n, m, a.width());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        acc += a(i, p) * b(p, j);
      }
      out.set(i, j, acc);
    }
  }
  return out;
}

Matrix row_softmax(const Matrix& a) {
  Matrix out(a.rows(), a.cols(), a.width());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < a.cols(); ++j) {
      row_max = std::max(row_max, a(i, j));
    }
    double sum = 0.0;
    std::vector<double> exps(a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j) {
      exps[j] = std::exp(a(i, j) - row_max);
      sum += exps[j];
    }
    for (std::size_t j = 0; j < a.cols(); ++j) {
      out.set(i, j, exps[j] / sum);
    }
  }
  return out;
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  require_same_width(a, b, "concat_cols");
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_cols: " + shape_string(a) + " vs " + shape_string(b));
  }
  Matrix out(a.rows(), a.cols() + b.cols(), a.width());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      out.set(i, j, a(i, j));
    }
    for (std::size_t j = 0; j < b.cols(); ++j) {
      out.set(i, a.cols() + j, b(i, j));
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) { return a.transpose(); }

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_width(a, b, "add");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("add: " + shape_string(a) + " vs " + shape_string(b));
  }
  return Matrix::from_fn(
      a.rows(), a.cols(), [&](std::size_t i, std::size_t j) { return a(i, j) + b(i, j); },
      a.width());
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_width(a, b, "subtract");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("subtract: " + shape_string(a) + " vs " + shape_string(b));
  }
  return Matrix::from_fn(
      a.rows(), a.cols(), [&](std::size_t i, std::size_t j) { return a(i, j) - b(i, j); },
      a.width());
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_width(a, b, "hadamard");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("hadamard: " + shape_string(a) + " vs " + shape_string(b));
  }
  return Matrix::from_fn(
      a.rows(), a.cols(), [&](std::size_t i, std::size_t j) { return a(i, j) * b(i, j); },
      a.width());
}

Matrix scale(const Matrix& a, double factor) {
  return Matrix::from_fn(
      a.rows(), a.cols(), [&](std::size_t i, std::size_t j) { return a(i, j) * factor; },
      a.width());
}

namespace {

// Canonical mt19937_64 -> [0, 1) mapping.
double next_unit(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace

Matrix random_fill(std::size_t rows, std::size_t cols, std::uint64_t seed, Distribution dist,
                   FloatWidth width) {
  std::mt19937_64 eng(seed);
  Matrix m(rows, cols, width);
  const std::size_t total = rows * cols;
  std::vector<double> draws;
  draws.reserve(total);
  if (dist == Distribution::UniformSigned) {
    for (std::size_t i = 0; i < total; ++i) {
      draws.push_back(2.0 * next_unit(eng) - 1.0);
    }
  } else {
    while (draws.size() < total) {
      const double u1 = 1.0 - next_unit(eng);  // (0, 1], keeps log finite
      const double u2 = next_unit(eng);
      const double r = std::sqrt(-2.0 * std::log(u1));
      draws.push_back(r * std::cos(2.0 * std::numbers::pi * u2));
      if (draws.size() < total) {
        draws.push_back(r * std::sin(2.0 * std::numbers::pi * u2));
      }
    }
  }
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      m.set(i, j, draws[i * cols + j]);
    }
  }
  return m;
}

double max_abs(const Matrix& a) {
  double best = 0.0;
  for (double v : a.values()) {
    best = std::max(best, std::abs(v));
  }
  return best;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("max_abs_diff: " + shape_string(a) + " vs " + shape_string(b));
  }
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      best = std::max(best, std::abs(a(i, j) - b(i, j)));
    }
  }
  return best;
}

double max_rel_error(const Matrix& actual, const Matrix& reference) {
  if (actual.rows() != reference.rows() || actual.cols() != reference.cols()) {
    throw ShapeError("max_rel_error: " + shape_string(actual) + " vs " + shape_string(reference));
  }
  double best = 0.0;
  for (std::size_t i = 0; i < actual.rows(); ++i) {
    for (std::size_t j = 0; j < actual.cols(); ++j) {
      const double denom = std::max(1.0, std::abs(reference(i, j)));
      best = std::max(best, std::abs(actual(i, j) - reference(i, j)) / denom);
    }
  }
  return best;
}

std::string shape_string(const Matrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

}  // namespace hype
