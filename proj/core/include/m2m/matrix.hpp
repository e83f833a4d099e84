#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace m2m {

/// Dense row-major matrix of doubles. Rows are contiguous, so per-unit
/// covariate vectors can be handed around as spans without copying.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Copies the given rows (in order) into a new matrix.
inline Matrix gather_rows(const Matrix& x, std::span<const int> rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = x.row(static_cast<std::size_t>(rows[i]));
    auto dst = out.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) dst[j] = src[j];
  }
  return out;
}

/// Copies the given columns (in order) for the given rows into a new matrix.
inline Matrix gather(const Matrix& x, std::span<const int> rows,
                     std::span<const int> cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = x.row(static_cast<std::size_t>(rows[i]));
    auto dst = out.row(i);
    for (std::size_t j = 0; j < cols.size(); ++j)
      dst[j] = src[static_cast<std::size_t>(cols[j])];
  }
  return out;
}

inline std::vector<double> gather_values(std::span<const double> v,
                                         std::span<const int> idx) {
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out[i] = v[static_cast<std::size_t>(idx[i])];
  return out;
}

inline std::vector<int> gather_values(std::span<const int> v, std::span<const int> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out[i] = v[static_cast<std::size_t>(idx[i])];
  return out;
}

}  // namespace m2m
