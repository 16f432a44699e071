/*
 * Copyright 2026 The MultiMix Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MULTIMIX_NUMERICS_HPP
#define MULTIMIX_NUMERICS_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace multimix {

/*
 * Dense row-major matrix of doubles.
 *
 * Columns are the natural unit throughout the library: a mini-batch of b
 * examples is stored as a D x b matrix, one example per column, and an
 * interpolation matrix has one simplex vector per column.
 */
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  /// Builds a matrix from nested row lists; all rows must have equal length.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);
  /// A single column holding `values`.
  static Matrix column_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> values);

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Throws NumericError if any entry of `m` is NaN or Inf.
void check_finite(const Matrix& m, const char* where);

Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose.
Matrix transposed_matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double factor);
/// In place a += factor * b.
void axpy(Matrix& a, double factor, const Matrix& b);

/// Column-wise softmax with per-column max subtraction.
Matrix softmax_columns(const Matrix& logits);

/// Divides each column by its sum. A column whose sum is not positive raises
/// DegenerateError; callers that need a fallback catch it or pre-check.
Matrix column_l1_normalize(const Matrix& m);

std::vector<double> column_sums(const Matrix& m);
std::vector<double> row_sums(const Matrix& m);

double frobenius_norm(const Matrix& m);
double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace multimix

#endif  // MULTIMIX_NUMERICS_HPP
