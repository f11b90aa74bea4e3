#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "projuq/errors.hpp"
#include "projuq/vec.hpp"

namespace projuq {

/// Dense real matrix, column-major storage.
class Mat {
 public:
  Mat() : rows_(0), cols_(0) {}
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Mat from_columns(const std::vector<Vec>& cols) {
    if (cols.empty()) return Mat();
    Mat m(cols.front().size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j].size() != m.rows_) throw DimensionError("from_columns: ragged input");
      std::copy(cols[j].begin(), cols[j].end(), m.col(j).begin());
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const {
    return {data_.data() + j * rows_, rows_};
  }

  Vec col_copy(std::size_t j) const {
    auto c = col(j);
    return Vec(c.begin(), c.end());
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  Mat transposed() const {
    Mat t(cols_, rows_);
    for (std::size_t j = 0; j < cols_; ++j)
      for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
    return t;
  }

  /// y = A x, deterministic (sequential) summation.
  Vec apply(std::span<const double> x) const {
    if (x.size() != cols_) throw DimensionError("Mat::apply: dimension mismatch");
    Vec y(rows_, 0.0);
    for (std::size_t j = 0; j < cols_; ++j) {
      const double xj = x[j];
      const double* cj = data_.data() + j * rows_;
      for (std::size_t i = 0; i < rows_; ++i) y[i] += cj[i] * xj;
    }
    return y;
  }

  /// y = A^T x
  Vec apply_transpose(std::span<const double> x) const {
    if (x.size() != rows_) throw DimensionError("Mat::apply_transpose: dimension mismatch");
    Vec y(cols_, 0.0);
    for (std::size_t j = 0; j < cols_; ++j) {
      const double* cj = data_.data() + j * rows_;
      double s = 0.0;
      for (std::size_t i = 0; i < rows_; ++i) s += cj[i] * x[i];
      y[j] = s;
    }
    return y;
  }

  Mat multiply(const Mat& b) const {
    if (cols_ != b.rows_) throw DimensionError("Mat::multiply: dimension mismatch");
    Mat c(rows_, b.cols_);
    for (std::size_t j = 0; j < b.cols_; ++j) {
      for (std::size_t k = 0; k < cols_; ++k) {
        const double bkj = b(k, j);
        if (bkj == 0.0) continue;
        const double* ak = data_.data() + k * rows_;
        double* cj = c.data_.data() + j * rows_;
        for (std::size_t i = 0; i < rows_; ++i) cj[i] += ak[i] * bkj;
      }
    }
    return c;
  }

  /// this^T * b without forming the transpose.
  Mat transpose_multiply(const Mat& b) const {
    if (rows_ != b.rows_) throw DimensionError("Mat::transpose_multiply: dimension mismatch");
    Mat c(cols_, b.cols_);
    for (std::size_t j = 0; j < b.cols_; ++j)
      for (std::size_t i = 0; i < cols_; ++i) c(i, j) = dot(col(i), b.col(j));
    return c;
  }

  Mat operator+(const Mat& b) const {
    check_same_shape(b, "operator+");
    Mat c = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) c.data_[i] += b.data_[i];
    return c;
  }

  Mat operator-(const Mat& b) const {
    check_same_shape(b, "operator-");
    Mat c = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) c.data_[i] -= b.data_[i];
    return c;
  }

  Mat operator*(double a) const {
    Mat c = *this;
    for (double& v : c.data_) v *= a;
    return c;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  Mat block(std::size_t i0, std::size_t j0, std::size_t r, std::size_t c) const {
    if (i0 + r > rows_ || j0 + c > cols_) throw DimensionError("Mat::block: out of bounds");
    Mat b(r, c);
    for (std::size_t j = 0; j < c; ++j)
      for (std::size_t i = 0; i < r; ++i) b(i, j) = (*this)(i0 + i, j0 + j);
    return b;
  }

  /// Horizontal concatenation [this | b].
  Mat hcat(const Mat& b) const {
    if (b.empty()) return *this;
    if (empty()) return b;
    if (rows_ != b.rows_) throw DimensionError("Mat::hcat: row mismatch");
    Mat c(rows_, cols_ + b.cols_);
    std::copy(data_.begin(), data_.end(), c.data_.begin());
    std::copy(b.data_.begin(), b.data_.end(), c.data_.begin() + data_.size());
    return c;
  }

 private:
  void check_same_shape(const Mat& b, const char* op) const {
    if (rows_ != b.rows_ || cols_ != b.cols_)
      throw DimensionError(std::string("Mat::") + op + ": shape mismatch");
  }

  std::size_t rows_, cols_;
  std::vector<double> data_;
};

/// Compressed sparse row storage.
struct Csr {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;  // length rows + 1, nondecreasing
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  void validate() const {
    if (row_ptr.size() != rows + 1) throw InvalidArgumentError("csr: bad row_ptr length");
    if (row_ptr.front() != 0 || row_ptr.back() != values.size())
      throw InvalidArgumentError("csr: row_ptr endpoints inconsistent");
    if (col_idx.size() != values.size())
      throw InvalidArgumentError("csr: col_idx/values length mismatch");
    for (std::size_t i = 0; i < rows; ++i)
      if (row_ptr[i + 1] < row_ptr[i])
        throw InvalidArgumentError("csr: row_ptr not nondecreasing");
    for (std::size_t c : col_idx)
      if (c >= cols) throw InvalidArgumentError("csr: column index out of bounds");
  }

  /// Build from (i, j, v) triplets; duplicates are summed.
  static Csr from_triplets(std::size_t rows, std::size_t cols,
                           std::vector<std::tuple<std::size_t, std::size_t, double>> t) {
    for (const auto& [i, j, v] : t) {
      (void)v;
      if (i >= rows || j >= cols) throw InvalidArgumentError("csr: triplet out of bounds");
    }
    std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) {
      return std::tie(std::get<0>(a), std::get<1>(a)) <
             std::tie(std::get<0>(b), std::get<1>(b));
    });
    Csr m;
    m.rows = rows;
    m.cols = cols;
    m.row_ptr.assign(rows + 1, 0);
    for (std::size_t k = 0; k < t.size();) {
      const auto [i, j, v0] = t[k];
      double v = v0;
      std::size_t k2 = k + 1;
      while (k2 < t.size() && std::get<0>(t[k2]) == i && std::get<1>(t[k2]) == j) {
        v += std::get<2>(t[k2]);
        ++k2;
      }
      m.col_idx.push_back(j);
      m.values.push_back(v);
      ++m.row_ptr[i + 1];
      k = k2;
    }
    std::partial_sum(m.row_ptr.begin(), m.row_ptr.end(), m.row_ptr.begin());
    m.validate();
    return m;
  }

  Vec apply(std::span<const double> x) const {
    if (x.size() != cols) throw DimensionError("Csr::apply: dimension mismatch");
    Vec y(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
        s += values[k] * x[col_idx[k]];
      y[i] = s;
    }
    return y;
  }

  Vec apply_transpose(std::span<const double> x) const {
    if (x.size() != rows) throw DimensionError("Csr::apply_transpose: dimension mismatch");
    Vec y(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
        y[col_idx[k]] += values[k] * xi;
    }
    return y;
  }

  Mat densify() const {
    Mat d(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
        d(i, col_idx[k]) += values[k];
    return d;
  }

  std::size_t nnz() const { return values.size(); }
};

/// Uniform handle over dense and CSR matrices. Immutable after construction;
/// safe to share across threads.
class MatrixHandle {
 public:
  enum class Kind { dense, csr };

  MatrixHandle() : storage_(Mat()) {}

  explicit MatrixHandle(Mat m, bool symmetric = false)
      : storage_(std::move(m)), symmetric_(symmetric) {
    if (symmetric_ && rows() != cols())
      throw InvalidArgumentError("MatrixHandle: symmetric flag on non-square matrix");
  }

  explicit MatrixHandle(Csr m, bool symmetric = false)
      : storage_(std::move(m)), symmetric_(symmetric) {
    std::get<Csr>(storage_).validate();
    if (symmetric_ && rows() != cols())
      throw InvalidArgumentError("MatrixHandle: symmetric flag on non-square matrix");
  }

  Kind kind() const {
    return std::holds_alternative<Mat>(storage_) ? Kind::dense : Kind::csr;
  }

  std::size_t rows() const {
    if (kind() == Kind::dense) return std::get<Mat>(storage_).rows();
    return std::get<Csr>(storage_).rows;
  }
  std::size_t cols() const {
    if (kind() == Kind::dense) return std::get<Mat>(storage_).cols();
    return std::get<Csr>(storage_).cols;
  }

  bool symmetric() const { return symmetric_; }

  Vec apply(std::span<const double> x) const {
    return std::visit([&](const auto& m) { return m.apply(x); }, storage_);
  }

  Vec apply_transpose(std::span<const double> x) const {
    if (symmetric_) return apply(x);
    return std::visit([&](const auto& m) { return m.apply_transpose(x); }, storage_);
  }

  /// A * B column by column.
  Mat apply_mat(const Mat& b) const {
    Mat out(rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
      Vec y = apply(b.col(j));
      std::copy(y.begin(), y.end(), out.col(j).begin());
    }
    return out;
  }

  /// A^T * B column by column.
  Mat apply_transpose_mat(const Mat& b) const {
    Mat out(cols(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
      Vec y = apply_transpose(b.col(j));
      std::copy(y.begin(), y.end(), out.col(j).begin());
    }
    return out;
  }

  Mat densify() const {
    if (kind() == Kind::dense) return std::get<Mat>(storage_);
    return std::get<Csr>(storage_).densify();
  }

  const Mat& dense() const {
    if (kind() != Kind::dense) throw InvalidArgumentError("MatrixHandle: not dense");
    return std::get<Mat>(storage_);
  }

  const Csr& csr() const {
    if (kind() != Kind::csr) throw InvalidArgumentError("MatrixHandle: not csr");
    return std::get<Csr>(storage_);
  }

 private:
  std::variant<Mat, Csr> storage_;
  bool symmetric_ = false;
};

}  // namespace projuq
