#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace bsmr {

using Vector = std::vector<double>;

// Dense row-major matrix.  Rows are contiguous, so the kernel primitives
// operate on row spans directly.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v);
  void resize(std::size_t rows, std::size_t cols, double fill = 0.0);

  Matrix transposed() const;
  Vector col(std::size_t j) const;
  void set_col(std::size_t j, const Vector& v);

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double a);

  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// c = a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * a, symmetric
Matrix crossprod(const Matrix& a);
// a^T * b
Matrix crossprod(const Matrix& a, const Matrix& b);
// a * x
Vector matvec(const Matrix& a, const Vector& x);
// a^T * x
Vector tmatvec(const Matrix& a, const Vector& x);
// max_{ij} |a_ij|
double max_abs(const Matrix& a);
// max_{ij} |a_ij - b_ij|
double max_abs_diff(const Matrix& a, const Matrix& b);
// sum_{ij} (a_ij - b_ij)^2
double frobenius_sq_diff(const Matrix& a, const Matrix& b);

double dot(const Vector& x, const Vector& y);

}  // namespace bsmr
