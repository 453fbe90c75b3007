#include "bsmr/matrix.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "bsmr/kernels.hpp"

namespace bsmr {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { data_.assign(data_.size(), v); }

void Matrix::resize(std::size_t rows, std::size_t cols, double fill) {
  rows_ = rows;
  cols_ = cols;
  data_.assign(rows * cols, fill);
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Vector Matrix::col(std::size_t j) const {
  Vector v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

void Matrix::set_col(std::size_t j, const Vector& v) {
  assert(v.size() == rows_);
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix& Matrix::operator+=(const Matrix& o) {
  assert(rows_ == o.rows_ && cols_ == o.cols_);
  kernels::axpy(1.0, o.data(), data(), size());
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  assert(rows_ == o.rows_ && cols_ == o.cols_);
  kernels::axpy(-1.0, o.data(), data(), size());
  return *this;
}

Matrix& Matrix::operator*=(double a) {
  kernels::scale(a, data(), size());
  return *this;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  assert(a.cols() == b.rows());
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k)
      kernels::axpy(ai[k], b.row(k), ci, b.cols());
  }
  return c;
}

Matrix crossprod(const Matrix& a) {
  Matrix c(a.cols(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    for (std::size_t r = 0; r < a.cols(); ++r)
      kernels::axpy(ai[r], ai, c.row(r), a.cols());
  }
  return c;
}

Matrix crossprod(const Matrix& a, const Matrix& b) {
  assert(a.rows() == b.rows());
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    const double* bi = b.row(i);
    for (std::size_t r = 0; r < a.cols(); ++r)
      kernels::axpy(ai[r], bi, c.row(r), b.cols());
  }
  return c;
}

Vector matvec(const Matrix& a, const Vector& x) {
  assert(x.size() == a.cols());
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    y[i] = kernels::dot(a.row(i), x.data(), a.cols());
  return y;
}

Vector tmatvec(const Matrix& a, const Vector& x) {
  assert(x.size() == a.rows());
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    kernels::axpy(x[i], a.row(i), y.data(), a.cols());
  return y;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a.data()[i]));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

double frobenius_sq_diff(const Matrix& a, const Matrix& b) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return s;
}

double dot(const Vector& x, const Vector& y) {
  assert(x.size() == y.size());
  return kernels::dot(x.data(), y.data(), x.size());
}

}  // namespace bsmr
