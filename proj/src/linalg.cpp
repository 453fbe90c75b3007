#include "bsmr/linalg.hpp"

#include <cassert>
#include <cmath>

#include "bsmr/kernels.hpp"

namespace bsmr {

Matrix cholesky(const Matrix& a) {
  assert(a.rows() == a.cols());
  const std::size_t n = a.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    max_diag = std::max(max_diag, std::fabs(a(i, i)));
  const double floor = 1e-12 * max_diag;

  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j) - kernels::sumsq(l.row(j), j);
    if (!(d > 0.0) || d < floor)
      throw CholeskyError(j, "cholesky pivot " + std::to_string(j) +
                                 " non-positive or below tolerance");
    d = std::sqrt(d);
    l(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i)
      l(i, j) = (a(i, j) - kernels::dot(l.row(i), l.row(j), j)) / d;
  }
  return l;
}

void chol_solve_in_place(const Matrix& l, Vector& b) {
  const std::size_t n = l.rows();
  assert(b.size() == n);
  for (std::size_t i = 0; i < n; ++i)
    b[i] = (b[i] - kernels::dot(l.row(i), b.data(), i)) / l(i, i);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * b[k];
    b[i] = s / l(i, i);
  }
}

Matrix chol_solve(const Matrix& l, const Matrix& rhs) {
  assert(rhs.rows() == l.rows());
  Matrix x = rhs;
  Vector col(l.rows());
  for (std::size_t j = 0; j < rhs.cols(); ++j) {
    col = x.col(j);
    chol_solve_in_place(l, col);
    x.set_col(j, col);
  }
  return x;
}

void tri_upper_solve_in_place(const Matrix& l, Vector& b) {
  const std::size_t n = l.rows();
  assert(b.size() == n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * b[k];
    b[i] = s / l(i, i);
  }
}

double chol_logdet(const Matrix& l) {
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

Matrix spd_solve(const Matrix& a, const Matrix& rhs) {
  return chol_solve(cholesky(a), rhs);
}

Vector spd_solve(const Matrix& a, const Vector& rhs) {
  Vector x = rhs;
  chol_solve_in_place(cholesky(a), x);
  return x;
}

Matrix spd_inverse_mat(const Matrix& a) {
  Matrix inv = spd_solve(a, Matrix::identity(a.rows()));
  symmetrize(inv);
  return inv;
}

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::fabs(a(i, j) - a(j, i)) > tol) return false;
  return true;
}

void symmetrize(Matrix& a) {
  assert(a.rows() == a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = v;
      a(j, i) = v;
    }
}

SpdMatrix::SpdMatrix(Matrix m) : mat_(std::move(m)) {
  if (!is_symmetric(mat_))
    throw std::invalid_argument("SpdMatrix: matrix not symmetric");
  chol_ = cholesky(mat_);
}

SpdMatrix spd_inverse(const SpdMatrix& a) {
  Matrix inv = chol_solve(a.chol(), Matrix::identity(a.dim()));
  symmetrize(inv);
  return SpdMatrix(std::move(inv));
}

}  // namespace bsmr
