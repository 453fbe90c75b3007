#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "bsmr/matrix.hpp"

namespace bsmr {

struct CholeskyError : std::runtime_error {
  CholeskyError(std::size_t pivot, const std::string& what)
      : std::runtime_error(what), pivot_index(pivot) {}
  std::size_t pivot_index;
};

// Lower-triangular factor L with a = L L^T.  Throws CholeskyError (with the
// offending pivot index) when a pivot is non-positive or falls below
// 1e-12 * max diagonal entry.
Matrix cholesky(const Matrix& a);

// Solve L y = b (forward) then L^T x = y (backward) in place.
void chol_solve_in_place(const Matrix& l, Vector& b);
Matrix chol_solve(const Matrix& l, const Matrix& rhs);
// Solve L^T x = b in place (used for sampling with an inverse factor).
void tri_upper_solve_in_place(const Matrix& l, Vector& b);

// log det(a) = 2 sum_i log l_ii for a = L L^T
double chol_logdet(const Matrix& l);

Matrix spd_solve(const Matrix& a, const Matrix& rhs);
Vector spd_solve(const Matrix& a, const Vector& rhs);
Matrix spd_inverse_mat(const Matrix& a);

bool is_symmetric(const Matrix& a, double tol = 1e-10);
void symmetrize(Matrix& a);

// Symmetric positive definite matrix: symmetry is checked on construction
// and a Cholesky factor is kept alongside the values.
class SpdMatrix {
 public:
  explicit SpdMatrix(Matrix m);

  const Matrix& mat() const { return mat_; }
  const Matrix& chol() const { return chol_; }
  std::size_t dim() const { return mat_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return mat_(i, j); }
  double logdet() const { return chol_logdet(chol_); }

 private:
  Matrix mat_;
  Matrix chol_;
};

SpdMatrix spd_inverse(const SpdMatrix& a);

}  // namespace bsmr
