#include "bsmr/model.hpp"

#include <cmath>

#include "bsmr/errors.hpp"
#include "bsmr/kernels.hpp"
#include "bsmr/linalg.hpp"
#include "bsmr/special.hpp"

namespace bsmr {

Matrix effective_coefficients(const Matrix& b_tilde, const Vector& tau,
                              const std::vector<std::uint8_t>& group_included,
                              const GroupStructure& groups) {
  const std::size_t p = b_tilde.rows();
  const std::size_t q = b_tilde.cols();
  Matrix b(p, q);
  for (std::size_t g = 0; g < groups.n_groups(); ++g) {
    if (!group_included[g]) continue;
    for (std::size_t a = 0; a < groups.size(g); ++a) {
      const std::size_t r = groups.offset(g) + a;
      kernels::axpy(tau[r], b_tilde.row(r), b.row(r), q);
    }
  }
  return b;
}

Matrix linear_predictor(const Matrix& x, const Matrix& coeff,
                        const Vector& intercept) {
  const std::size_t n = x.rows();
  const std::size_t q = coeff.cols();
  Matrix mean(n, q);
  for (std::size_t i = 0; i < n; ++i) {
    double* mi = mean.row(i);
    if (!intercept.empty())
      for (std::size_t j = 0; j < q; ++j) mi[j] = intercept[j];
    const double* xi = x.row(i);
    for (std::size_t r = 0; r < x.cols(); ++r)
      kernels::axpy(xi[r], coeff.row(r), mi, q);
  }
  return mean;
}

Vector linear_predictor(const Matrix& coeff, const Vector& x) {
  Vector out(coeff.cols(), 0.0);
  for (std::size_t r = 0; r < coeff.rows(); ++r)
    kernels::axpy(x[r], coeff.row(r), out.data(), out.size());
  return out;
}

Vector response_links(const Vector& xi_row, std::size_t l, std::size_t m,
                      std::size_t k) {
  Vector out(l + m + k);
  for (std::size_t j = 0; j < l; ++j) out[j] = xi_row[j];
  for (std::size_t j = 0; j < m; ++j) {
    const double v = xi_row[l + j];
    if (v > 700.0)
      throw NumericError("count mean overflows at latent value " +
                         std::to_string(v));
    out[l + j] = std::exp(v);
  }
  for (std::size_t j = 0; j < k; ++j) out[l + m + j] = sigmoid(xi_row[l + m + j]);
  return out;
}

Matrix initial_latent(const MixedResponseDataset& data) {
  const std::size_t n = data.n();
  Matrix xi(n, data.q());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < data.l(); ++j) xi(i, j) = data.u(i, j);
    for (std::size_t j = 0; j < data.m(); ++j)
      xi(i, data.l() + j) = std::log(data.z(i, j) + 0.5);
    for (std::size_t j = 0; j < data.k(); ++j)
      xi(i, data.l() + data.m() + j) = data.w(i, j) > 0.5 ? 1.0 : -1.0;
  }
  return xi;
}

ModelState initial_state(const MixedResponseDataset& data,
                         const Hyperparameters& hyper) {
  const std::size_t p = data.p();
  const std::size_t q = data.q();
  ModelState s;
  s.b_tilde.resize(p, q);
  s.tau.assign(p, 1.0);
  s.group_included.assign(data.groups.n_groups(), 1);
  if (hyper.include_intercept) s.intercept.assign(q, 0.0);
  s.omega = hyper.omega_init ? *hyper.omega_init : Matrix::identity(q);
  if (s.omega.rows() != q || !is_symmetric(s.omega))
    throw ConfigError("initial Omega must be symmetric q x q");
  s.edge_ind.assign(q * (q - 1) / 2, 1);
  s.pi1 = hyper.pin_pi1 ? *hyper.pin_pi1 : hyper.a1 / (hyper.a1 + hyper.a2);
  s.pi2 = hyper.pin_pi2 ? *hyper.pin_pi2 : hyper.a3 / (hyper.a3 + hyper.a4);
  s.pi3 = hyper.pin_pi3
              ? *hyper.pin_pi3
              : hyper.resolved_a5(q) /
                    (hyper.resolved_a5(q) + hyper.resolved_a6(q));
  s.sigma_tau2 = 1.0;
  if (hyper.sigma2_init) {
    if (hyper.sigma2_init->size() != data.l())
      throw ConfigError("sigma2_init must have one entry per continuous response");
    s.sigma2 = *hyper.sigma2_init;
  } else {
    s.sigma2.assign(data.l(), 1.0);
  }
  s.xi = initial_latent(data);
  return s;
}

void validate_state(const ModelState& s, const MixedResponseDataset& data,
                    bool has_intercept) {
  const std::size_t p = data.p();
  const std::size_t q = data.q();
  if (s.b_tilde.rows() != p || s.b_tilde.cols() != q)
    throw DataError("state: b_tilde dimensions disagree with the dataset");
  if (s.tau.size() != p) throw DataError("state: tau length disagrees");
  if (s.group_included.size() != data.groups.n_groups())
    throw DataError("state: group flag count disagrees");
  if (has_intercept != !s.intercept.empty() ||
      (has_intercept && s.intercept.size() != q))
    throw DataError("state: intercept length disagrees");
  if (s.omega.rows() != q || s.omega.cols() != q || !is_symmetric(s.omega))
    throw DataError("state: Omega is not symmetric q x q");
  if (s.edge_ind.size() != q * (q - 1) / 2)
    throw DataError("state: edge indicator length disagrees");
  for (double pi : {s.pi1, s.pi2, s.pi3})
    if (!(pi >= 0.0 && pi <= 1.0))
      throw DataError("state: probability outside [0,1]");
  if (!(s.sigma_tau2 > 0.0)) throw DataError("state: sigma_tau2 not positive");
  if (s.sigma2.size() != data.l())
    throw DataError("state: sigma2 length disagrees");
  for (double v : s.sigma2)
    if (!(v > 0.0)) throw DataError("state: sigma2 entry not positive");
  for (double t : s.tau)
    if (!(t >= 0.0)) throw DataError("state: tau entry negative");
  if (s.xi.rows() != data.n() || s.xi.cols() != q)
    throw DataError("state: latent matrix dimensions disagree");
  for (std::size_t g = 0; g < data.groups.n_groups(); ++g) {
    if (s.group_included[g]) continue;
    for (std::size_t a = 0; a < data.groups.size(g); ++a) {
      const double* row = s.b_tilde.row(data.groups.offset(g) + a);
      for (std::size_t j = 0; j < q; ++j)
        if (row[j] != 0.0)
          throw DataError("state: excluded group " + std::to_string(g + 1) +
                          " has a non-zero coefficient row");
    }
  }
}

}  // namespace bsmr
