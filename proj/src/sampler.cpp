#include "bsmr/sampler.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "bsmr/errors.hpp"
#include "bsmr/kernels.hpp"
#include "bsmr/linalg.hpp"
#include "bsmr/model.hpp"
#include "bsmr/special.hpp"

namespace bsmr {

namespace {
constexpr double kLog2 = 0.6931471805599453;
constexpr double kVarFloor = 1e-12;
}  // namespace

void RunOptions::validate() const {
  if (n_iter == 0) throw ConfigError("n_iter must be positive");
  if (n_burnin >= n_iter) throw ConfigError("n_burnin must be below n_iter");
  if (!(mh_step > 0.0)) throw ConfigError("mh_step must be positive");
  if (adapt_interval == 0) throw ConfigError("adapt_interval must be positive");
}

GibbsSampler::GibbsSampler(const MixedResponseDataset& data,
                           const Hyperparameters& hyper, const RunOptions& opts,
                           RngStream rng)
    : data_(data), hyper_(hyper), opts_(opts), rng_(rng) {
  data_.validate();
  hyper_.validate();
  opts_.validate();
  const std::size_t q = data_.q();
  a5_ = hyper_.resolved_a5(q);
  a6_ = hyper_.resolved_a6(q);
  lambda_ = hyper_.resolved_lambda(q);
  d_ = hyper_.d;
  state_ = initial_state(data_, hyper_);

  sxx_col_.resize(data_.p());
  for (std::size_t r = 0; r < data_.p(); ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < data_.n(); ++i) s += data_.x(i, r) * data_.x(i, r);
    sxx_col_[r] = s;
  }
  sxx_group_.resize(data_.groups.n_groups());
  for (std::size_t g = 0; g < data_.groups.n_groups(); ++g) {
    const std::size_t pg = data_.groups.size(g);
    const std::size_t off = data_.groups.offset(g);
    Matrix& sxx = sxx_group_[g];
    sxx.resize(pg, pg);
    for (std::size_t i = 0; i < data_.n(); ++i)
      for (std::size_t a = 0; a < pg; ++a)
        kernels::axpy(data_.x(i, off + a), data_.x.row(i) + off, sxx.row(a), pg);
  }

  mh_step_.assign(q, opts_.mh_step);
  mh_acc_.assign(q, 0);
  mh_prop_.assign(q, 0);
  refresh_caches();
}

void GibbsSampler::refresh_caches() {
  const Matrix coeff = effective_coefficients(state_.b_tilde, state_.tau,
                                              state_.group_included, data_.groups);
  fitted_ = linear_predictor(data_.x, coeff, state_.intercept);
  sigma_dirty_ = true;
}

void GibbsSampler::ensure_sigma() {
  if (!sigma_dirty_) return;
  try {
    sigma_ = spd_inverse_mat(state_.omega);
    sigma_chol_ = cholesky(sigma_);
  } catch (const CholeskyError& e) {
    throw NumericError(std::string("latent covariance not positive definite: ") +
                       e.what());
  }
  sigma_dirty_ = false;
}

double GibbsSampler::latent_log_target(double value, double cond_mean,
                                       double prec, std::size_t slot,
                                       double obs) const {
  const double dmean = value - cond_mean;
  double lt = -0.5 * prec * dmean * dmean;
  const std::size_t l = data_.l();
  if (slot < l + data_.m())
    lt += obs * value - std::exp(value);
  else
    lt += obs * value - log1pexp(value);
  return lt;
}

void GibbsSampler::sample_latent() {
  const std::size_t n = data_.n();
  const std::size_t q = data_.q();
  const std::size_t l = data_.l();
  const std::size_t m = data_.m();
  for (std::size_t i = 0; i < n; ++i) {
    double* xi = state_.xi.row(i);
    const double* mean = fitted_.row(i);
    for (std::size_t j = 0; j < q; ++j) {
      const double prec = state_.omega(j, j);
      double s = 0.0;
      for (std::size_t t = 0; t < q; ++t)
        if (t != j) s += state_.omega(j, t) * (xi[t] - mean[t]);
      const double cond_mean = mean[j] - s / prec;
      if (j < l) {
        // conjugate Gaussian slot
        const double obs_prec = 1.0 / state_.sigma2[j];
        const double post_prec = prec + obs_prec;
        const double post_mean =
            (prec * cond_mean + obs_prec * data_.u(i, j)) / post_prec;
        xi[j] = post_mean + draw_normal(rng_) / std::sqrt(post_prec);
        continue;
      }
      const double obs =
          j < l + m ? data_.z(i, j - l) : data_.w(i, j - l - m);
      const double cur = latent_log_target(xi[j], cond_mean, prec, j, obs);
      if (!std::isfinite(cur))
        throw NumericError("non-finite latent log-density at observation " +
                           std::to_string(i + 1) + ", component " +
                           std::to_string(j + 1));
      const double prop = xi[j] + mh_step_[j] * draw_normal(rng_);
      const double cand = latent_log_target(prop, cond_mean, prec, j, obs);
      ++mh_prop_[j];
      if (std::log(rng_.uniform_pos()) < cand - cur) {
        xi[j] = prop;
        ++mh_acc_[j];
      }
    }
  }
}

void GibbsSampler::sample_gaussian_variances() {
  if (hyper_.fix_sigma2) return;
  const std::size_t n = data_.n();
  for (std::size_t j = 0; j < data_.l(); ++j) {
    double shape, scale;
    if (hyper_.sigma_update == SigmaUpdate::conjugate) {
      double ssq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = data_.u(i, j) - state_.xi(i, j);
        ssq += r * r;
      }
      shape = 0.5 + 0.5 * static_cast<double>(n);
      scale = 0.5 + 0.5 * ssq;
    } else {
      double sr = 0.0;
      for (std::size_t i = 0; i < n; ++i) sr += data_.u(i, j) - state_.xi(i, j);
      shape = 0.5 + static_cast<double>(n);
      scale = std::max(0.5 + 0.5 * sr, kVarFloor);
    }
    state_.sigma2[j] = std::max(draw_invgamma(shape, scale, rng_), kVarFloor);
  }
}

void GibbsSampler::sample_intercept() {
  if (!hyper_.include_intercept) return;
  ensure_sigma();
  const std::size_t n = data_.n();
  const std::size_t q = data_.q();
  Vector mean(q, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < q; ++j)
      mean[j] += state_.xi(i, j) - fitted_(i, j);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < q; ++j)
    mean[j] = mean[j] * inv_n + state_.intercept[j];

  Vector z(q);
  for (std::size_t j = 0; j < q; ++j) z[j] = draw_normal(rng_);
  Vector next = mean;
  const double root_inv_n = std::sqrt(inv_n);
  for (std::size_t j = 0; j < q; ++j)
    for (std::size_t c = 0; c <= j; ++c)
      next[j] += root_inv_n * sigma_chol_(j, c) * z[c];

  for (std::size_t i = 0; i < n; ++i) {
    double* fi = fitted_.row(i);
    for (std::size_t j = 0; j < q; ++j)
      fi[j] += next[j] - state_.intercept[j];
  }
  state_.intercept = next;
}

Matrix GibbsSampler::residual_plus_group(std::size_t g) const {
  const std::size_t n = data_.n();
  const std::size_t q = data_.q();
  const std::size_t pg = data_.groups.size(g);
  const std::size_t off = data_.groups.offset(g);
  Matrix r(n, q);
  for (std::size_t i = 0; i < n; ++i) {
    double* ri = r.row(i);
    for (std::size_t j = 0; j < q; ++j) ri[j] = state_.xi(i, j) - fitted_(i, j);
    for (std::size_t a = 0; a < pg; ++a) {
      const double scale = data_.x(i, off + a) * state_.tau[off + a];
      if (scale != 0.0) kernels::axpy(scale, state_.b_tilde.row(off + a), ri, q);
    }
  }
  return r;
}

GroupUpdateWorkspace GibbsSampler::group_workspace(std::size_t g) const {
  const std::size_t q = data_.q();
  const std::size_t pg = data_.groups.size(g);
  const std::size_t off = data_.groups.offset(g);
  const Matrix rg = residual_plus_group(g);

  Matrix c(pg, q);
  for (std::size_t i = 0; i < data_.n(); ++i) {
    const double* ri = rg.row(i);
    for (std::size_t a = 0; a < pg; ++a)
      kernels::axpy(data_.x(i, off + a), ri, c.row(a), q);
  }
  for (std::size_t a = 0; a < pg; ++a)
    kernels::scale(state_.tau[off + a], c.row(a), q);

  Matrix prior_prec(pg, pg);
  const Matrix& sxx = sxx_group_[g];
  for (std::size_t a = 0; a < pg; ++a)
    for (std::size_t b = 0; b < pg; ++b)
      prior_prec(a, b) = (a == b ? 1.0 : 0.0) +
                         state_.tau[off + a] * state_.tau[off + b] * sxx(a, b);

  GroupUpdateWorkspace ws;
  Matrix chol_a;
  try {
    chol_a = cholesky(prior_prec);
  } catch (const CholeskyError& e) {
    throw NumericError("group update covariance failed for group " +
                       std::to_string(g + 1) + ": " + e.what());
  }
  ws.log_det_psi = -chol_logdet(chol_a);
  ws.psi = chol_solve(chol_a, Matrix::identity(pg));
  symmetrize(ws.psi);
  ws.cond_mean = matmul(ws.psi, c);

  double trace = 0.0;
  Vector wrow(q);
  for (std::size_t a = 0; a < pg; ++a) {
    const double* ma = ws.cond_mean.row(a);
    for (std::size_t r = 0; r < q; ++r)
      wrow[r] = kernels::dot(state_.omega.row(r), ma, q);
    trace += kernels::dot(wrow.data(), c.row(a), q);
  }
  ws.trace_term = trace;

  const double pi1 = state_.pi1;
  if (pi1 <= 0.0) {
    ws.prob_zero = 0.0;
  } else if (pi1 >= 1.0) {
    ws.prob_zero = 1.0;
  } else {
    const double log_spike = std::log(pi1);
    const double log_slab = std::log1p(-pi1) +
                            0.5 * static_cast<double>(q) * ws.log_det_psi +
                            0.5 * trace;
    ws.prob_zero = std::exp(log_spike - log_sum_exp(log_spike, log_slab));
  }
  if (!std::isfinite(ws.prob_zero))
    throw NumericError("group inclusion probability diverged for group " +
                       std::to_string(g + 1));
  return ws;
}

void GibbsSampler::sample_coefficient_group(std::size_t g) {
  const std::size_t q = data_.q();
  const std::size_t pg = data_.groups.size(g);
  const std::size_t off = data_.groups.offset(g);
  const GroupUpdateWorkspace ws = group_workspace(g);

  Matrix delta(pg, q);
  for (std::size_t a = 0; a < pg; ++a)
    kernels::axpy(-state_.tau[off + a], state_.b_tilde.row(off + a),
                  delta.row(a), q);

  const bool exclude = rng_.next_double() < ws.prob_zero;
  if (exclude) {
    for (std::size_t a = 0; a < pg; ++a)
      std::fill(state_.b_tilde.row(off + a), state_.b_tilde.row(off + a) + q, 0.0);
    state_.group_included[g] = 0;
  } else {
    ensure_sigma();
    Matrix noise(pg, q);
    for (std::size_t a = 0; a < pg; ++a)
      for (std::size_t j = 0; j < q; ++j) noise(a, j) = draw_normal(rng_);
    // column factor: rows of noise mapped through chol(Sigma)^T
    Matrix t1(pg, q);
    for (std::size_t a = 0; a < pg; ++a)
      for (std::size_t j = 0; j < q; ++j)
        t1(a, j) = kernels::dot(noise.row(a), sigma_chol_.row(j), j + 1);
    // row factor: chol(Psi)
    Matrix chol_psi = cholesky(ws.psi);
    for (std::size_t a = 0; a < pg; ++a) {
      double* row = state_.b_tilde.row(off + a);
      for (std::size_t j = 0; j < q; ++j) row[j] = ws.cond_mean(a, j);
      for (std::size_t b = 0; b <= a; ++b)
        kernels::axpy(chol_psi(a, b), t1.row(b), row, q);
    }
    state_.group_included[g] = 1;
  }

  for (std::size_t a = 0; a < pg; ++a)
    kernels::axpy(state_.tau[off + a], state_.b_tilde.row(off + a),
                  delta.row(a), q);
  for (std::size_t i = 0; i < data_.n(); ++i) {
    double* fi = fitted_.row(i);
    for (std::size_t a = 0; a < pg; ++a) {
      const double xv = data_.x(i, off + a);
      if (xv != 0.0) kernels::axpy(xv, delta.row(a), fi, q);
    }
  }
}

double GibbsSampler::tau_prob_zero(std::size_t g, std::size_t j, double* mu_out,
                                   double* var_out) const {
  const std::size_t q = data_.q();
  const std::size_t r = data_.groups.offset(g) + j;
  const double* brow = state_.b_tilde.row(r);

  Vector w(q);
  for (std::size_t t = 0; t < q; ++t)
    w[t] = kernels::dot(state_.omega.row(t), brow, q);
  const double quad = kernels::dot(brow, w.data(), q);
  const double var = 1.0 / (sxx_col_[r] * quad + 1.0 / state_.sigma_tau2);

  Vector v(q, 0.0);
  for (std::size_t i = 0; i < data_.n(); ++i) {
    const double xv = data_.x(i, r);
    if (xv == 0.0) continue;
    for (std::size_t t = 0; t < q; ++t)
      v[t] += xv * (state_.xi(i, t) - fitted_(i, t));
  }
  kernels::axpy(state_.tau[r] * sxx_col_[r], brow, v.data(), q);
  const double mu = var * kernels::dot(v.data(), w.data(), q);
  if (mu_out) *mu_out = mu;
  if (var_out) *var_out = var;

  const double pi2 = state_.pi2;
  double prob;
  if (pi2 <= 0.0) {
    prob = 0.0;
  } else if (pi2 >= 1.0) {
    prob = 1.0;
  } else {
    const double sd = std::sqrt(var);
    const double log_spike = std::log(pi2);
    const double log_slab = kLog2 + std::log1p(-pi2) -
                            0.5 * std::log(state_.sigma_tau2) +
                            0.5 * std::log(var) + 0.5 * mu * mu / var +
                            log_norm_cdf(mu / sd);
    prob = std::exp(log_spike - log_sum_exp(log_spike, log_slab));
  }
  if (!std::isfinite(prob))
    throw NumericError("row-scale spike probability diverged at predictor " +
                       std::to_string(r + 1));
  return prob;
}

void GibbsSampler::sample_tau(std::size_t g, std::size_t j) {
  if (hyper_.fix_tau) return;
  if (!state_.group_included[g]) return;  // retain the current value
  const std::size_t q = data_.q();
  const std::size_t r = data_.groups.offset(g) + j;

  double mu = 0.0, var = 0.0;
  const double prob_zero = tau_prob_zero(g, j, &mu, &var);
  const double u = rng_.next_double();
  const double next = u < prob_zero ? 0.0 : draw_truncnorm_pos(mu, var, rng_);
  const double delta = next - state_.tau[r];
  if (delta != 0.0) {
    const double* brow = state_.b_tilde.row(r);
    for (std::size_t i = 0; i < data_.n(); ++i) {
      const double xv = data_.x(i, r);
      if (xv != 0.0) kernels::axpy(delta * xv, brow, fitted_.row(i), q);
    }
    state_.tau[r] = next;
  }
}

void GibbsSampler::sample_sparsity_weights() {
  const std::size_t n_groups = data_.groups.n_groups();
  std::size_t zero_groups = 0;
  for (std::size_t g = 0; g < n_groups; ++g)
    if (!state_.group_included[g]) ++zero_groups;
  if (hyper_.pin_pi1)
    state_.pi1 = *hyper_.pin_pi1;
  else
    state_.pi1 = draw_beta(hyper_.a1 + static_cast<double>(zero_groups),
                           hyper_.a2 + static_cast<double>(n_groups - zero_groups),
                           rng_);

  std::size_t zero_tau = 0;
  for (double t : state_.tau)
    if (t == 0.0) ++zero_tau;
  if (hyper_.pin_pi2)
    state_.pi2 = *hyper_.pin_pi2;
  else
    state_.pi2 = draw_beta(hyper_.a3 + static_cast<double>(zero_tau),
                           hyper_.a4 + static_cast<double>(data_.p() - zero_tau),
                           rng_);

  std::size_t on_edges = 0;
  for (std::uint8_t e : state_.edge_ind) on_edges += e;
  if (hyper_.pin_pi3)
    state_.pi3 = *hyper_.pin_pi3;
  else
    state_.pi3 = draw_beta(
        a5_ + static_cast<double>(on_edges),
        a6_ + static_cast<double>(state_.edge_ind.size() - on_edges), rng_);
}

void GibbsSampler::sample_sigma_tau2() {
  if (hyper_.fix_tau) return;
  std::size_t nz = 0;
  double ssq = 0.0;
  for (double t : state_.tau)
    if (t != 0.0) {
      ++nz;
      ssq += t * t;
    }
  state_.sigma_tau2 =
      std::max(draw_invgamma(1.0 + 0.5 * static_cast<double>(nz),
                             d_ + 0.5 * ssq, rng_),
               kVarFloor);
  if (hyper_.em_update_d && sweep_ <= opts_.n_burnin) {
    em_segment_.push_back(1.0 / state_.sigma_tau2);
    if (em_segment_.size() >= hyper_.em_interval) {
      const double mean_inv =
          kernels::sum(em_segment_.data(), em_segment_.size()) /
          static_cast<double>(em_segment_.size());
      d_ = 1.0 / mean_inv;
      em_segment_.clear();
    }
  }
}

OmegaColumnWorkspace GibbsSampler::omega_workspace(std::size_t col) const {
  const std::size_t q = data_.q();
  OmegaColumnWorkspace ws;

  Matrix resid(data_.n(), q);
  for (std::size_t i = 0; i < data_.n(); ++i)
    for (std::size_t j = 0; j < q; ++j)
      resid(i, j) = state_.xi(i, j) - fitted_(i, j);
  ws.theta = crossprod(resid);
  ws.theta += crossprod(state_.b_tilde);

  double alpha = static_cast<double>(data_.n()) + hyper_.omega_alpha0;
  for (std::size_t g = 0; g < data_.groups.n_groups(); ++g)
    if (state_.group_included[g])
      alpha += static_cast<double>(data_.groups.size(g));
  ws.alpha = alpha;

  std::vector<std::size_t> idx;
  idx.reserve(q - 1);
  for (std::size_t t = 0; t < q; ++t)
    if (t != col) idx.push_back(t);

  Matrix omega11(q - 1, q - 1);
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b)
      omega11(a, b) = state_.omega(idx[a], idx[b]);
  Matrix inv11;
  try {
    inv11 = spd_inverse_mat(omega11);
  } catch (const CholeskyError& e) {
    throw NumericError("precision principal minor not positive definite at column " +
                       std::to_string(col + 1) + ": " + e.what());
  }

  const double c = ws.theta(col, col) + lambda_;
  Matrix prec = inv11;
  prec *= c;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    const std::size_t i = std::min(idx[a], col);
    const std::size_t j = std::max(idx[a], col);
    const double h = state_.edge_ind[ModelState::edge_index(i, j, q)]
                         ? hyper_.sigma1 * hyper_.sigma1
                         : hyper_.sigma0 * hyper_.sigma0;
    prec(a, a) += 1.0 / h;
  }
  ws.sigma_eta = spd_inverse_mat(prec);

  Vector theta12(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) theta12[a] = ws.theta(idx[a], col);
  ws.eta_mean = matvec(ws.sigma_eta, theta12);
  for (double& v : ws.eta_mean) v = -v;

  ws.zeta_shape = 0.5 * alpha + 1.0;
  ws.zeta_rate = 0.5 * c;
  return ws;
}

void GibbsSampler::sample_precision() {
  if (hyper_.fix_omega) return;
  const std::size_t q = data_.q();
  const std::size_t n = data_.n();

  Matrix resid(n, q);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < q; ++j)
      resid(i, j) = state_.xi(i, j) - fitted_(i, j);
  Matrix theta = crossprod(resid);
  theta += crossprod(state_.b_tilde);

  double alpha = static_cast<double>(n) + hyper_.omega_alpha0;
  for (std::size_t g = 0; g < data_.groups.n_groups(); ++g)
    if (state_.group_included[g])
      alpha += static_cast<double>(data_.groups.size(g));

  const double s0sq = hyper_.sigma0 * hyper_.sigma0;
  const double s1sq = hyper_.sigma1 * hyper_.sigma1;

  std::vector<std::size_t> idx(q > 0 ? q - 1 : 0);
  Matrix omega11(q - 1, q - 1), inv11;
  for (std::size_t col = 0; col < q; ++col) {
    std::size_t pos = 0;
    for (std::size_t t = 0; t < q; ++t)
      if (t != col) idx[pos++] = t;

    for (std::size_t a = 0; a + 1 < q; ++a)
      for (std::size_t b = 0; b + 1 < q; ++b)
        omega11(a, b) = state_.omega(idx[a], idx[b]);
    try {
      inv11 = spd_inverse_mat(omega11);
    } catch (const CholeskyError& e) {
      throw NumericError(
          "precision principal minor not positive definite at column " +
          std::to_string(col + 1) + ": " + e.what());
    }

    const double c = theta(col, col) + lambda_;
    Matrix prec = inv11;
    prec *= c;
    for (std::size_t a = 0; a + 1 < q; ++a) {
      const std::size_t i = std::min(idx[a], col);
      const std::size_t j = std::max(idx[a], col);
      prec(a, a) +=
          1.0 / (state_.edge_ind[ModelState::edge_index(i, j, q)] ? s1sq : s0sq);
    }
    Matrix sigma_eta = spd_inverse_mat(prec);

    Vector mean(q > 0 ? q - 1 : 0);
    for (std::size_t a = 0; a + 1 < q; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b + 1 < q; ++b)
        s += sigma_eta(a, b) * theta(idx[b], col);
      mean[a] = -s;
    }

    Matrix chol_eta = cholesky(sigma_eta);
    Vector eta = mean;
    if (q > 1) {
      Vector z(q - 1);
      for (std::size_t a = 0; a + 1 < q; ++a) z[a] = draw_normal(rng_);
      for (std::size_t a = 0; a + 1 < q; ++a)
        for (std::size_t b = 0; b <= a; ++b) eta[a] += chol_eta(a, b) * z[b];
    }
    const double zeta = draw_gamma(0.5 * alpha + 1.0, 0.5 * c, rng_);

    Vector iv(q > 0 ? q - 1 : 0);
    for (std::size_t a = 0; a + 1 < q; ++a)
      iv[a] = kernels::dot(inv11.row(a), eta.data(), q - 1);
    const double quad = q > 1 ? kernels::dot(iv.data(), eta.data(), q - 1) : 0.0;

    for (std::size_t a = 0; a + 1 < q; ++a) {
      state_.omega(idx[a], col) = eta[a];
      state_.omega(col, idx[a]) = eta[a];
    }
    state_.omega(col, col) = zeta + quad;
  }
  sigma_dirty_ = true;

  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = i + 1; j < q; ++j) {
      const double w = state_.omega(i, j);
      const double log_on = std::log(state_.pi3) + normal_log_pdf(w, 0.0, s1sq);
      const double log_off =
          std::log1p(-state_.pi3) + normal_log_pdf(w, 0.0, s0sq);
      const double p_on = sigmoid(log_on - log_off);
      state_.edge_ind[ModelState::edge_index(i, j, q)] =
          draw_bernoulli(p_on, rng_) ? 1 : 0;
    }
}

void GibbsSampler::adapt_mh_steps() {
  for (std::size_t j = data_.l(); j < data_.q(); ++j) {
    if (mh_prop_[j] == 0) continue;
    const double rate = static_cast<double>(mh_acc_[j]) /
                        static_cast<double>(mh_prop_[j]);
    if (rate < 0.30)
      mh_step_[j] *= 0.8;
    else if (rate > 0.45)
      mh_step_[j] *= 1.25;
    mh_step_[j] = std::clamp(mh_step_[j], 1e-3, 20.0);
    mh_acc_[j] = 0;
    mh_prop_[j] = 0;
  }
}

void GibbsSampler::check_invariants() const {
  validate_state(state_, data_, hyper_.include_intercept);
  try {
    cholesky(state_.omega);
  } catch (const CholeskyError& e) {
    throw NumericError(std::string("precision matrix lost positive definiteness: ") +
                       e.what());
  }
}

void GibbsSampler::sweep() {
  ++sweep_;
  step_name_ = "latent";
  sample_latent();
  step_name_ = "gaussian_variance";
  sample_gaussian_variances();
  step_name_ = "coefficient_groups";
  sample_intercept();
  for (std::size_t g = 0; g < data_.groups.n_groups(); ++g)
    sample_coefficient_group(g);
  step_name_ = "row_scales";
  for (std::size_t g = 0; g < data_.groups.n_groups(); ++g)
    for (std::size_t j = 0; j < data_.groups.size(g); ++j) sample_tau(g, j);
  step_name_ = "sparsity_weights";
  sample_sparsity_weights();
  step_name_ = "sigma_tau2";
  sample_sigma_tau2();
  step_name_ = "precision";
  sample_precision();
  step_name_ = "invariants";
  if (sweep_ <= opts_.n_burnin && sweep_ % opts_.adapt_interval == 0)
    adapt_mh_steps();
  if (opts_.check_interval > 0 && sweep_ % opts_.check_interval == 0)
    check_invariants();
}

void GibbsSampler::record_draw(PosteriorChain& chain) const {
  ChainDraw d;
  const std::size_t q = data_.q();
  const std::size_t off = hyper_.include_intercept ? 1 : 0;
  d.coef.resize(data_.p() + off, q);
  if (off)
    for (std::size_t j = 0; j < q; ++j) d.coef(0, j) = state_.intercept[j];
  for (std::size_t g = 0; g < data_.groups.n_groups(); ++g) {
    if (!state_.group_included[g]) continue;
    for (std::size_t a = 0; a < data_.groups.size(g); ++a) {
      const std::size_t r = data_.groups.offset(g) + a;
      kernels::axpy(state_.tau[r], state_.b_tilde.row(r), d.coef.row(r + off), q);
    }
  }
  d.omega = state_.omega;
  d.edge = state_.edge_ind;
  d.included = state_.group_included;
  d.pi1 = state_.pi1;
  d.pi2 = state_.pi2;
  d.pi3 = state_.pi3;
  d.sigma_tau2 = state_.sigma_tau2;
  d.sigma2 = state_.sigma2;
  chain.draws.push_back(std::move(d));
}

PosteriorChain GibbsSampler::run() {
  PosteriorChain chain;
  chain.p = data_.p();
  chain.q = data_.q();
  chain.l = data_.l();
  chain.m = data_.m();
  chain.k = data_.k();
  chain.has_intercept = hyper_.include_intercept;
  chain.group_sizes = data_.groups.sizes();
  chain.n_iter = opts_.n_iter;
  chain.n_burnin = opts_.n_burnin;
  chain.seed = rng_.seed();
  chain.stream = rng_.stream_id();
  chain.draws.reserve(opts_.n_iter - opts_.n_burnin);

  for (std::size_t it = sweep_; it < opts_.n_iter; ++it) {
    try {
      sweep();
    } catch (const std::exception& e) {
      chain.truncated = true;
      chain.truncated_at = sweep_;
      if (opts_.persist_fn) opts_.persist_fn(chain);
      throw ChainError(sweep_, step_name_, e.what());
    }
    if (sweep_ > opts_.n_burnin) record_draw(chain);
  }
  check_invariants();
  return chain;
}

PosteriorChain run_chain(const MixedResponseDataset& data,
                         const Hyperparameters& hyper, const RunOptions& opts,
                         std::uint64_t seed, std::uint64_t stream) {
  GibbsSampler sampler(data, hyper, opts, RngStream(seed, stream));
  return sampler.run();
}

namespace {

double median_of(Vector& scratch) {
  return chain_percentile(scratch, 0.5);
}

}  // namespace

double chain_percentile(Vector values, double prob) {
  assert(!values.empty());
  assert(prob >= 0.0 && prob <= 1.0);
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

Matrix PosteriorChain::median_coef() const {
  const std::size_t off = intercept_offset();
  Matrix med(p, q);
  Vector scratch(draws.size());
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t j = 0; j < q; ++j) {
      for (std::size_t s = 0; s < draws.size(); ++s)
        scratch[s] = draws[s].coef(r + off, j);
      med(r, j) = median_of(scratch);
    }
  return med;
}

Vector PosteriorChain::median_intercept() const {
  if (!has_intercept) return {};
  Vector med(q);
  Vector scratch(draws.size());
  for (std::size_t j = 0; j < q; ++j) {
    for (std::size_t s = 0; s < draws.size(); ++s)
      scratch[s] = draws[s].coef(0, j);
    med[j] = median_of(scratch);
  }
  return med;
}

Matrix PosteriorChain::median_omega() const {
  Matrix med(q, q);
  Vector scratch(draws.size());
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < q; ++j) {
      for (std::size_t s = 0; s < draws.size(); ++s)
        scratch[s] = draws[s].omega(i, j);
      med(i, j) = median_of(scratch);
    }
  return med;
}

Matrix PosteriorChain::support_coef() const {
  const std::size_t off = intercept_offset();
  Matrix sup(p, q);
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t j = 0; j < q; ++j) {
      std::size_t nz = 0;
      for (const ChainDraw& d : draws) nz += d.coef(r + off, j) != 0.0;
      sup(r, j) = 2 * nz > draws.size() ? 1.0 : 0.0;
    }
  return sup;
}

std::vector<std::uint8_t> PosteriorChain::support_edges() const {
  std::vector<std::uint8_t> sup(q * (q - 1) / 2, 0);
  for (std::size_t e = 0; e < sup.size(); ++e) {
    std::size_t on = 0;
    for (const ChainDraw& d : draws) on += d.edge[e];
    sup[e] = 2 * on > draws.size() ? 1 : 0;
  }
  return sup;
}

PredictionSummary posterior_predict(const PosteriorChain& chain,
                                    const Vector& x_new, PredictMode mode,
                                    RngStream* rng) {
  Matrix one(1, x_new.size());
  for (std::size_t j = 0; j < x_new.size(); ++j) one(0, j) = x_new[j];
  return posterior_predict_batch(chain, one, mode, rng).front();
}

std::vector<PredictionSummary> posterior_predict_batch(
    const PosteriorChain& chain, const Matrix& x_new, PredictMode mode,
    RngStream* rng) {
  if (chain.draws.empty()) throw ConfigError("chain holds no retained draws");
  if (x_new.cols() != chain.p)
    throw DataError("prediction input has " + std::to_string(x_new.cols()) +
                    " columns, model expects " + std::to_string(chain.p));
  if (mode == PredictMode::predictive && rng == nullptr)
    throw ConfigError("predictive mode needs an rng");

  const std::size_t q = chain.q, n_draws = chain.draws.size();
  const std::size_t off = chain.intercept_offset();

  // Noise factors per draw: xi* = coef' x + L z with L L' = Omega^{-1}.
  std::vector<Matrix> noise_chol;
  if (mode == PredictMode::predictive) {
    noise_chol.reserve(n_draws);
    for (const ChainDraw& d : chain.draws)
      noise_chol.push_back(spd_inverse(SpdMatrix(d.omega)).chol());
  }

  std::vector<PredictionSummary> out(x_new.rows());
  Vector xt(off + chain.p), xi(q), z(q);
  std::vector<Vector> vals(q, Vector(n_draws));
  for (std::size_t i = 0; i < x_new.rows(); ++i) {
    if (off) xt[0] = 1.0;
    for (std::size_t r = 0; r < chain.p; ++r) xt[off + r] = x_new(i, r);
    for (std::size_t s = 0; s < n_draws; ++s) {
      const ChainDraw& d = chain.draws[s];
      for (std::size_t j = 0; j < q; ++j) {
        double acc = 0.0;
        for (std::size_t r = 0; r < xt.size(); ++r) acc += d.coef(r, j) * xt[r];
        xi[j] = acc;
      }
      if (mode == PredictMode::predictive) {
        for (std::size_t j = 0; j < q; ++j) z[j] = draw_normal(*rng);
        const Matrix& lf = noise_chol[s];
        for (std::size_t j = 0; j < q; ++j) {
          double acc = 0.0;
          for (std::size_t t = 0; t <= j; ++t) acc += lf(j, t) * z[t];
          xi[j] += acc;
        }
      }
      Vector gamma = response_links(xi, chain.l, chain.m, chain.k);
      for (std::size_t j = 0; j < q; ++j) vals[j][s] = gamma[j];
    }
    PredictionSummary& sm = out[i];
    sm.responses.resize(q);
    for (std::size_t j = 0; j < q; ++j) {
      sm.responses[j].lo = chain_percentile(vals[j], 0.025);
      sm.responses[j].median = chain_percentile(vals[j], 0.5);
      sm.responses[j].hi = chain_percentile(vals[j], 0.975);
    }
    sm.binary_class.resize(chain.k);
    for (std::size_t j = 0; j < chain.k; ++j)
      sm.binary_class[j] =
          sm.responses[chain.l + chain.m + j].median > 0.5 ? 1 : 0;
  }
  return out;
}

}  // namespace bsmr
