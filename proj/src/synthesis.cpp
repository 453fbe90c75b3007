#include "bsmr/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bsmr/errors.hpp"
#include "bsmr/model.hpp"
#include "bsmr/special.hpp"

namespace bsmr {

SimulationScenario SimulationScenario::standard(int omega_id, int coeff_id) {
  SimulationScenario s;
  s.omega_id = omega_id;
  s.coeff_id = coeff_id;
  if (coeff_id <= 2) {
    s.l = s.m = s.k = 2;
    s.n_blocks = 3;
  } else {
    s.l = s.m = s.k = 5;
    s.n_blocks = 5;
  }
  return s;
}

void SimulationScenario::validate() const {
  if (omega_id < 1 || omega_id > 5) throw ConfigError("omega_id must be 1..5");
  if (coeff_id < 1 || coeff_id > 4) throw ConfigError("coeff_id must be 1..4");
  if (n == 0 || n_test == 0) throw ConfigError("sample sizes must be positive");
  if (q() == 0) throw ConfigError("scenario has no responses");
  if (omega_id == 5 && q() < 4)
    throw ConfigError("omega pattern 5 needs q >= 4");
  if (omega_id == 4 && (n_blocks == 0 || n_blocks > q()))
    throw ConfigError("omega pattern 4 needs 1 <= n_blocks <= q");
  if (!(sigma_x > 0.0)) throw ConfigError("sigma_x must be positive");
  if (!(coeff_low < coeff_high))
    throw ConfigError("coefficient bounds must satisfy low < high");
  if (!(count_cap > 0.0)) throw ConfigError("count_cap must be positive");
}

namespace {

Matrix banded_omega(std::size_t q) {
  Matrix o(q, q);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < q; ++j) {
      const std::size_t d = i > j ? i - j : j - i;
      o(i, j) = d == 0 ? 1.0 : d == 1 ? 0.5 : d == 2 ? 0.3 : d == 3 ? 0.1 : 0.0;
    }
  return o;
}

std::vector<std::size_t> random_permutation(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j =
        static_cast<std::size_t>(rng.next_double() * static_cast<double>(i));
    std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
  }
  return perm;
}

}  // namespace

SpdMatrix make_omega(int omega_id, std::size_t q, std::size_t n_blocks,
                     RngStream& rng) {
  Matrix o(q, q);
  switch (omega_id) {
    case 1:
      o = banded_omega(q);
      break;
    case 2: {
      const Matrix base = banded_omega(q);
      const std::vector<std::size_t> perm = random_permutation(q, rng);
      for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = 0; j < q; ++j) o(i, j) = base(perm[i], perm[j]);
      break;
    }
    case 3:
      for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = 0; j < q; ++j)
          o(i, j) = std::pow(0.5, std::fabs(static_cast<double>(i) -
                                            static_cast<double>(j)));
      break;
    case 4: {
      // random evenly sized index blocks; the first q mod M blocks take the
      // extra index
      const std::vector<std::size_t> perm = random_permutation(q, rng);
      std::vector<std::size_t> block_of(q);
      const std::size_t base = q / n_blocks;
      const std::size_t extra = q % n_blocks;
      std::size_t pos = 0;
      for (std::size_t b = 0; b < n_blocks; ++b) {
        const std::size_t len = base + (b < extra ? 1 : 0);
        for (std::size_t t = 0; t < len; ++t) block_of[perm[pos++]] = b;
      }
      for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = 0; j < q; ++j)
          o(i, j) = i == j ? 1.0 : block_of[i] == block_of[j] ? 0.4 : 0.0;
      break;
    }
    case 5:
      o = Matrix::identity(q);
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
          if (i != j) o(i, j) = 0.5;
      break;
    default:
      throw ConfigError("omega_id must be 1..5");
  }
  return SpdMatrix(std::move(o));  // surfaces the PD failure if any
}

CoefficientPattern make_coefficients(int coeff_id, std::size_t q, double low,
                                     double high, RngStream& rng) {
  CoefficientPattern out;
  std::vector<std::size_t> active;
  switch (coeff_id) {
    case 1:
      out.group_sizes = {5, 5, 5, 5};
      active = {0, 1, 4, 10, 11, 14};
      break;
    case 2:
      out.group_sizes = {5, 5, 5, 5};
      active = {5, 6, 9, 10, 11, 14};
      break;
    case 3:
      out.group_sizes = {10, 20, 10, 10, 20, 10};
      active = {5,  6,  7,  8,  9,  30, 31, 32,
                33, 34, 50, 51, 52, 53, 54};
      break;
    case 4:
      out.group_sizes = {20, 10, 10, 20, 10, 10};
      active = {25, 26, 27, 28, 29, 30, 31, 32,
                33, 34, 40, 41, 42, 43, 44};
      break;
    default:
      throw ConfigError("coeff_id must be 1..4");
  }
  const std::size_t p =
      std::accumulate(out.group_sizes.begin(), out.group_sizes.end(),
                      std::size_t{0});
  out.coeff.resize(p, q);
  out.support.resize(p, q);
  for (std::size_t r : active)
    for (std::size_t j = 0; j < q; ++j) {
      out.coeff(r, j) = rng.uniform(low, high);
      out.support(r, j) = 1.0;
    }
  return out;
}

namespace {

// Fills one design/latent/response block; returns false when a count
// exceeds the cap (caller redraws the replicate).
bool generate_block(std::size_t n, const SimulationScenario& sc,
                    const Matrix& coeff, const Matrix& sigma_chol,
                    RngStream& rng, Matrix& x, Matrix& xi, Matrix& u,
                    Matrix& z, Matrix& w) {
  const std::size_t p = coeff.rows();
  const std::size_t q = coeff.cols();
  x.resize(n, p);
  xi.resize(n, q);
  u.resize(n, sc.l);
  z.resize(n, sc.m);
  w.resize(n, sc.k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < p; ++r)
      x(i, r) = sc.sigma_x * draw_normal(rng);
  Vector noise(q), xrow(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < q; ++j) noise[j] = draw_normal(rng);
    for (std::size_t r = 0; r < p; ++r) xrow[r] = x(i, r);
    Vector mean = tmatvec(coeff, xrow);
    for (std::size_t j = 0; j < q; ++j) {
      double v = mean[j];
      for (std::size_t c = 0; c <= j; ++c) v += sigma_chol(j, c) * noise[c];
      xi(i, j) = v;
    }
  }
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < sc.l; ++j)
      u(i, j) = xi(i, j) + draw_normal(rng);
    for (std::size_t j = 0; j < sc.m; ++j) {
      const double lam = std::exp(xi(i, sc.l + j));
      if (!(lam <= 1e9)) {
        ok = false;
        z(i, j) = sc.count_cap + 1.0;
        continue;
      }
      const double count = static_cast<double>(draw_poisson(lam, rng));
      z(i, j) = count;
      if (count > sc.count_cap) ok = false;
    }
    for (std::size_t j = 0; j < sc.k; ++j)
      w(i, j) = draw_bernoulli(sigmoid(xi(i, sc.l + sc.m + j)), rng) ? 1.0 : 0.0;
  }
  return ok;
}

}  // namespace

SimulatedData generate_dataset(const SimulationScenario& scenario,
                               RngStream& rng) {
  scenario.validate();
  const std::size_t q = scenario.q();

  SpdMatrix omega = make_omega(scenario.omega_id, q, scenario.n_blocks, rng);
  CoefficientPattern pat = make_coefficients(
      scenario.coeff_id, q, scenario.coeff_low, scenario.coeff_high, rng);
  const GroupStructure groups(pat.group_sizes);
  if (groups.n_predictors() != scenario.p())
    throw ConfigError("coefficient pattern disagrees with scenario p");

  const SpdMatrix sigma = spd_inverse(omega);
  const Matrix& sigma_chol = sigma.chol();

  SimulatedData out;
  out.truth.coeff = pat.coeff;
  out.truth.omega = omega.mat();
  out.truth.support = pat.support;

  constexpr std::size_t kMaxAttempts = 100;
  for (std::size_t attempt = 0;; ++attempt) {
    if (attempt == kMaxAttempts)
      throw NumericError("count cap exceeded in every redraw attempt; "
                         "lower sigma_x or the coefficient bounds");
    Matrix xtr, xitr, utr, ztr, wtr;
    Matrix xte, xite, ute, zte, wte;
    const bool ok_train =
        generate_block(scenario.n, scenario, pat.coeff, sigma_chol, rng, xtr,
                       xitr, utr, ztr, wtr);
    const bool ok_test =
        generate_block(scenario.n_test, scenario, pat.coeff, sigma_chol, rng,
                       xte, xite, ute, zte, wte);
    if (!ok_train || !ok_test) continue;
    out.train = MixedResponseDataset{std::move(xtr), std::move(utr),
                                     std::move(ztr), std::move(wtr), groups};
    out.test = MixedResponseDataset{std::move(xte), std::move(ute),
                                    std::move(zte), std::move(wte), groups};
    out.truth.xi_train = std::move(xitr);
    out.truth.xi_test = std::move(xite);
    break;
  }
  out.train.validate();
  out.test.validate();
  return out;
}

}  // namespace bsmr
