#include "bsmr/rng.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "bsmr/special.hpp"

namespace bsmr {

namespace {

constexpr unsigned __int128 kPcgMult =
    (static_cast<unsigned __int128>(0x2360ed051fc65da4ULL) << 64) |
    0x4385df649fccf645ULL;

inline std::uint64_t rotr64(std::uint64_t v, unsigned rot) {
  return (v >> rot) | (v << ((-rot) & 63));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  inc_ = (static_cast<unsigned __int128>(stream_id) << 1) | 1;
  state_ = 0;
  next_u64();
  state_ += seed;
  next_u64();
}

std::uint64_t RngStream::next_u64() {
  state_ = state_ * kPcgMult + inc_;
  const std::uint64_t xored =
      static_cast<std::uint64_t>(state_ >> 64) ^ static_cast<std::uint64_t>(state_);
  const unsigned rot = static_cast<unsigned>(state_ >> 122);
  return rotr64(xored, rot);
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_pos() {
  double u;
  do {
    u = next_double();
  } while (u <= 0.0);
  return u;
}

double RngStream::uniform(double a, double b) {
  return a + (b - a) * next_double();
}

double draw_normal(RngStream& rng) { return norm_quantile(rng.uniform_pos()); }

double draw_normal(double mu, double sigma2, RngStream& rng) {
  return mu + std::sqrt(sigma2) * draw_normal(rng);
}

double draw_gamma(double shape, double rate, RngStream& rng) {
  assert(shape > 0.0 && rate > 0.0);
  if (shape < 1.0) {
    const double g = draw_gamma(shape + 1.0, 1.0, rng);
    const double u = rng.uniform_pos();
    return g * std::pow(u, 1.0 / shape) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = draw_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_pos();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double draw_beta(double a, double b, RngStream& rng) {
  const double x = draw_gamma(a, 1.0, rng);
  const double y = draw_gamma(b, 1.0, rng);
  return x / (x + y);
}

double draw_invgamma(double shape, double scale, RngStream& rng) {
  return scale / draw_gamma(shape, 1.0, rng);
}

double draw_truncnorm_pos(double mu, double sigma2, RngStream& rng) {
  assert(sigma2 > 0.0);
  const double sigma = std::sqrt(sigma2);
  const double alpha = -mu / sigma;
  if (alpha <= 5.0) {
    const double lo = norm_cdf(alpha);
    double p = lo + rng.uniform_pos() * (1.0 - lo);
    if (p >= 1.0) p = std::nextafter(1.0, 0.0);
    return mu + sigma * norm_quantile(p);
  }
  // Robert (1995) shifted-exponential rejection for the far tail.
  const double lam = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
  for (;;) {
    const double z = alpha - std::log(rng.uniform_pos()) / lam;
    const double d = z - lam;
    if (std::log(rng.uniform_pos()) <= -0.5 * d * d) return mu + sigma * z;
  }
}

namespace {

long poisson_small(double mean, RngStream& rng) {
  // Sequential search from the mode of the CDF product form.
  const double limit = std::exp(-mean);
  double prod = rng.next_double();
  long k = 0;
  while (prod > limit) {
    prod *= rng.next_double();
    ++k;
  }
  return k;
}

// Hormann (1993) PTRS transformed rejection, valid for mean >= 10.
long poisson_ptrs(double mean, RngStream& rng) {
  const double log_mean = std::log(mean);
  const double b = 0.931 + 2.53 * std::sqrt(mean);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.next_double() - 0.5;
    const double v = rng.next_double();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        kf * log_mean - mean - std::lgamma(kf + 1.0))
      return static_cast<long>(kf);
  }
}

}  // namespace

long draw_poisson(double mean, RngStream& rng) {
  assert(mean >= 0.0);
  if (mean <= 0.0) return 0;
  if (mean < 10.0) return poisson_small(mean, rng);
  return poisson_ptrs(mean, rng);
}

bool draw_bernoulli(double p, RngStream& rng) { return rng.next_double() < p; }

Vector draw_mvn(const Vector& mean, const SpdMatrix& cov, RngStream& rng) {
  assert(mean.size() == cov.dim());
  const std::size_t d = cov.dim();
  Vector z(d);
  for (std::size_t i = 0; i < d; ++i) z[i] = draw_normal(rng);
  Vector x = mean;
  const Matrix& l = cov.chol();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k <= i; ++k) x[i] += l(i, k) * z[k];
  return x;
}

}  // namespace bsmr
