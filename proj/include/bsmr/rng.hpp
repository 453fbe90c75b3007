#pragma once

#include <cstdint>

#include "bsmr/linalg.hpp"
#include "bsmr/matrix.hpp"

namespace bsmr {

// PCG64 (XSL-RR 128/64).  A (seed, stream_id) pair selects one of 2^63
// independent sequences; every consumer derives its stream id from the root
// seed so that reruns are bit-reproducible and parallel chains never share
// a stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();
  // 53-bit uniform in [0, 1)
  double next_double();
  // uniform in (0, 1), safe under log()
  double uniform_pos();
  double uniform(double a, double b);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  unsigned __int128 state_;
  unsigned __int128 inc_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
};

// Standard normal via the inverse-CDF map of one uniform.
double draw_normal(RngStream& rng);
double draw_normal(double mu, double sigma2, RngStream& rng);
// Gamma(shape, rate), Marsaglia-Tsang squeeze with the shape<1 boost.
double draw_gamma(double shape, double rate, RngStream& rng);
double draw_beta(double a, double b, RngStream& rng);
// Inverse gamma with shape a and scale b (mean b/(a-1) for a > 1).
double draw_invgamma(double shape, double scale, RngStream& rng);
// N(mu, sigma2) truncated to (0, inf); inverse-CDF body, exponential
// rejection in the far tail.
double draw_truncnorm_pos(double mu, double sigma2, RngStream& rng);
long draw_poisson(double mean, RngStream& rng);
bool draw_bernoulli(double p, RngStream& rng);
// mean + chol(cov) z
Vector draw_mvn(const Vector& mean, const SpdMatrix& cov, RngStream& rng);

}  // namespace bsmr
