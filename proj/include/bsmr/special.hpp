#pragma once

// Scalar special functions shared by the samplers and the conditional
// inclusion probabilities.  Everything here is deterministic and accurate to
// near machine precision over the ranges the model produces.

namespace bsmr {

// Standard normal CDF.
double norm_cdf(double x);
// log of the standard normal CDF, stable for x << 0.
double log_norm_cdf(double x);
// Inverse standard normal CDF for p in (0, 1).
double norm_quantile(double p);
// log(1 + e^x) without overflow.
double log1pexp(double x);
// log(e^a + e^b) without overflow.
double log_sum_exp(double a, double b);
// 1 / (1 + e^-x)
double sigmoid(double x);
// log density of the inverse gamma with shape a and scale b at x > 0.
double inv_gamma_log_pdf(double x, double shape, double scale);
// log density of N(mu, sigma2) at x.
double normal_log_pdf(double x, double mu, double sigma2);

}  // namespace bsmr
