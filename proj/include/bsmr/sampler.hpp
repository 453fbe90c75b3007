#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bsmr/model.hpp"
#include "bsmr/rng.hpp"
#include "bsmr/types.hpp"

namespace bsmr {

struct PosteriorChain;

struct RunOptions {
  std::size_t n_iter = 10000;
  std::size_t n_burnin = 2000;
  // Random-walk step for the count/binary latent slots; adapted per slot
  // during burn-in towards a 30-45% acceptance rate, then frozen.
  double mh_step = 1.0;
  std::size_t adapt_interval = 50;
  // Structural and positive-definiteness checks run every this many sweeps
  // (0 disables them outside of the mandatory final check).
#ifdef NDEBUG
  std::size_t check_interval = 100;
#else
  std::size_t check_interval = 1;
#endif
  // When set, a failing run hands the retained draws (with the truncation
  // marker filled in) to this callback before the error propagates; the CLI
  // wires it to the chain writer.
  std::function<void(const PosteriorChain&)> persist_fn;

  void validate() const;
};

// One retained draw.  coef holds the effective coefficients; when the model
// has an intercept it occupies row 0 and the p predictor rows follow.
struct ChainDraw {
  Matrix coef;
  Matrix omega;
  std::vector<std::uint8_t> edge;
  std::vector<std::uint8_t> included;
  double pi1 = 0, pi2 = 0, pi3 = 0, sigma_tau2 = 0;
  Vector sigma2;
};

struct PosteriorChain {
  std::size_t p = 0, q = 0, l = 0, m = 0, k = 0;
  bool has_intercept = false;
  std::vector<std::size_t> group_sizes;
  std::size_t n_iter = 0, n_burnin = 0;
  std::uint64_t seed = 0, stream = 0;
  bool truncated = false;
  std::size_t truncated_at = 0;
  std::vector<ChainDraw> draws;

  std::size_t coef_rows() const { return p + (has_intercept ? 1 : 0); }
  std::size_t intercept_offset() const { return has_intercept ? 1 : 0; }

  // Entrywise posterior medians over the retained draws.
  Matrix median_coef() const;  // p x q, predictor rows only
  Vector median_intercept() const;
  Matrix median_omega() const;
  // Majority-vote support: entry selected when non-zero in more than half
  // of the retained draws.
  Matrix support_coef() const;                  // p x q of 0/1
  std::vector<std::uint8_t> support_edges() const;
};

// Type-7 interpolated percentile, prob in [0, 1].  Copies and sorts.
double chain_percentile(Vector values, double prob);

// Diagnostic snapshot of one group update, exposed for verification.
struct GroupUpdateWorkspace {
  Matrix psi;          // (I + V X_g' X_g V)^{-1}
  Matrix cond_mean;    // conditional mean of the group's raw rows
  double log_det_psi = 0;
  double trace_term = 0;  // tr(Omega M' Psi^{-1} M)
  double prob_zero = 0;   // conditional exclusion probability
};

// Diagnostic snapshot of one precision-column update.
struct OmegaColumnWorkspace {
  Matrix theta;      // q x q residual cross-product plus raw-coefficient term
  double alpha = 0;  // Wishart-like exponent n + sum of included group sizes
  Matrix sigma_eta;  // conditional covariance of the off-diagonal block
  Vector eta_mean;
  double zeta_shape = 0, zeta_rate = 0;
};

class GibbsSampler {
 public:
  GibbsSampler(const MixedResponseDataset& data, const Hyperparameters& hyper,
               const RunOptions& opts, RngStream rng);

  // One full sweep in the fixed scan order: latent values and noise
  // variances, intercept and coefficient groups, row scales, sparsity
  // weights and sigma_tau^2, precision matrix with edge indicators.
  void sweep();
  PosteriorChain run();

  // Individual steps, exposed for unit verification.
  void sample_latent();
  void sample_gaussian_variances();
  void sample_intercept();
  void sample_coefficient_group(std::size_t g);
  void sample_tau(std::size_t g, std::size_t j);
  void sample_sparsity_weights();
  void sample_sigma_tau2();
  void sample_precision();

  GroupUpdateWorkspace group_workspace(std::size_t g) const;
  OmegaColumnWorkspace omega_workspace(std::size_t col) const;
  // Conditional spike probability for one row scale; optionally reports the
  // slab moments.
  double tau_prob_zero(std::size_t g, std::size_t j, double* mu_out = nullptr,
                       double* var_out = nullptr) const;

  const ModelState& state() const { return state_; }
  ModelState& state_mut() { return state_; }
  // Rebuild cached products after direct edits to the state.
  void refresh_caches();

  double current_d() const { return d_; }
  std::size_t sweep_index() const { return sweep_; }
  const Vector& mh_steps() const { return mh_step_; }
  const MixedResponseDataset& data() const { return data_; }
  const Hyperparameters& hyper() const { return hyper_; }

  // Structural zeros, probability ranges, positive definiteness of Omega.
  void check_invariants() const;

 private:
  void adapt_mh_steps();
  void record_draw(PosteriorChain& chain) const;
  void ensure_sigma();
  double latent_log_target(double value, double cond_mean, double prec,
                           std::size_t slot, double obs) const;
  Matrix residual_plus_group(std::size_t g) const;

  const MixedResponseDataset& data_;
  Hyperparameters hyper_;
  RunOptions opts_;
  RngStream rng_;
  ModelState state_;

  double a5_ = 0, a6_ = 0, lambda_ = 0;
  double d_ = 1.0;
  std::size_t sweep_ = 0;
  const char* step_name_ = "";

  Matrix fitted_;       // n x q, intercept + X B
  Vector sxx_col_;      // per-predictor column sum of squares
  std::vector<Matrix> sxx_group_;  // per-group X_g' X_g
  Matrix sigma_;        // Omega^{-1}
  Matrix sigma_chol_;
  bool sigma_dirty_ = true;

  Vector mh_step_;      // per latent slot
  std::vector<std::size_t> mh_acc_, mh_prop_;
  Vector em_segment_;   // 1/sigma_tau2 draws since the last MC-EM refresh
};

PosteriorChain run_chain(const MixedResponseDataset& data,
                         const Hyperparameters& hyper, const RunOptions& opts,
                         std::uint64_t seed, std::uint64_t stream = 1);

enum class PredictMode { mean_path, predictive };

struct ResponseInterval {
  double lo = 0, median = 0, hi = 0;  // 2.5 / 50 / 97.5 percentiles
};

// Response-scale summary for one new observation: q intervals followed by
// the 0.5-cutoff class for each binary slot.
struct PredictionSummary {
  std::vector<ResponseInterval> responses;
  std::vector<int> binary_class;
};

// Per retained draw: latent mean coef' x_new, plus a N(0, Omega^{-1}) draw
// in predictive mode, mapped through the response links.  Predictive mode
// requires an rng.
PredictionSummary posterior_predict(const PosteriorChain& chain,
                                    const Vector& x_new, PredictMode mode,
                                    RngStream* rng = nullptr);
std::vector<PredictionSummary> posterior_predict_batch(
    const PosteriorChain& chain, const Matrix& x_new, PredictMode mode,
    RngStream* rng = nullptr);

// Stream-id conventions so that every consumer of the root seed draws from
// its own PCG sequence.
namespace streams {
inline constexpr std::uint64_t synthesis(std::uint64_t replicate = 0) {
  return (1ull << 56) | replicate;
}
inline constexpr std::uint64_t chain(std::uint64_t index = 0,
                                     std::uint64_t replicate = 0) {
  return (2ull << 56) | (replicate << 16) | index;
}
inline constexpr std::uint64_t prediction() { return 3ull << 56; }
inline constexpr std::uint64_t folds() { return 4ull << 56; }
}  // namespace streams

}  // namespace bsmr
