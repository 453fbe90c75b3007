#pragma once

#include "bsmr/types.hpp"

namespace bsmr {

// B = V * b_tilde with V = diag(tau); rows of excluded groups are zero.
Matrix effective_coefficients(const Matrix& b_tilde, const Vector& tau,
                              const std::vector<std::uint8_t>& group_included,
                              const GroupStructure& groups);

// n x q matrix of latent means: row i is intercept + B^T x_i.
Matrix linear_predictor(const Matrix& x, const Matrix& coeff,
                        const Vector& intercept);

// Single-point form: B^T x.
Vector linear_predictor(const Matrix& coeff, const Vector& x);

// Map one latent row to the natural response parameters: identity on the
// continuous slots, exp on the count slots, logistic on the binary slots.
// Throws NumericError when a count mean overflows.
Vector response_links(const Vector& xi_row, std::size_t l, std::size_t m,
                      std::size_t k);

// Initial latent values: u, log(z + 0.5), +/-1 for w.
Matrix initial_latent(const MixedResponseDataset& data);

// Fresh state for a fit: b_tilde = 0, tau = 1, every group included,
// Omega = I (or the pinned value), probabilities at their prior means.
ModelState initial_state(const MixedResponseDataset& data,
                         const Hyperparameters& hyper);

// Structural checks: dimensions agree, excluded groups have zero rows,
// probabilities in [0,1], variances positive, Omega symmetric.
void validate_state(const ModelState& state, const MixedResponseDataset& data,
                    bool has_intercept);

}  // namespace bsmr
