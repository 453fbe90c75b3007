#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bsmr/matrix.hpp"

namespace bsmr {

// Partition of the p predictors into contiguous groups.
class GroupStructure {
 public:
  GroupStructure() = default;
  explicit GroupStructure(std::vector<std::size_t> sizes);

  std::size_t n_groups() const { return sizes_.size(); }
  std::size_t n_predictors() const { return total_; }
  std::size_t size(std::size_t g) const { return sizes_[g]; }
  std::size_t offset(std::size_t g) const { return offsets_[g]; }
  std::size_t group_of(std::size_t predictor) const;
  const std::vector<std::size_t>& sizes() const { return sizes_; }

  bool operator==(const GroupStructure& o) const { return sizes_ == o.sizes_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

// Observed data: n rows of p predictors with three response blocks, laid out
// as continuous (l columns), count (m), binary (k).  q = l + m + k latent
// components, in that order.
struct MixedResponseDataset {
  Matrix x;  // n x p
  Matrix u;  // n x l, continuous
  Matrix z;  // n x m, counts stored as doubles
  Matrix w;  // n x k, 0/1
  GroupStructure groups;

  std::size_t n() const { return x.rows(); }
  std::size_t p() const { return x.cols(); }
  std::size_t l() const { return u.cols(); }
  std::size_t m() const { return z.cols(); }
  std::size_t k() const { return w.cols(); }
  std::size_t q() const { return l() + m() + k(); }

  // Throws DataError naming the offending cell when a value is non-finite,
  // a count is negative or fractional, a binary cell is not 0/1, or the
  // group sizes do not sum to p.
  void validate() const;
};

enum class SigmaUpdate : std::uint8_t {
  conjugate,  // inverse gamma with the squared-residual scale
  unsquared,  // literal variant with an unsquared residual scale
};

// Prior settings and structural switches for one fit.  a5, a6 and lambda
// default to their dimension-driven values when left at 0 (q, q(q-1)/2 and
// q respectively).
struct Hyperparameters {
  double a1 = 20.0, a2 = 40.0;  // Beta prior on the group exclusion weight
  double a3 = 20.0, a4 = 40.0;  // Beta prior on the row exclusion weight
  double a5 = 0.0, a6 = 0.0;    // Beta prior on the edge slab weight
  double sigma0 = 0.1;          // precision spike sd
  double sigma1 = 3.0;          // precision slab sd
  double lambda = 0.0;          // exponential rate on diagonal entries
  double d = 1.0;               // initial inverse-gamma scale for sigma_tau^2
  std::size_t em_interval = 100;  // sweeps between MC-EM updates of d
  bool em_update_d = true;
  double omega_alpha0 = 0.0;  // extra prior exponent on log det Omega
  bool include_intercept = true;
  SigmaUpdate sigma_update = SigmaUpdate::conjugate;

  // Pins used by calibration checks; production fits leave these unset.
  std::optional<double> pin_pi1;
  std::optional<double> pin_pi2;
  std::optional<double> pin_pi3;
  bool fix_tau = false;    // hold all tau at their initial value 1
  bool fix_omega = false;  // hold Omega (and edges) at the provided value
  bool fix_sigma2 = false; // hold Gaussian noise variances
  std::optional<Matrix> omega_init;
  std::optional<Vector> sigma2_init;

  double resolved_a5(std::size_t q) const {
    return a5 > 0.0 ? a5 : static_cast<double>(q);
  }
  double resolved_a6(std::size_t q) const {
    return a6 > 0.0 ? a6 : static_cast<double>(q * (q - 1)) / 2.0;
  }
  double resolved_lambda(std::size_t q) const {
    return lambda > 0.0 ? lambda : static_cast<double>(q);
  }

  void validate() const;
};

// Full Gibbs state.  tau holds the row scales; row r of b_tilde is zero for
// every r in an excluded group.  edge_ind stores the strict upper triangle
// of the precision slab indicators row by row.
struct ModelState {
  Matrix b_tilde;                       // p x q
  Vector tau;                           // p
  std::vector<std::uint8_t> group_included;  // G
  Vector intercept;                     // q (empty when disabled)
  Matrix omega;                         // q x q
  std::vector<std::uint8_t> edge_ind;   // q(q-1)/2
  double pi1 = 0.0, pi2 = 0.0, pi3 = 0.0;
  double sigma_tau2 = 1.0;
  Vector sigma2;                        // l
  Matrix xi;                            // n x q

  static std::size_t edge_index(std::size_t i, std::size_t j, std::size_t q);
};

}  // namespace bsmr
