#pragma once

#include <cstdint>

#include "bsmr/linalg.hpp"
#include "bsmr/rng.hpp"
#include "bsmr/types.hpp"

namespace bsmr {

// Synthetic-study description.  Coefficient patterns 1 and 2 imply p=20 with
// four groups of five and two responses per type; patterns 3 and 4 imply
// p=80 with groups {10,20,10,10,20,10} / {20,10,10,20,10,10} and five
// responses per type.
struct SimulationScenario {
  int omega_id = 1;   // 1 banded, 2 permuted banded, 3 geometric decay,
                      // 4 random blocks, 5 compound-symmetry block
  int coeff_id = 1;   // 1..4 sparsity patterns
  std::size_t n = 100;       // training size
  std::size_t n_test = 100;
  std::size_t l = 2, m = 2, k = 2;
  std::size_t n_blocks = 3;  // M for omega pattern 4
  double sigma_x = 1.0;      // predictor standard deviation
  double coeff_low = 0.3, coeff_high = 0.8;
  double count_cap = 1e4;
  std::uint64_t seed = 0;

  std::size_t q() const { return l + m + k; }
  std::size_t p() const { return coeff_id <= 2 ? 20 : 80; }

  static SimulationScenario standard(int omega_id, int coeff_id);
  void validate() const;
};

struct GroundTruth {
  Matrix coeff;     // p x q
  Matrix omega;     // q x q
  Matrix support;   // p x q of 0/1, exact zero pattern of coeff
  Matrix xi_train;  // realized latent rows for the training data
  Matrix xi_test;
};

struct SimulatedData {
  MixedResponseDataset train;
  MixedResponseDataset test;
  GroundTruth truth;
};

struct CoefficientPattern {
  Matrix coeff;
  Matrix support;
  std::vector<std::size_t> group_sizes;
};

// Precision structures.  Patterns 2 and 4 consume the stream (permutation /
// block assignment); the result always passes the SPD construction check.
SpdMatrix make_omega(int omega_id, std::size_t q, std::size_t n_blocks,
                     RngStream& rng);

// Sparsity patterns with non-zero rows filled i.i.d. Uniform(low, high).
CoefficientPattern make_coefficients(int coeff_id, std::size_t q, double low,
                                     double high, RngStream& rng);

// Full replicate: truth, training set and a 100-point (configurable) test
// set.  A replicate whose largest count exceeds the cap is rejected and
// redrawn from the continuing stream.
SimulatedData generate_dataset(const SimulationScenario& scenario,
                               RngStream& rng);

}  // namespace bsmr
