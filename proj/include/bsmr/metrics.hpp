#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "bsmr/sampler.hpp"
#include "bsmr/synthesis.hpp"

namespace bsmr {

// Root-mean-square entry loss sqrt(sum (a-b)^2 / (rows*cols)).
double loss_matrix(const Matrix& truth, const Matrix& est);

// (false positives + false negatives) / total entries, both masks 0/1.
double fsl(const Matrix& truth_support, const Matrix& est_support);
double fsl_edges(const std::vector<std::uint8_t>& truth_support,
                 const std::vector<std::uint8_t>& est_support);

// Strict upper triangle nonzero pattern, row-major edge order.
std::vector<std::uint8_t> omega_edge_support(const Matrix& omega);

double rmse(const Vector& y, const Vector& yhat);

// Error rate with cutoff 0.5; a tie classifies as 0.
double misclassification(const Vector& y, const Vector& gamma_hat);

double interval_coverage(const Vector& truth,
                         const std::vector<std::pair<double, double>>& intervals);

struct ReplicateMetrics {
  double loss_b = 0, loss_omega = 0;
  double fsl_b = 0, fsl_omega = 0;
  double rmse_continuous = 0, rmse_count = 0, misclass_rate = 0;
  double seconds = 0;
};

// Per-replicate rows plus mean / standard-error aggregates (SE of the mean,
// zero for a single replicate).
struct EvaluationReport {
  std::vector<ReplicateMetrics> replicates;
  ReplicateMetrics mean, se;

  void aggregate();
};

// Point estimates against ground truth: medians for values, majority-vote
// support for selection, posterior-median mean paths for test predictions.
// Block prediction errors average the per-column RMSE within each response
// type.
ReplicateMetrics evaluate_fit(const PosteriorChain& chain,
                              const MixedResponseDataset& test,
                              const GroundTruth& truth);

struct StudyOptions {
  std::size_t n_replicates = 10;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  // Called after each finished replicate (serialized across workers).
  std::function<void(std::size_t, const ReplicateMetrics&)> progress;
};

// generate -> fit -> evaluate per replicate on disjoint substreams of the
// root seed; identical output regardless of thread count.
EvaluationReport replicate_study(const SimulationScenario& scenario,
                                 const Hyperparameters& hyper,
                                 const RunOptions& run_opts,
                                 const StudyOptions& study);

}  // namespace bsmr
