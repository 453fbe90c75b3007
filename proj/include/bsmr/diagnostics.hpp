#pragma once

#include <string>
#include <vector>

#include "bsmr/sampler.hpp"

namespace bsmr {

// One parameter's retained-draw history.  Ids are 1-based:
//   B[r,c]  effective coefficient      b0[c]       intercept
//   Omega[i,j]                          sigma2[j]
//   pi1 pi2 pi3 sigma_tau2
struct TraceSeries {
  std::string id;
  Vector values;
};

// Sample autocorrelations at lags 0..max_lag with the biased 1/N
// normalization; a zero-variance series maps to (1, 0, 0, ...).
Vector acf(const Vector& series, std::size_t max_lag);

struct EssResult {
  double ess = 1.0;
  bool degenerate = false;  // constant or too-short series
};

// Initial-monotone-sequence estimator over paired autocorrelations.
EssResult effective_sample_size(const Vector& series);

std::vector<std::string> parse_trace_ids(const std::string& csv_list);

// Deterministic default selection: global parameters, a few of the largest
// coefficient entries, and the strongest off-diagonal precision entry.
std::vector<std::string> default_trace_ids(const PosteriorChain& chain,
                                           std::size_t max_coef_entries = 4);

std::vector<TraceSeries> extract_traces(const PosteriorChain& chain,
                                        const std::vector<std::string>& ids);

// CSV with columns iter,<id>... ; iter is the global sweep number.
std::string format_traces_csv(const PosteriorChain& chain,
                              const std::vector<TraceSeries>& traces);
void export_traces(const PosteriorChain& chain,
                   const std::vector<std::string>& ids,
                   const std::string& path);
std::vector<TraceSeries> import_traces(const std::string& path);

}  // namespace bsmr
