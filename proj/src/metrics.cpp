#include "bsmr/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "bsmr/errors.hpp"

namespace bsmr {

double loss_matrix(const Matrix& truth, const Matrix& est) {
  if (truth.rows() != est.rows() || truth.cols() != est.cols())
    throw DataError("loss_matrix shape mismatch");
  const std::size_t total = truth.rows() * truth.cols();
  if (total == 0) return 0.0;
  return std::sqrt(frobenius_sq_diff(truth, est) / static_cast<double>(total));
}

double fsl(const Matrix& truth_support, const Matrix& est_support) {
  if (truth_support.rows() != est_support.rows() ||
      truth_support.cols() != est_support.cols())
    throw DataError("fsl shape mismatch");
  const std::size_t total = truth_support.rows() * truth_support.cols();
  if (total == 0) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth_support.rows(); ++i)
    for (std::size_t j = 0; j < truth_support.cols(); ++j)
      wrong += (truth_support(i, j) != 0.0) != (est_support(i, j) != 0.0);
  return static_cast<double>(wrong) / static_cast<double>(total);
}

double fsl_edges(const std::vector<std::uint8_t>& truth_support,
                 const std::vector<std::uint8_t>& est_support) {
  if (truth_support.size() != est_support.size())
    throw DataError("fsl_edges size mismatch");
  if (truth_support.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t e = 0; e < truth_support.size(); ++e)
    wrong += (truth_support[e] != 0) != (est_support[e] != 0);
  return static_cast<double>(wrong) / static_cast<double>(truth_support.size());
}

std::vector<std::uint8_t> omega_edge_support(const Matrix& omega) {
  const std::size_t q = omega.rows();
  std::vector<std::uint8_t> sup;
  sup.reserve(q * (q - 1) / 2);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = i + 1; j < q; ++j)
      sup.push_back(omega(i, j) != 0.0 ? 1 : 0);
  return sup;
}

double rmse(const Vector& y, const Vector& yhat) {
  if (y.size() != yhat.size()) throw DataError("rmse length mismatch");
  if (y.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - yhat[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(y.size()));
}

double misclassification(const Vector& y, const Vector& gamma_hat) {
  if (y.size() != gamma_hat.size())
    throw DataError("misclassification length mismatch");
  if (y.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const int cls = gamma_hat[i] > 0.5 ? 1 : 0;
    wrong += cls != static_cast<int>(y[i]);
  }
  return static_cast<double>(wrong) / static_cast<double>(y.size());
}

double interval_coverage(
    const Vector& truth,
    const std::vector<std::pair<double, double>>& intervals) {
  if (truth.size() != intervals.size())
    throw DataError("interval_coverage length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    inside += truth[i] >= intervals[i].first && truth[i] <= intervals[i].second;
  return static_cast<double>(inside) / static_cast<double>(truth.size());
}

namespace {

ReplicateMetrics combine(const std::vector<ReplicateMetrics>& rows,
                         bool standard_error) {
  const double n = static_cast<double>(rows.size());
  auto stat = [&](double ReplicateMetrics::*field) {
    double mean = 0.0;
    for (const ReplicateMetrics& r : rows) mean += r.*field;
    mean /= n;
    if (!standard_error) return mean;
    if (rows.size() < 2) return 0.0;
    double ss = 0.0;
    for (const ReplicateMetrics& r : rows) {
      const double d = r.*field - mean;
      ss += d * d;
    }
    return std::sqrt(ss / (n - 1.0) / n);
  };
  ReplicateMetrics out;
  out.loss_b = stat(&ReplicateMetrics::loss_b);
  out.loss_omega = stat(&ReplicateMetrics::loss_omega);
  out.fsl_b = stat(&ReplicateMetrics::fsl_b);
  out.fsl_omega = stat(&ReplicateMetrics::fsl_omega);
  out.rmse_continuous = stat(&ReplicateMetrics::rmse_continuous);
  out.rmse_count = stat(&ReplicateMetrics::rmse_count);
  out.misclass_rate = stat(&ReplicateMetrics::misclass_rate);
  out.seconds = stat(&ReplicateMetrics::seconds);
  return out;
}

}  // namespace

void EvaluationReport::aggregate() {
  if (replicates.empty()) {
    mean = ReplicateMetrics{};
    se = ReplicateMetrics{};
    return;
  }
  mean = combine(replicates, false);
  se = combine(replicates, true);
}

ReplicateMetrics evaluate_fit(const PosteriorChain& chain,
                              const MixedResponseDataset& test,
                              const GroundTruth& truth) {
  if (chain.draws.empty()) throw ConfigError("chain holds no retained draws");
  if (test.p() != chain.p || test.q() != chain.q)
    throw DataError("test set does not match the fitted model");

  ReplicateMetrics out;
  out.loss_b = loss_matrix(truth.coeff, chain.median_coef());
  out.loss_omega = loss_matrix(truth.omega, chain.median_omega());
  out.fsl_b = fsl(truth.support, chain.support_coef());
  out.fsl_omega =
      fsl_edges(omega_edge_support(truth.omega), chain.support_edges());

  const std::vector<PredictionSummary> preds =
      posterior_predict_batch(chain, test.x, PredictMode::mean_path);
  const std::size_t n = test.n();
  Vector y(n), yhat(n);
  double acc = 0.0;
  for (std::size_t j = 0; j < test.l(); ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = test.u(i, j);
      yhat[i] = preds[i].responses[j].median;
    }
    acc += rmse(y, yhat);
  }
  out.rmse_continuous = test.l() ? acc / static_cast<double>(test.l()) : 0.0;

  acc = 0.0;
  for (std::size_t j = 0; j < test.m(); ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = test.z(i, j);
      yhat[i] = preds[i].responses[test.l() + j].median;
    }
    acc += rmse(y, yhat);
  }
  out.rmse_count = test.m() ? acc / static_cast<double>(test.m()) : 0.0;

  acc = 0.0;
  for (std::size_t j = 0; j < test.k(); ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = test.w(i, j);
      yhat[i] = preds[i].responses[test.l() + test.m() + j].median;
    }
    acc += misclassification(y, yhat);
  }
  out.misclass_rate = test.k() ? acc / static_cast<double>(test.k()) : 0.0;
  return out;
}

EvaluationReport replicate_study(const SimulationScenario& scenario,
                                 const Hyperparameters& hyper,
                                 const RunOptions& run_opts,
                                 const StudyOptions& study) {
  if (study.n_replicates == 0)
    throw ConfigError("replicate study needs at least one replicate");
  scenario.validate();

  EvaluationReport report;
  report.replicates.resize(study.n_replicates);

  std::mutex progress_mutex;
  auto run_one = [&](std::size_t rep) {
    RngStream synth_rng(study.seed, streams::synthesis(rep));
    const SimulatedData sim = generate_dataset(scenario, synth_rng);
    const auto start = std::chrono::steady_clock::now();
    const PosteriorChain chain =
        run_chain(sim.train, hyper, run_opts, study.seed, streams::chain(0, rep));
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;
    ReplicateMetrics row = evaluate_fit(chain, sim.test, sim.truth);
    row.seconds = elapsed.count();
    report.replicates[rep] = row;
    if (study.progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      study.progress(rep, row);
    }
  };

  const std::size_t workers =
      std::min(std::max<std::size_t>(study.threads, 1), study.n_replicates);
  if (workers <= 1) {
    for (std::size_t rep = 0; rep < study.n_replicates; ++rep) run_one(rep);
  } else {
    std::mutex next_mutex;
    std::size_t next = 0;
    auto worker = [&] {
      for (;;) {
        std::size_t rep;
        {
          std::lock_guard<std::mutex> lock(next_mutex);
          if (next == study.n_replicates) return;
          rep = next++;
        }
        run_one(rep);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  report.aggregate();
  return report;
}

}  // namespace bsmr
