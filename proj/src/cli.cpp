#include "bsmr/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bsmr/diagnostics.hpp"
#include "bsmr/errors.hpp"
#include "bsmr/io.hpp"
#include "bsmr/linalg.hpp"
#include "bsmr/metrics.hpp"
#include "bsmr/sampler.hpp"
#include "bsmr/synthesis.hpp"

namespace bsmr::cli {
namespace {

using nlohmann::json;

struct Invocation {
  RunConfig cfg;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t chains = 1;
  std::size_t threads = 1;
};

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  return dir.back() == '/' ? dir + name : dir + "/" + name;
}

std::size_t get_size(RunConfig& cfg, const std::string& key,
                     std::size_t fallback) {
  const std::int64_t v =
      cfg.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ConfigError(key + ": must be nonnegative");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> response_names(std::size_t l, std::size_t m,
                                        std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t j = 1; j <= l; ++j) names.push_back("u" + std::to_string(j));
  for (std::size_t j = 1; j <= m; ++j) names.push_back("z" + std::to_string(j));
  for (std::size_t j = 1; j <= k; ++j) names.push_back("w" + std::to_string(j));
  return names;
}

SimulationScenario scenario_from(RunConfig& cfg, std::uint64_t seed) {
  SimulationScenario sc = SimulationScenario::standard(
      static_cast<int>(cfg.get_int("omega_id")),
      static_cast<int>(cfg.get_int("coeff_id")));
  sc.n = get_size(cfg, "n", sc.n);
  sc.n_test = get_size(cfg, "n_test", sc.n_test);
  sc.l = get_size(cfg, "l", sc.l);
  sc.m = get_size(cfg, "m", sc.m);
  sc.k = get_size(cfg, "k", sc.k);
  sc.n_blocks = get_size(cfg, "n_blocks", sc.n_blocks);
  sc.sigma_x = cfg.get_double("sigma_x", sc.sigma_x);
  sc.coeff_low = cfg.get_double("coeff_low", sc.coeff_low);
  sc.coeff_high = cfg.get_double("coeff_high", sc.coeff_high);
  sc.count_cap = cfg.get_double("count_cap", sc.count_cap);
  sc.seed = seed;
  sc.validate();
  return sc;
}

Hyperparameters hyper_from(RunConfig& cfg) {
  Hyperparameters h;
  h.a1 = cfg.get_double("a1", h.a1);
  h.a2 = cfg.get_double("a2", h.a2);
  h.a3 = cfg.get_double("a3", h.a3);
  h.a4 = cfg.get_double("a4", h.a4);
  h.a5 = cfg.get_double("a5", h.a5);
  h.a6 = cfg.get_double("a6", h.a6);
  h.sigma0 = cfg.get_double("sigma0", h.sigma0);
  h.sigma1 = cfg.get_double("sigma1", h.sigma1);
  h.lambda = cfg.get_double("lambda", h.lambda);
  h.d = cfg.get_double("d", h.d);
  h.em_interval = get_size(cfg, "em_interval", h.em_interval);
  h.em_update_d = cfg.get_bool("em_update_d", h.em_update_d);
  h.omega_alpha0 = cfg.get_double("omega_alpha0", h.omega_alpha0);
  h.include_intercept = cfg.get_bool("include_intercept", h.include_intercept);
  const std::string su = cfg.get_string("sigma_update", "conjugate");
  if (su == "conjugate")
    h.sigma_update = SigmaUpdate::conjugate;
  else if (su == "unsquared")
    h.sigma_update = SigmaUpdate::unsquared;
  else
    throw ConfigError("sigma_update: expected conjugate or unsquared, got '" +
                      su + "'");
  if (cfg.has("pin_pi1")) h.pin_pi1 = cfg.get_double("pin_pi1");
  if (cfg.has("pin_pi2")) h.pin_pi2 = cfg.get_double("pin_pi2");
  if (cfg.has("pin_pi3")) h.pin_pi3 = cfg.get_double("pin_pi3");
  h.fix_tau = cfg.get_bool("fix_tau", h.fix_tau);
  h.fix_omega = cfg.get_bool("fix_omega", h.fix_omega);
  h.fix_sigma2 = cfg.get_bool("fix_sigma2", h.fix_sigma2);
  h.validate();
  return h;
}

RunOptions run_opts_from(RunConfig& cfg) {
  RunOptions o;
  o.n_iter = get_size(cfg, "n_iter", o.n_iter);
  o.n_burnin = get_size(cfg, "n_burnin", o.n_burnin);
  o.mh_step = cfg.get_double("mh_step", o.mh_step);
  o.adapt_interval = get_size(cfg, "adapt_interval", o.adapt_interval);
  o.check_interval = get_size(cfg, "check_interval", o.check_interval);
  o.validate();
  return o;
}

Vector draw_values(const PosteriorChain& chain,
                   double (*get)(const ChainDraw&)) {
  Vector out(chain.draws.size());
  for (std::size_t s = 0; s < chain.draws.size(); ++s)
    out[s] = get(chain.draws[s]);
  return out;
}

int cmd_simulate(Invocation& inv) {
  const SimulationScenario sc = scenario_from(inv.cfg, inv.seed);
  inv.cfg.reject_unknown();
  RngStream rng(inv.seed, streams::synthesis(0));
  const SimulatedData sim = generate_dataset(sc, rng);
  save_dataset(join_path(inv.out_dir, "train.csv"),
               join_path(inv.out_dir, "schema.txt"), sim.train);
  save_dataset(join_path(inv.out_dir, "test.csv"),
               join_path(inv.out_dir, "schema.txt"), sim.test);
  save_truth(join_path(inv.out_dir, "truth.json"), sc, sim.truth);
  std::printf(
      "simulated omega %d / coefficients %d: n=%zu train, %zu test, p=%zu, "
      "q=%zu -> %s/{train.csv,test.csv,schema.txt,truth.json}\n",
      sc.omega_id, sc.coeff_id, sc.n, sc.n_test, sc.p(), sc.q(),
      inv.out_dir.c_str());
  return 0;
}

std::string chain_file(std::size_t index1) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "chain_%02zu.bin", index1);
  return buf;
}

int cmd_fit(Invocation& inv) {
  const std::string data_csv = inv.cfg.get_string("data_csv");
  const std::string data_schema = inv.cfg.get_string("data_schema");
  const Hyperparameters hyper = hyper_from(inv.cfg);
  const RunOptions opts = run_opts_from(inv.cfg);
  const std::size_t csv_thin = get_size(inv.cfg, "csv_thin", 0);
  inv.cfg.reject_unknown();

  const MixedResponseDataset data = load_dataset(data_csv, data_schema);

  std::vector<PosteriorChain> chains;
  std::vector<std::string> digests;
  for (std::size_t c = 0; c < inv.chains; ++c) {
    const std::string path = join_path(inv.out_dir, chain_file(c + 1));
    RunOptions copts = opts;
    copts.persist_fn = [path](const PosteriorChain& pc) {
      save_chain(path, pc);
    };
    PosteriorChain pc =
        run_chain(data, hyper, copts, inv.seed, streams::chain(c, 0));
    save_chain(path, pc);
    digests.push_back(chain_digest(pc));
    std::fprintf(stderr, "chain %zu/%zu done (%zu retained draws)\n", c + 1,
                 inv.chains, pc.draws.size());
    chains.push_back(std::move(pc));
  }

  PosteriorChain pooled = chains.front();
  for (std::size_t c = 1; c < chains.size(); ++c)
    pooled.draws.insert(pooled.draws.end(), chains[c].draws.begin(),
                        chains[c].draws.end());

  const Matrix coef_med = pooled.median_coef();
  const Vector b0 = pooled.median_intercept();
  const Matrix omega_med = pooled.median_omega();
  const Matrix coef_sup = pooled.support_coef();
  const std::vector<std::uint8_t> edge_sup = pooled.support_edges();
  const std::vector<std::string> resp =
      response_names(pooled.l, pooled.m, pooled.k);

  std::string csv = "row";
  for (const std::string& name : resp) csv += ',' + name;
  csv += '\n';
  if (pooled.has_intercept) {
    csv += "b0";
    for (std::size_t j = 0; j < pooled.q; ++j)
      csv += ',' + format_double(b0[j]);
    csv += '\n';
  }
  for (std::size_t r = 0; r < pooled.p; ++r) {
    csv += "x" + std::to_string(r + 1);
    for (std::size_t j = 0; j < pooled.q; ++j)
      csv += ',' + format_double(coef_med(r, j));
    csv += '\n';
  }
  write_file_atomic(join_path(inv.out_dir, "coef_median.csv"), csv);

  csv = "component";
  for (std::size_t j = 1; j <= pooled.q; ++j)
    csv += ",xi" + std::to_string(j);
  csv += '\n';
  for (std::size_t i = 0; i < pooled.q; ++i) {
    csv += "xi" + std::to_string(i + 1);
    for (std::size_t j = 0; j < pooled.q; ++j)
      csv += ',' + format_double(omega_med(i, j));
    csv += '\n';
  }
  write_file_atomic(join_path(inv.out_dir, "omega_median.csv"), csv);

  json est;
  est["chains"] = inv.chains;
  est["draws_per_chain"] = chains.front().draws.size();
  est["digests"] = digests;
  est["seed"] = inv.seed;
  bool truncated = false;
  for (const PosteriorChain& pc : chains) truncated = truncated || pc.truncated;
  est["truncated"] = truncated;
  est["pi1"] =
      chain_percentile(draw_values(pooled, [](const ChainDraw& d) { return d.pi1; }), 0.5);
  est["pi2"] =
      chain_percentile(draw_values(pooled, [](const ChainDraw& d) { return d.pi2; }), 0.5);
  est["pi3"] =
      chain_percentile(draw_values(pooled, [](const ChainDraw& d) { return d.pi3; }), 0.5);
  est["sigma_tau2"] = chain_percentile(
      draw_values(pooled, [](const ChainDraw& d) { return d.sigma_tau2; }), 0.5);
  {
    json sig = json::array();
    Vector scratch(pooled.draws.size());
    for (std::size_t j = 0; j < pooled.l; ++j) {
      for (std::size_t s = 0; s < pooled.draws.size(); ++s)
        scratch[s] = pooled.draws[s].sigma2[j];
      sig.push_back(chain_percentile(scratch, 0.5));
    }
    est["sigma2"] = sig;
  }
  {
    json inc = json::array();
    const std::size_t n_groups = pooled.group_sizes.size();
    for (std::size_t g = 0; g < n_groups; ++g) {
      double rate = 0.0;
      for (const ChainDraw& d : pooled.draws) rate += d.included[g];
      inc.push_back(rate / static_cast<double>(pooled.draws.size()));
    }
    est["group_inclusion_rate"] = inc;
  }
  {
    json edges = json::array();
    for (std::uint8_t e : edge_sup) edges.push_back(static_cast<int>(e));
    est["edge_support"] = edges;
    std::size_t selected = 0;
    for (std::size_t r = 0; r < pooled.p; ++r)
      for (std::size_t j = 0; j < pooled.q; ++j)
        selected += coef_sup(r, j) != 0.0;
    est["coef_support_count"] = selected;
  }
  write_file_atomic(join_path(inv.out_dir, "estimates.json"),
                    est.dump(1) + "\n");

  if (csv_thin)
    export_chain_csv(join_path(inv.out_dir, "chain_01.csv"), chains.front(),
                     csv_thin);

  std::printf("fit: %zu chain(s) x %zu draws; digest %s -> %s\n", inv.chains,
              chains.front().draws.size(), digests.front().c_str(),
              inv.out_dir.c_str());
  return 0;
}

int cmd_predict(Invocation& inv) {
  const PosteriorChain chain = load_chain(inv.cfg.get_string("chain"));
  const Matrix x = load_predictors(inv.cfg.get_string("data_csv"));
  const std::string mode_s = inv.cfg.get_string("mode", "predictive");
  PredictMode mode;
  if (mode_s == "predictive")
    mode = PredictMode::predictive;
  else if (mode_s == "mean" || mode_s == "mean_path")
    mode = PredictMode::mean_path;
  else
    throw ConfigError("mode: expected predictive or mean, got '" + mode_s +
                      "'");
  inv.cfg.reject_unknown();

  RngStream rng(inv.seed, streams::prediction());
  const std::vector<PredictionSummary> preds = posterior_predict_batch(
      chain, x, mode, mode == PredictMode::predictive ? &rng : nullptr);

  const std::vector<std::string> resp =
      response_names(chain.l, chain.m, chain.k);
  std::string csv = "row";
  for (const std::string& name : resp)
    csv += ',' + name + "_lo," + name + "_median," + name + "_hi";
  for (std::size_t j = 0; j < chain.k; ++j)
    csv += ',' + resp[chain.l + chain.m + j] + "_class";
  csv += '\n';
  for (std::size_t i = 0; i < preds.size(); ++i) {
    csv += std::to_string(i + 1);
    for (const ResponseInterval& r : preds[i].responses) {
      csv += ',' + format_double(r.lo);
      csv += ',' + format_double(r.median);
      csv += ',' + format_double(r.hi);
    }
    for (int cls : preds[i].binary_class) csv += ',' + std::to_string(cls);
    csv += '\n';
  }
  write_file_atomic(join_path(inv.out_dir, "predictions.csv"), csv);
  std::printf("predicted %zu rows (%s mode) -> %s/predictions.csv\n",
              preds.size(), mode_s.c_str(), inv.out_dir.c_str());
  return 0;
}

int cmd_evaluate(Invocation& inv) {
  const PosteriorChain chain = load_chain(inv.cfg.get_string("chain"));
  const MixedResponseDataset test = load_dataset(
      inv.cfg.get_string("test_csv"), inv.cfg.get_string("test_schema"));
  const GroundTruth truth = load_truth(inv.cfg.get_string("truth"));
  inv.cfg.reject_unknown();

  EvaluationReport report;
  report.replicates.push_back(evaluate_fit(chain, test, truth));
  report.aggregate();
  write_file_atomic(join_path(inv.out_dir, "report.json"),
                    report_json(report));
  write_file_atomic(join_path(inv.out_dir, "report.csv"), report_csv(report));
  const ReplicateMetrics& m = report.mean;
  std::printf(
      "loss_b %.4g | loss_omega %.4g | fsl_b %.4g | fsl_omega %.4g | "
      "rmse_continuous %.4g | rmse_count %.4g | misclass %.4g\n",
      m.loss_b, m.loss_omega, m.fsl_b, m.fsl_omega, m.rmse_continuous,
      m.rmse_count, m.misclass_rate);
  return 0;
}

int cmd_diagnose(Invocation& inv) {
  const PosteriorChain chain = load_chain(inv.cfg.get_string("chain"));
  std::vector<std::string> ids;
  if (inv.cfg.has("trace_ids"))
    ids = parse_trace_ids(inv.cfg.get_string("trace_ids"));
  else
    ids = default_trace_ids(chain);
  std::size_t max_lag = get_size(inv.cfg, "max_lag", 40);
  inv.cfg.reject_unknown();
  if (chain.draws.size() < 2) throw ConfigError("chain too short to diagnose");
  max_lag = std::min(max_lag, chain.draws.size() - 1);

  const std::vector<TraceSeries> traces = extract_traces(chain, ids);
  write_file_atomic(join_path(inv.out_dir, "traces.csv"),
                    format_traces_csv(chain, traces));

  std::vector<Vector> rhos;
  rhos.reserve(traces.size());
  for (const TraceSeries& t : traces) rhos.push_back(acf(t.values, max_lag));
  std::string csv = "lag";
  for (const TraceSeries& t : traces) csv += ',' + t.id;
  csv += '\n';
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    csv += std::to_string(lag);
    for (const Vector& rho : rhos) csv += ',' + format_double(rho[lag]);
    csv += '\n';
  }
  write_file_atomic(join_path(inv.out_dir, "acf.csv"), csv);

  json ess;
  ess["n_draws"] = chain.draws.size();
  json series = json::object();
  for (const TraceSeries& t : traces) {
    const EssResult r = effective_sample_size(t.values);
    series[t.id] = {{"ess", r.ess}, {"degenerate", r.degenerate}};
  }
  ess["series"] = series;
  write_file_atomic(join_path(inv.out_dir, "ess.json"), ess.dump(1) + "\n");

  std::printf("diagnostics over %zu draws, %zu series -> %s/{traces.csv,"
              "acf.csv,ess.json}\n",
              chain.draws.size(), traces.size(), inv.out_dir.c_str());
  return 0;
}

int cmd_replicate_study(Invocation& inv) {
  const SimulationScenario sc = scenario_from(inv.cfg, inv.seed);
  const Hyperparameters hyper = hyper_from(inv.cfg);
  const RunOptions opts = run_opts_from(inv.cfg);
  StudyOptions study;
  study.n_replicates = get_size(inv.cfg, "n_replicates", 10);
  study.threads = inv.threads;
  study.seed = inv.seed;
  inv.cfg.reject_unknown();
  study.progress = [&](std::size_t rep, const ReplicateMetrics& m) {
    std::fprintf(stderr,
                 "replicate %zu/%zu: loss_b %.3f loss_omega %.3f fsl_b %.3f "
                 "(%.1fs)\n",
                 rep + 1, study.n_replicates, m.loss_b, m.loss_omega, m.fsl_b,
                 m.seconds);
  };

  const EvaluationReport report = replicate_study(sc, hyper, opts, study);
  write_file_atomic(join_path(inv.out_dir, "study.json"), report_json(report));
  write_file_atomic(join_path(inv.out_dir, "study.csv"), report_csv(report));
  std::printf(
      "%zu replicates: loss_b %.3f (%.3f) | loss_omega %.3f (%.3f) | fsl_b "
      "%.3f (%.3f) | fsl_omega %.3f (%.3f) | rmse_n %.3f (%.3f) | rmse_p "
      "%.3f (%.3f) | me %.3f (%.3f)\n",
      study.n_replicates, report.mean.loss_b, report.se.loss_b,
      report.mean.loss_omega, report.se.loss_omega, report.mean.fsl_b,
      report.se.fsl_b, report.mean.fsl_omega, report.se.fsl_omega,
      report.mean.rmse_continuous, report.se.rmse_continuous,
      report.mean.rmse_count, report.se.rmse_count, report.mean.misclass_rate,
      report.se.misclass_rate);
  return 0;
}

MixedResponseDataset subset_rows(const MixedResponseDataset& d,
                                 const std::vector<std::size_t>& rows) {
  MixedResponseDataset out;
  out.groups = d.groups;
  out.x = Matrix(rows.size(), d.p());
  out.u = Matrix(rows.size(), d.l());
  out.z = Matrix(rows.size(), d.m());
  out.w = Matrix(rows.size(), d.k());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    for (std::size_t j = 0; j < d.p(); ++j) out.x(i, j) = d.x(r, j);
    for (std::size_t j = 0; j < d.l(); ++j) out.u(i, j) = d.u(r, j);
    for (std::size_t j = 0; j < d.m(); ++j) out.z(i, j) = d.z(r, j);
    for (std::size_t j = 0; j < d.k(); ++j) out.w(i, j) = d.w(r, j);
  }
  return out;
}

struct CvPrediction {
  double rmse_continuous = 0, rmse_count = 0, misclass_rate = 0;
};

// Mean held-out prediction metrics over seed-shuffled contiguous folds.
CvPrediction cv_prediction(const MixedResponseDataset& train,
                           const Hyperparameters& hyper,
                           const RunOptions& opts, std::uint64_t seed,
                           std::size_t run_index,
                           const std::vector<std::vector<std::size_t>>& folds) {
  CvPrediction acc;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> fit_rows;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f)
        fit_rows.insert(fit_rows.end(), folds[g].begin(), folds[g].end());
    const MixedResponseDataset sub = subset_rows(train, fit_rows);
    const MixedResponseDataset held = subset_rows(train, folds[f]);
    const PosteriorChain chain = run_chain(sub, hyper, opts, seed,
                                           streams::chain(run_index, f + 1));
    ReplicateMetrics m;
    {
      const std::vector<PredictionSummary> preds =
          posterior_predict_batch(chain, held.x, PredictMode::mean_path);
      const std::size_t n = held.n();
      Vector y(n), yhat(n);
      double s = 0.0;
      for (std::size_t j = 0; j < held.l(); ++j) {
        for (std::size_t i = 0; i < n; ++i) {
          y[i] = held.u(i, j);
          yhat[i] = preds[i].responses[j].median;
        }
        s += rmse(y, yhat);
      }
      m.rmse_continuous = held.l() ? s / static_cast<double>(held.l()) : 0.0;
      s = 0.0;
      for (std::size_t j = 0; j < held.m(); ++j) {
        for (std::size_t i = 0; i < n; ++i) {
          y[i] = held.z(i, j);
          yhat[i] = preds[i].responses[held.l() + j].median;
        }
        s += rmse(y, yhat);
      }
      m.rmse_count = held.m() ? s / static_cast<double>(held.m()) : 0.0;
      s = 0.0;
      for (std::size_t j = 0; j < held.k(); ++j) {
        for (std::size_t i = 0; i < n; ++i) {
          y[i] = held.w(i, j);
          yhat[i] = preds[i].responses[held.l() + held.m() + j].median;
        }
        s += misclassification(y, yhat);
      }
      m.misclass_rate = held.k() ? s / static_cast<double>(held.k()) : 0.0;
    }
    acc.rmse_continuous += m.rmse_continuous;
    acc.rmse_count += m.rmse_count;
    acc.misclass_rate += m.misclass_rate;
  }
  const double nf = static_cast<double>(folds.size());
  acc.rmse_continuous /= nf;
  acc.rmse_count /= nf;
  acc.misclass_rate /= nf;
  return acc;
}

int cmd_sweep(Invocation& inv) {
  const SimulationScenario sc = scenario_from(inv.cfg, inv.seed);
  Hyperparameters base = hyper_from(inv.cfg);
  const RunOptions opts = run_opts_from(inv.cfg);
  const std::size_t cv_folds = get_size(inv.cfg, "cv_folds", 0);
  inv.cfg.reject_unknown();
  if (cv_folds == 1) throw ConfigError("cv_folds: need 0 or at least 2");

  RngStream synth_rng(inv.seed, streams::synthesis(0));
  const SimulatedData sim = generate_dataset(sc, synth_rng);
  const double p = static_cast<double>(sc.p());
  const double q = static_cast<double>(sc.q());

  std::vector<std::vector<std::size_t>> folds;
  if (cv_folds >= 2) {
    const std::size_t n = sim.train.n();
    if (cv_folds > n) throw ConfigError("cv_folds exceeds training rows");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    RngStream shuffle_rng(inv.seed, streams::folds());
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j =
          static_cast<std::size_t>(shuffle_rng.next_double() *
                                   static_cast<double>(i + 1));
      std::swap(perm[i], perm[std::min(j, i)]);
    }
    folds.resize(cv_folds);
    for (std::size_t f = 0; f < cv_folds; ++f) {
      const std::size_t lo = f * n / cv_folds, hi = (f + 1) * n / cv_folds;
      folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(lo),
                      perm.begin() + static_cast<std::ptrdiff_t>(hi));
    }
  }

  std::string csv =
      "run,a1,a2,a3,a4,a5,a6,omega_alpha0,lambda,sigma0,sigma1,loss_b,"
      "loss_omega,fsl_b,fsl_omega,rmse_continuous,rmse_count,misclass_rate\n";
  json rows = json::array();
  for (std::size_t run = 0; run < 32; ++run) {
    Hyperparameters h = base;
    const bool f1 = run & 1, f2 = run & 2, f3 = run & 4, f4 = run & 8,
               f5 = run & 16;
    h.a1 = f1 ? 2.0 : 1.0;
    h.a2 = f1 ? 2.0 : 1.0;
    h.a3 = f2 ? p : 2.0 * p;
    h.a4 = p;
    h.a5 = q;
    h.a6 = f3 ? q : q * (q - 1.0) / 2.0;
    h.omega_alpha0 = f4 ? q : q / 2.0;
    h.lambda = q;
    h.sigma0 = f5 ? 0.2 : 0.1;
    h.sigma1 = f5 ? 2.0 : 3.0;

    const PosteriorChain chain =
        run_chain(sim.train, h, opts, inv.seed, streams::chain(run, 0));
    ReplicateMetrics m = evaluate_fit(chain, sim.test, sim.truth);
    if (cv_folds >= 2) {
      const CvPrediction cv =
          cv_prediction(sim.train, h, opts, inv.seed, run, folds);
      m.rmse_continuous = cv.rmse_continuous;
      m.rmse_count = cv.rmse_count;
      m.misclass_rate = cv.misclass_rate;
    }

    csv += std::to_string(run + 1);
    for (double v : {h.a1, h.a2, h.a3, h.a4, h.a5, h.a6, h.omega_alpha0,
                     h.lambda, h.sigma0, h.sigma1, m.loss_b, m.loss_omega,
                     m.fsl_b, m.fsl_omega, m.rmse_continuous, m.rmse_count,
                     m.misclass_rate})
      csv += ',' + format_double(v);
    csv += '\n';
    rows.push_back({{"run", run + 1},
                    {"a1", h.a1},
                    {"a2", h.a2},
                    {"a3", h.a3},
                    {"a4", h.a4},
                    {"a5", h.a5},
                    {"a6", h.a6},
                    {"omega_alpha0", h.omega_alpha0},
                    {"lambda", h.lambda},
                    {"sigma0", h.sigma0},
                    {"sigma1", h.sigma1},
                    {"loss_b", m.loss_b},
                    {"loss_omega", m.loss_omega},
                    {"fsl_b", m.fsl_b},
                    {"fsl_omega", m.fsl_omega},
                    {"rmse_continuous", m.rmse_continuous},
                    {"rmse_count", m.rmse_count},
                    {"misclass_rate", m.misclass_rate}});
    std::fprintf(stderr, "sweep run %zu/32 done\n", run + 1);
  }
  write_file_atomic(join_path(inv.out_dir, "sweep.csv"), csv);
  json out;
  out["runs"] = rows;
  out["cv_folds"] = cv_folds;
  write_file_atomic(join_path(inv.out_dir, "sweep.json"), out.dump(1) + "\n");
  std::printf("sweep: 32 runs -> %s/{sweep.csv,sweep.json}\n",
              inv.out_dir.c_str());
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{
      "Bayesian sparse multivariate regression for mixed continuous, count "
      "and binary responses"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::size_t chains = 1, threads = 1;
  app.add_option("--config", config_path, "flat key = value config file");
  auto* seed_opt =
      app.add_option("--seed", seed, "root RNG seed (overrides config)");
  app.add_option("--out", out_dir, "output directory");
  auto* chains_opt = app.add_option("--chains", chains, "number of chains");
  auto* threads_opt =
      app.add_option("--threads", threads, "worker threads for studies");

  CLI::App* sub_simulate =
      app.add_subcommand("simulate", "generate a synthetic dataset");
  CLI::App* sub_fit = app.add_subcommand("fit", "run the Gibbs sampler");
  CLI::App* sub_predict =
      app.add_subcommand("predict", "credible-interval predictions");
  CLI::App* sub_evaluate =
      app.add_subcommand("evaluate", "losses and errors against truth");
  CLI::App* sub_diagnose =
      app.add_subcommand("diagnose", "traces, autocorrelation, ESS");
  CLI::App* sub_study = app.add_subcommand(
      "replicate-study", "generate/fit/evaluate over many replicates");
  CLI::App* sub_sweep =
      app.add_subcommand("sweep", "32-run hyperparameter sensitivity grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fputs(error_json("config", e.what()).c_str(), stderr);
    return 2;
  }

  try {
    if (config_path.empty()) throw ConfigError("--config is required");
    Invocation inv;
    inv.cfg = RunConfig::load(config_path);
    inv.out_dir = out_dir;
    inv.seed = seed_opt->count() ? seed : inv.cfg.get_u64("seed", 0);
    inv.chains = chains_opt->count()
                     ? chains
                     : get_size(inv.cfg, "n_chains", 1);
    inv.threads = threads_opt->count()
                      ? threads
                      : get_size(inv.cfg, "threads", 1);
    if (inv.chains == 0) throw ConfigError("need at least one chain");

    if (sub_simulate->parsed()) return cmd_simulate(inv);
    if (sub_fit->parsed()) return cmd_fit(inv);
    if (sub_predict->parsed()) return cmd_predict(inv);
    if (sub_evaluate->parsed()) return cmd_evaluate(inv);
    if (sub_diagnose->parsed()) return cmd_diagnose(inv);
    if (sub_study->parsed()) return cmd_replicate_study(inv);
    if (sub_sweep->parsed()) return cmd_sweep(inv);
    throw ConfigError("no command selected");
  } catch (const ConfigError& e) {
    std::fputs(error_json("config", e.what()).c_str(), stderr);
    return 2;
  } catch (const IoError& e) {
    std::fputs(error_json("io", e.what()).c_str(), stderr);
    return 2;
  } catch (const DataError& e) {
    std::fputs(error_json("data", e.what()).c_str(), stderr);
    return 2;
  } catch (const CholeskyError& e) {
    std::fputs(error_json("numeric", e.what()).c_str(), stderr);
    return 1;
  } catch (const NumericError& e) {
    std::fputs(error_json("numeric", e.what()).c_str(), stderr);
    return 1;
  } catch (const std::exception& e) {
    std::fputs(error_json("internal", e.what()).c_str(), stderr);
    return 1;
  }
}

}  // namespace bsmr::cli
