#include "bsmr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>

#include "bsmr/errors.hpp"
#include "bsmr/io.hpp"

namespace bsmr {

namespace {

// Autocovariance at one lag, biased 1/N normalization.
double autocov(const Vector& x, double mean, std::size_t lag) {
  double acc = 0.0;
  for (std::size_t t = 0; t + lag < x.size(); ++t)
    acc += (x[t] - mean) * (x[t + lag] - mean);
  return acc / static_cast<double>(x.size());
}

double series_mean(const Vector& x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc / static_cast<double>(x.size());
}

// A constant series has zero variance even when rounding in the mean leaves
// c0 at a subnormal positive value.
bool all_equal(const Vector& x) {
  for (double v : x)
    if (v != x.front()) return false;
  return true;
}

}  // namespace

Vector acf(const Vector& series, std::size_t max_lag) {
  if (series.size() <= max_lag)
    throw ConfigError("series length must exceed max_lag");
  const double mean = series_mean(series);
  const double c0 = autocov(series, mean, 0);
  Vector out(max_lag + 1, 0.0);
  out[0] = 1.0;
  if (c0 <= 0.0 || all_equal(series)) return out;
  for (std::size_t lag = 1; lag <= max_lag; ++lag)
    out[lag] = autocov(series, mean, lag) / c0;
  return out;
}

EssResult effective_sample_size(const Vector& series) {
  const std::size_t n = series.size();
  if (n < 4) return {1.0, true};
  const double mean = series_mean(series);
  const double c0 = autocov(series, mean, 0);
  if (c0 <= 0.0 || all_equal(series)) return {1.0, true};

  // Sum paired correlations rho_{2m} + rho_{2m+1} while they stay positive,
  // capping each pair at the previous one to enforce monotonicity.
  double tau = 1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0;; ++m) {
    const std::size_t lag1 = 2 * m + 1, lag2 = 2 * m + 2;
    if (lag2 + 1 >= n) break;
    double pair = (autocov(series, mean, lag1) +
                   autocov(series, mean, lag2)) / c0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  const double ess = static_cast<double>(n) / tau;
  return {std::max(ess, 1.0), false};
}

std::vector<std::string> parse_trace_ids(const std::string& csv_list) {
  std::vector<std::string> ids;
  std::string cur;
  int depth = 0;
  for (char c : csv_list) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (c == ',' && depth == 0) {
      ids.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) ids.push_back(cur);
  for (std::string& id : ids) {
    const std::size_t b = id.find_first_not_of(" \t");
    const std::size_t e = id.find_last_not_of(" \t");
    id = b == std::string::npos ? "" : id.substr(b, e - b + 1);
  }
  ids.erase(std::remove(ids.begin(), ids.end(), std::string{}), ids.end());
  return ids;
}

namespace {

// Resolves a parameter id to an accessor over draws; throws ConfigError on
// unknown or out-of-range ids.
std::function<double(const ChainDraw&)> resolve_id(const PosteriorChain& chain,
                                                   const std::string& id) {
  auto bad = [&](const std::string& why) {
    return ConfigError("trace id '" + id + "': " + why);
  };
  auto indices = [&](std::size_t offset) {
    // Parses "[i]" or "[i,j]" starting at offset, 1-based.
    if (offset >= id.size() || id[offset] != '[' || id.back() != ']')
      throw bad("expected [..] index");
    const std::string inner = id.substr(offset + 1, id.size() - offset - 2);
    std::vector<std::size_t> out;
    for (const std::string& tok : parse_trace_ids(inner)) {
      char* end = nullptr;
      const long v = std::strtol(tok.c_str(), &end, 10);
      if (end != tok.c_str() + tok.size() || v < 1)
        throw bad("'" + tok + "' is not a positive index");
      out.push_back(static_cast<std::size_t>(v));
    }
    return out;
  };

  if (id == "pi1") return [](const ChainDraw& d) { return d.pi1; };
  if (id == "pi2") return [](const ChainDraw& d) { return d.pi2; };
  if (id == "pi3") return [](const ChainDraw& d) { return d.pi3; };
  if (id == "sigma_tau2")
    return [](const ChainDraw& d) { return d.sigma_tau2; };

  if (id.rfind("sigma2", 0) == 0) {
    const auto ix = indices(6);
    if (ix.size() != 1 || ix[0] > chain.l) throw bad("index out of range");
    const std::size_t j = ix[0] - 1;
    return [j](const ChainDraw& d) { return d.sigma2[j]; };
  }
  if (id.rfind("b0", 0) == 0) {
    if (!chain.has_intercept) throw bad("model has no intercept");
    const auto ix = indices(2);
    if (ix.size() != 1 || ix[0] > chain.q) throw bad("index out of range");
    const std::size_t c = ix[0] - 1;
    return [c](const ChainDraw& d) { return d.coef(0, c); };
  }
  if (id.rfind("Omega", 0) == 0) {
    const auto ix = indices(5);
    if (ix.size() != 2 || ix[0] > chain.q || ix[1] > chain.q)
      throw bad("index out of range");
    const std::size_t i = ix[0] - 1, j = ix[1] - 1;
    return [i, j](const ChainDraw& d) { return d.omega(i, j); };
  }
  if (id.rfind("B", 0) == 0) {
    const auto ix = indices(1);
    if (ix.size() != 2 || ix[0] > chain.p || ix[1] > chain.q)
      throw bad("index out of range");
    const std::size_t r = ix[0] - 1 + chain.intercept_offset();
    const std::size_t c = ix[1] - 1;
    return [r, c](const ChainDraw& d) { return d.coef(r, c); };
  }
  throw bad("unknown parameter");
}

}  // namespace

std::vector<std::string> default_trace_ids(const PosteriorChain& chain,
                                           std::size_t max_coef_entries) {
  std::vector<std::string> ids = {"pi1", "pi2", "pi3", "sigma_tau2"};
  for (std::size_t j = 1; j <= chain.l; ++j)
    ids.push_back("sigma2[" + std::to_string(j) + "]");
  if (chain.has_intercept) ids.push_back("b0[1]");

  const Matrix med = chain.median_coef();
  std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> ranked;
  for (std::size_t r = 0; r < chain.p; ++r)
    for (std::size_t c = 0; c < chain.q; ++c)
      ranked.push_back({std::fabs(med(r, c)), {r, c}});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t t = 0; t < std::min(max_coef_entries, ranked.size()); ++t)
    ids.push_back("B[" + std::to_string(ranked[t].second.first + 1) + "," +
                  std::to_string(ranked[t].second.second + 1) + "]");

  const Matrix omed = chain.median_omega();
  ids.push_back("Omega[1,1]");
  double best = -1.0;
  std::size_t bi = 0, bj = 1;
  for (std::size_t i = 0; i < chain.q; ++i)
    for (std::size_t j = i + 1; j < chain.q; ++j)
      if (std::fabs(omed(i, j)) > best) {
        best = std::fabs(omed(i, j));
        bi = i;
        bj = j;
      }
  if (chain.q > 1)
    ids.push_back("Omega[" + std::to_string(bi + 1) + "," +
                  std::to_string(bj + 1) + "]");
  return ids;
}

std::vector<TraceSeries> extract_traces(const PosteriorChain& chain,
                                        const std::vector<std::string>& ids) {
  if (chain.draws.empty()) throw ConfigError("chain holds no retained draws");
  std::vector<TraceSeries> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    const auto get = resolve_id(chain, id);
    TraceSeries ts;
    ts.id = id;
    ts.values.resize(chain.draws.size());
    for (std::size_t s = 0; s < chain.draws.size(); ++s)
      ts.values[s] = get(chain.draws[s]);
    out.push_back(std::move(ts));
  }
  return out;
}

std::string format_traces_csv(const PosteriorChain& chain,
                              const std::vector<TraceSeries>& traces) {
  std::string out = "iter";
  for (const TraceSeries& t : traces) out += ',' + t.id;
  out += '\n';
  const std::size_t n = traces.empty() ? 0 : traces.front().values.size();
  for (const TraceSeries& t : traces)
    if (t.values.size() != n)
      throw DataError("trace series lengths differ");
  for (std::size_t s = 0; s < n; ++s) {
    out += std::to_string(chain.n_burnin + s + 1);
    for (const TraceSeries& t : traces) out += ',' + format_double(t.values[s]);
    out += '\n';
  }
  return out;
}

void export_traces(const PosteriorChain& chain,
                   const std::vector<std::string>& ids,
                   const std::string& path) {
  write_file_atomic(path, format_traces_csv(chain, extract_traces(chain, ids)));
}

std::vector<TraceSeries> import_traces(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  if (lines.empty()) throw DataError(path + ": empty trace file");

  const std::vector<std::string> header = parse_trace_ids(lines[0]);
  if (header.empty() || header[0] != "iter")
    throw DataError(path + ": first column must be iter");
  std::vector<TraceSeries> out(header.size() - 1);
  for (std::size_t c = 1; c < header.size(); ++c) out[c - 1].id = header[c];
  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    const std::vector<std::string> cells = parse_trace_ids(lines[r]);
    if (cells.size() != header.size())
      throw DataError(path + ": row " + std::to_string(r) +
                      " has the wrong cell count");
    for (std::size_t c = 1; c < cells.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (end != cells[c].c_str() + cells[c].size())
        throw DataError(path + ": row " + std::to_string(r) +
                        ": bad number '" + cells[c] + "'");
      out[c - 1].values.push_back(v);
    }
  }
  return out;
}

}  // namespace bsmr
