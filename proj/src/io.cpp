#include "bsmr/io.hpp"

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "bsmr/errors.hpp"

namespace bsmr {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string out((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on " + path);
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec)
      throw IoError("cannot create directory " +
                    target.parent_path().string() + ": " + ec.message());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed on " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec)
    throw IoError("cannot rename " + tmp.string() + " to " + path + ": " +
                  ec.message());
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError(what + ": empty value");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw ConfigError(what + ": '" + t + "' is not a number");
  return v;
}

std::int64_t parse_int(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError(what + ": empty value");
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size())
    throw ConfigError(what + ": '" + t + "' is not an integer");
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError(what + ": empty value");
  if (t[0] == '-') throw ConfigError(what + ": '" + t + "' is negative");
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size())
    throw ConfigError(what + ": '" + t + "' is not an integer");
  return v;
}

// Appends the raw bytes of a trivially copyable value.
template <typename T>
void put(std::string& buf, const T& v) {
  const char* raw = reinterpret_cast<const char*>(&v);
  buf.append(raw, sizeof(T));
}

void put_doubles(std::string& buf, const double* data, std::size_t count) {
  if (count)
    buf.append(reinterpret_cast<const char*>(data), count * sizeof(double));
}

void put_bytes(std::string& buf, const std::uint8_t* data, std::size_t count) {
  if (count) buf.append(reinterpret_cast<const char*>(data), count);
}

struct ByteReader {
  const std::string& bytes;
  std::size_t pos = 0;

  void need(std::size_t count, const char* what) const {
    if (pos + count > bytes.size())
      throw DataError(std::string("truncated payload while reading ") + what);
  }
  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  void get_doubles(double* out, std::size_t count, const char* what) {
    if (!count) return;
    need(count * sizeof(double), what);
    std::memcpy(out, bytes.data() + pos, count * sizeof(double));
    pos += count * sizeof(double);
  }
  void get_bytes(std::uint8_t* out, std::size_t count, const char* what) {
    if (!count) return;
    need(count, what);
    std::memcpy(out, bytes.data() + pos, count);
    pos += count;
  }
  void expect_end(const char* what) const {
    if (pos != bytes.size())
      throw DataError(std::string(what) + ": trailing bytes after payload");
  }
};

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array())
    throw DataError(what + ": expected an array of arrays");
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != m.cols())
      throw DataError(what + ": ragged rows");
    for (std::size_t j = 0; j < m.cols(); ++j)
      m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  const std::vector<std::string> lines = split(text, '\n');
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    std::string line = lines[ln];
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(ln + 1) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(ln + 1) + ": empty key");
    if (!seen.insert(key).second)
      throw ConfigError("duplicate config key: " + key);
    cfg.entries_.emplace_back(key, value);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  return parse(read_file(path));
}

bool RunConfig::has(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return true;
  return false;
}

const std::string& RunConfig::lookup(const std::string& key) {
  for (const auto& [k, v] : entries_)
    if (k == key) {
      consumed_.insert(key);
      return v;
    }
  throw ConfigError("missing required config key: " + key);
}

std::string RunConfig::get_string(const std::string& key) {
  return lookup(key);
}

std::string RunConfig::get_string(const std::string& key,
                                  const std::string& fallback) {
  return has(key) ? lookup(key) : fallback;
}

double RunConfig::get_double(const std::string& key) {
  return parse_double(lookup(key), key);
}

double RunConfig::get_double(const std::string& key, double fallback) {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t RunConfig::get_int(const std::string& key) {
  return parse_int(lookup(key), key);
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t RunConfig::get_u64(const std::string& key,
                                 std::uint64_t fallback) {
  return has(key) ? parse_u64(lookup(key), key) : fallback;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const std::string v = lookup(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

void RunConfig::reject_unknown() const {
  std::string bad;
  for (const auto& [k, v] : entries_)
    if (!consumed_.count(k)) bad += bad.empty() ? k : ", " + k;
  if (!bad.empty()) throw ConfigError("unknown config key(s): " + bad);
}

DatasetSchema read_schema(const std::string& path) {
  RunConfig cfg = RunConfig::load(path);
  DatasetSchema s;
  s.l = static_cast<std::size_t>(parse_u64(cfg.get_string("l"), "l"));
  s.m = static_cast<std::size_t>(parse_u64(cfg.get_string("m"), "m"));
  s.k = static_cast<std::size_t>(parse_u64(cfg.get_string("k"), "k"));
  std::string sizes = trim(cfg.get_string("group_sizes"));
  if (!sizes.empty() && sizes.front() == '[') sizes.erase(0, 1);
  if (!sizes.empty() && sizes.back() == ']') sizes.pop_back();
  for (const std::string& tok : split(sizes, ',')) {
    const std::uint64_t v = parse_u64(tok, "group_sizes");
    if (v == 0) throw ConfigError("group_sizes: zero group size");
    s.group_sizes.push_back(static_cast<std::size_t>(v));
  }
  if (s.group_sizes.empty())
    throw ConfigError("group_sizes: at least one group required");
  cfg.reject_unknown();
  return s;
}

void write_schema(const std::string& path, const DatasetSchema& schema) {
  std::string out;
  out += "l = " + std::to_string(schema.l) + "\n";
  out += "m = " + std::to_string(schema.m) + "\n";
  out += "k = " + std::to_string(schema.k) + "\n";
  out += "group_sizes = [";
  for (std::size_t g = 0; g < schema.group_sizes.size(); ++g) {
    if (g) out += ", ";
    out += std::to_string(schema.group_sizes[g]);
  }
  out += "]\n";
  write_file_atomic(path, out);
}

namespace {

std::vector<std::string> expected_header(const DatasetSchema& s,
                                         std::size_t p) {
  std::vector<std::string> names;
  for (std::size_t j = 1; j <= p; ++j) names.push_back("x" + std::to_string(j));
  for (std::size_t j = 1; j <= s.l; ++j)
    names.push_back("u" + std::to_string(j));
  for (std::size_t j = 1; j <= s.m; ++j)
    names.push_back("z" + std::to_string(j));
  for (std::size_t j = 1; j <= s.k; ++j)
    names.push_back("w" + std::to_string(j));
  return names;
}

double parse_cell(const std::string& tok, std::size_t row1,
                  std::size_t col1) {
  const std::string t = trim(tok);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw DataError("row " + std::to_string(row1) + ", column " +
                    std::to_string(col1) + ": '" + t + "' is not a number");
  return v;
}

}  // namespace

MixedResponseDataset load_dataset(const std::string& csv_path,
                                  const std::string& schema_path) {
  const DatasetSchema schema = read_schema(schema_path);
  std::size_t p = 0;
  for (std::size_t g : schema.group_sizes) p += g;

  const std::string text = read_file(csv_path);
  std::vector<std::string> lines = split(text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw DataError(csv_path + ": empty file");

  const std::vector<std::string> names = expected_header(schema, p);
  const std::vector<std::string> header = split(trim(lines[0]), ',');
  if (header.size() != names.size())
    throw DataError(csv_path + ": header has " +
                    std::to_string(header.size()) + " columns, expected " +
                    std::to_string(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j)
    if (trim(header[j]) != names[j])
      throw DataError(csv_path + ": header column " + std::to_string(j + 1) +
                      " is '" + trim(header[j]) + "', expected '" + names[j] +
                      "'");

  const std::size_t n = lines.size() - 1;
  if (n == 0) throw DataError(csv_path + ": no data rows");

  MixedResponseDataset ds;
  ds.x = Matrix(n, p);
  ds.u = Matrix(n, schema.l);
  ds.z = Matrix(n, schema.m);
  ds.w = Matrix(n, schema.k);
  ds.groups = GroupStructure(schema.group_sizes);

  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<std::string> cells = split(trim(lines[i + 1]), ',');
    if (cells.size() != names.size())
      throw DataError("row " + std::to_string(i + 1) + ": has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(names.size()));
    std::size_t c = 0;
    for (std::size_t j = 0; j < p; ++j, ++c)
      ds.x(i, j) = parse_cell(cells[c], i + 1, c + 1);
    for (std::size_t j = 0; j < schema.l; ++j, ++c)
      ds.u(i, j) = parse_cell(cells[c], i + 1, c + 1);
    for (std::size_t j = 0; j < schema.m; ++j, ++c)
      ds.z(i, j) = parse_cell(cells[c], i + 1, c + 1);
    for (std::size_t j = 0; j < schema.k; ++j, ++c)
      ds.w(i, j) = parse_cell(cells[c], i + 1, c + 1);
  }
  ds.validate();
  return ds;
}

void save_dataset(const std::string& csv_path, const std::string& schema_path,
                  const MixedResponseDataset& data) {
  DatasetSchema schema;
  schema.l = data.l();
  schema.m = data.m();
  schema.k = data.k();
  schema.group_sizes = data.groups.sizes();
  write_schema(schema_path, schema);

  std::string out;
  const std::vector<std::string> names = expected_header(schema, data.p());
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j) out += ',';
    out += names[j];
  }
  out += '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.p(); ++j) {
      if (j) out += ',';
      out += format_double(data.x(i, j));
    }
    for (std::size_t j = 0; j < data.l(); ++j)
      out += ',' + format_double(data.u(i, j));
    for (std::size_t j = 0; j < data.m(); ++j)
      out += ',' + format_double(data.z(i, j));
    for (std::size_t j = 0; j < data.k(); ++j)
      out += ',' + format_double(data.w(i, j));
    out += '\n';
  }
  write_file_atomic(csv_path, out);
}

Matrix load_predictors(const std::string& csv_path) {
  const std::string text = read_file(csv_path);
  std::vector<std::string> lines = split(text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw DataError(csv_path + ": empty file");

  const std::vector<std::string> header = split(trim(lines[0]), ',');
  std::size_t p = 0;
  while (p < header.size() &&
         trim(header[p]) == "x" + std::to_string(p + 1))
    ++p;
  if (p == 0)
    throw DataError(csv_path + ": header must start with predictor column x1");

  const std::size_t n = lines.size() - 1;
  if (n == 0) throw DataError(csv_path + ": no data rows");
  Matrix x(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<std::string> cells = split(trim(lines[i + 1]), ',');
    if (cells.size() < p)
      throw DataError("row " + std::to_string(i + 1) + ": has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(p) + " predictors");
    for (std::size_t j = 0; j < p; ++j)
      x(i, j) = parse_cell(cells[j], i + 1, j + 1);
  }
  return x;
}

void save_truth(const std::string& path, const SimulationScenario& scenario,
                const GroundTruth& truth) {
  json j;
  j["scenario"] = {{"omega_id", scenario.omega_id},
                   {"coeff_id", scenario.coeff_id},
                   {"n", scenario.n},
                   {"n_test", scenario.n_test},
                   {"l", scenario.l},
                   {"m", scenario.m},
                   {"k", scenario.k},
                   {"n_blocks", scenario.n_blocks},
                   {"sigma_x", scenario.sigma_x},
                   {"coeff_low", scenario.coeff_low},
                   {"coeff_high", scenario.coeff_high},
                   {"count_cap", scenario.count_cap},
                   {"seed", scenario.seed}};
  j["coeff"] = matrix_to_json(truth.coeff);
  j["omega"] = matrix_to_json(truth.omega);
  j["support"] = matrix_to_json(truth.support);
  write_file_atomic(path, j.dump(1) + "\n");
}

GroundTruth load_truth(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  GroundTruth truth;
  try {
    truth.coeff = matrix_from_json(j.at("coeff"), "coeff");
    truth.omega = matrix_from_json(j.at("omega"), "omega");
    truth.support = matrix_from_json(j.at("support"), "support");
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return truth;
}

namespace {
constexpr char kStateMagic[] = "BSMRSTATE v1\n";
constexpr char kChainMagic[] = "BSMRCHAIN v1\n";

// Splits "<magic><json header line>\n<payload>" and parses the header.
json take_header(const std::string& bytes, const char* magic,
                 std::size_t* payload_start) {
  const std::size_t magic_len = std::strlen(magic);
  if (bytes.size() < magic_len || bytes.compare(0, magic_len, magic) != 0)
    throw DataError("bad magic, not a " +
                    std::string(magic, magic_len - 1) + " file");
  const std::size_t nl = bytes.find('\n', magic_len);
  if (nl == std::string::npos) throw DataError("missing header line");
  *payload_start = nl + 1;
  try {
    return json::parse(bytes.substr(magic_len, nl - magic_len));
  } catch (const json::exception& e) {
    throw DataError(std::string("bad header: ") + e.what());
  }
}
}  // namespace

std::string serialize_state(const ModelState& state) {
  json h;
  h["p"] = state.b_tilde.rows();
  h["q"] = state.b_tilde.cols();
  h["n"] = state.xi.rows();
  h["groups"] = state.group_included.size();
  h["l"] = state.sigma2.size();
  h["has_intercept"] = !state.intercept.empty();
  h["fields"] =
      "b_tilde,tau,group_included,intercept,omega,edge_ind,pi,sigma_tau2,"
      "sigma2,xi";

  std::string out = kStateMagic;
  out += h.dump();
  out += '\n';
  put_doubles(out, state.b_tilde.data(), state.b_tilde.rows() * state.b_tilde.cols());
  put_doubles(out, state.tau.data(), state.tau.size());
  put_bytes(out, state.group_included.data(), state.group_included.size());
  put_doubles(out, state.intercept.data(), state.intercept.size());
  put_doubles(out, state.omega.data(), state.omega.rows() * state.omega.cols());
  put_bytes(out, state.edge_ind.data(), state.edge_ind.size());
  put(out, state.pi1);
  put(out, state.pi2);
  put(out, state.pi3);
  put(out, state.sigma_tau2);
  put_doubles(out, state.sigma2.data(), state.sigma2.size());
  put_doubles(out, state.xi.data(), state.xi.rows() * state.xi.cols());
  return out;
}

ModelState deserialize_state(const std::string& bytes) {
  std::size_t start = 0;
  const json h = take_header(bytes, kStateMagic, &start);
  const std::string payload = bytes.substr(start);
  ByteReader r{payload};

  const auto p = h.at("p").get<std::size_t>();
  const auto q = h.at("q").get<std::size_t>();
  const auto n = h.at("n").get<std::size_t>();
  const auto groups = h.at("groups").get<std::size_t>();
  const auto l = h.at("l").get<std::size_t>();
  const bool has_intercept = h.at("has_intercept").get<bool>();

  ModelState s;
  s.b_tilde = Matrix(p, q);
  r.get_doubles(s.b_tilde.data(), p * q, "b_tilde");
  s.tau.resize(p);
  r.get_doubles(s.tau.data(), p, "tau");
  s.group_included.resize(groups);
  r.get_bytes(s.group_included.data(), groups, "group_included");
  if (has_intercept) {
    s.intercept.resize(q);
    r.get_doubles(s.intercept.data(), q, "intercept");
  }
  s.omega = Matrix(q, q);
  r.get_doubles(s.omega.data(), q * q, "omega");
  s.edge_ind.resize(q * (q - 1) / 2);
  r.get_bytes(s.edge_ind.data(), s.edge_ind.size(), "edge_ind");
  s.pi1 = r.get<double>("pi1");
  s.pi2 = r.get<double>("pi2");
  s.pi3 = r.get<double>("pi3");
  s.sigma_tau2 = r.get<double>("sigma_tau2");
  s.sigma2.resize(l);
  r.get_doubles(s.sigma2.data(), l, "sigma2");
  s.xi = Matrix(n, q);
  r.get_doubles(s.xi.data(), n * q, "xi");
  r.expect_end("state");
  return s;
}

std::string serialize_chain(const PosteriorChain& chain) {
  json h;
  h["p"] = chain.p;
  h["q"] = chain.q;
  h["l"] = chain.l;
  h["m"] = chain.m;
  h["k"] = chain.k;
  h["has_intercept"] = chain.has_intercept;
  h["group_sizes"] = chain.group_sizes;
  h["n_iter"] = chain.n_iter;
  h["n_burnin"] = chain.n_burnin;
  h["seed"] = chain.seed;
  h["stream"] = chain.stream;
  h["truncated"] = chain.truncated;
  h["truncated_at"] = chain.truncated_at;
  h["n_draws"] = chain.draws.size();
  h["fields"] = "coef,omega,edge,included,pi1,pi2,pi3,sigma_tau2,sigma2";

  std::string out = kChainMagic;
  out += h.dump();
  out += '\n';
  const std::size_t rows = chain.coef_rows();
  const std::size_t edges = chain.q * (chain.q - 1) / 2;
  for (const ChainDraw& d : chain.draws) {
    put_doubles(out, d.coef.data(), rows * chain.q);
    put_doubles(out, d.omega.data(), chain.q * chain.q);
    put_bytes(out, d.edge.data(), edges);
    put_bytes(out, d.included.data(), d.included.size());
    put(out, d.pi1);
    put(out, d.pi2);
    put(out, d.pi3);
    put(out, d.sigma_tau2);
    put_doubles(out, d.sigma2.data(), d.sigma2.size());
  }
  return out;
}

PosteriorChain deserialize_chain(const std::string& bytes) {
  std::size_t start = 0;
  const json h = take_header(bytes, kChainMagic, &start);
  const std::string payload = bytes.substr(start);
  ByteReader r{payload};

  PosteriorChain chain;
  chain.p = h.at("p").get<std::size_t>();
  chain.q = h.at("q").get<std::size_t>();
  chain.l = h.at("l").get<std::size_t>();
  chain.m = h.at("m").get<std::size_t>();
  chain.k = h.at("k").get<std::size_t>();
  chain.has_intercept = h.at("has_intercept").get<bool>();
  chain.group_sizes = h.at("group_sizes").get<std::vector<std::size_t>>();
  chain.n_iter = h.at("n_iter").get<std::size_t>();
  chain.n_burnin = h.at("n_burnin").get<std::size_t>();
  chain.seed = h.at("seed").get<std::uint64_t>();
  chain.stream = h.at("stream").get<std::uint64_t>();
  chain.truncated = h.at("truncated").get<bool>();
  chain.truncated_at = h.at("truncated_at").get<std::size_t>();
  const auto n_draws = h.at("n_draws").get<std::size_t>();

  const std::size_t rows = chain.coef_rows();
  const std::size_t edges = chain.q * (chain.q - 1) / 2;
  const std::size_t n_groups = chain.group_sizes.size();
  chain.draws.resize(n_draws);
  for (ChainDraw& d : chain.draws) {
    d.coef = Matrix(rows, chain.q);
    r.get_doubles(d.coef.data(), rows * chain.q, "coef");
    d.omega = Matrix(chain.q, chain.q);
    r.get_doubles(d.omega.data(), chain.q * chain.q, "omega");
    d.edge.resize(edges);
    r.get_bytes(d.edge.data(), edges, "edge");
    d.included.resize(n_groups);
    r.get_bytes(d.included.data(), n_groups, "included");
    d.pi1 = r.get<double>("pi1");
    d.pi2 = r.get<double>("pi2");
    d.pi3 = r.get<double>("pi3");
    d.sigma_tau2 = r.get<double>("sigma_tau2");
    d.sigma2.resize(chain.l);
    r.get_doubles(d.sigma2.data(), chain.l, "sigma2");
  }
  r.expect_end("chain");
  return chain;
}

void save_chain(const std::string& path, const PosteriorChain& chain) {
  write_file_atomic(path, serialize_chain(chain));
}

PosteriorChain load_chain(const std::string& path) {
  try {
    return deserialize_chain(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string chain_digest(const PosteriorChain& chain) {
  const std::string bytes = serialize_chain(chain);
  return hex64(fnv1a64(bytes.data(), bytes.size()));
}

void export_chain_csv(const std::string& path, const PosteriorChain& chain,
                      std::size_t thin) {
  if (thin == 0) throw ConfigError("thin must be positive");
  const std::size_t off = chain.intercept_offset();

  std::string out = "iter";
  out += ",pi1,pi2,pi3,sigma_tau2";
  for (std::size_t j = 1; j <= chain.l; ++j)
    out += ",sigma2[" + std::to_string(j) + "]";
  if (chain.has_intercept)
    for (std::size_t c = 1; c <= chain.q; ++c)
      out += ",b0[" + std::to_string(c) + "]";
  for (std::size_t rr = 1; rr <= chain.p; ++rr)
    for (std::size_t c = 1; c <= chain.q; ++c)
      out += ",B[" + std::to_string(rr) + "," + std::to_string(c) + "]";
  for (std::size_t i = 1; i <= chain.q; ++i)
    for (std::size_t j = i; j <= chain.q; ++j)
      out += ",Omega[" + std::to_string(i) + "," + std::to_string(j) + "]";
  out += '\n';

  for (std::size_t s = 0; s < chain.draws.size(); s += thin) {
    const ChainDraw& d = chain.draws[s];
    out += std::to_string(chain.n_burnin + s + 1);
    out += ',' + format_double(d.pi1);
    out += ',' + format_double(d.pi2);
    out += ',' + format_double(d.pi3);
    out += ',' + format_double(d.sigma_tau2);
    for (std::size_t j = 0; j < chain.l; ++j)
      out += ',' + format_double(d.sigma2[j]);
    if (chain.has_intercept)
      for (std::size_t c = 0; c < chain.q; ++c)
        out += ',' + format_double(d.coef(0, c));
    for (std::size_t rr = 0; rr < chain.p; ++rr)
      for (std::size_t c = 0; c < chain.q; ++c)
        out += ',' + format_double(d.coef(rr + off, c));
    for (std::size_t i = 0; i < chain.q; ++i)
      for (std::size_t j = i; j < chain.q; ++j)
        out += ',' + format_double(d.omega(i, j));
    out += '\n';
  }
  write_file_atomic(path, out);
}

namespace {
// Wall-clock seconds stay in memory only; serialized reports must be
// byte-identical across reruns of the same seed.
json metrics_to_json(const ReplicateMetrics& m) {
  return json{{"loss_b", m.loss_b},
              {"loss_omega", m.loss_omega},
              {"fsl_b", m.fsl_b},
              {"fsl_omega", m.fsl_omega},
              {"rmse_continuous", m.rmse_continuous},
              {"rmse_count", m.rmse_count},
              {"misclass_rate", m.misclass_rate}};
}
}  // namespace

std::string report_json(const EvaluationReport& report) {
  json j;
  j["replicates"] = json::array();
  for (const ReplicateMetrics& r : report.replicates)
    j["replicates"].push_back(metrics_to_json(r));
  j["mean"] = metrics_to_json(report.mean);
  j["se"] = metrics_to_json(report.se);
  return j.dump(1) + "\n";
}

std::string report_csv(const EvaluationReport& report) {
  std::string out =
      "replicate,loss_b,loss_omega,fsl_b,fsl_omega,rmse_continuous,"
      "rmse_count,misclass_rate\n";
  auto row = [&](const std::string& label, const ReplicateMetrics& m) {
    out += label;
    out += ',' + format_double(m.loss_b);
    out += ',' + format_double(m.loss_omega);
    out += ',' + format_double(m.fsl_b);
    out += ',' + format_double(m.fsl_omega);
    out += ',' + format_double(m.rmse_continuous);
    out += ',' + format_double(m.rmse_count);
    out += ',' + format_double(m.misclass_rate);
    out += '\n';
  };
  for (std::size_t i = 0; i < report.replicates.size(); ++i)
    row(std::to_string(i + 1), report.replicates[i]);
  row("mean", report.mean);
  row("se", report.se);
  return out;
}

std::string error_json(const std::string& kind, const std::string& message) {
  return json{{"error", kind}, {"message", message}}.dump() + "\n";
}

}  // namespace bsmr
