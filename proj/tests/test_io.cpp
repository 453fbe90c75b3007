#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <string>

#include "bsmr/errors.hpp"
#include "bsmr/io.hpp"
#include "bsmr/sampler.hpp"
#include "bsmr/synthesis.hpp"

using namespace bsmr;

namespace {

struct TempDir {
  std::filesystem::path root;
  explicit TempDir(const std::string& name)
      : root(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root);
  }
  ~TempDir() { std::filesystem::remove_all(root); }
  std::string path(const std::string& leaf) const {
    return (root / leaf).string();
  }
};

MixedResponseDataset tiny_dataset() {
  MixedResponseDataset d;
  d.x = Matrix{{0.5, -1.25}, {2.0, 0.125}, {-0.75, 3.5}};
  d.u = Matrix{{1.5}, {-2.25}, {0.0}};
  d.z = Matrix{{3.0}, {0.0}, {17.0}};
  d.w = Matrix{{1.0}, {0.0}, {1.0}};
  d.groups = GroupStructure({1, 1});
  return d;
}

PosteriorChain tiny_chain(bool intercept) {
  RngStream rng(901, 1);
  PosteriorChain chain;
  chain.p = 2;
  chain.q = 2;
  chain.l = 1;
  chain.m = 0;
  chain.k = 1;
  chain.has_intercept = intercept;
  chain.group_sizes = {1, 1};
  chain.n_iter = 7;
  chain.n_burnin = 3;
  chain.seed = 901;
  chain.stream = 4;
  for (int s = 0; s < 4; ++s) {
    ChainDraw d;
    d.coef = Matrix(chain.coef_rows(), 2);
    for (std::size_t i = 0; i < d.coef.size(); ++i)
      d.coef.data()[i] = draw_normal(rng);
    d.omega = Matrix{{2.0, 0.25}, {0.25, 2.0}};
    d.edge = {static_cast<std::uint8_t>(s % 2)};
    d.included = {1, 0};
    d.pi1 = 0.25 + 0.01 * s;
    d.pi2 = 0.5;
    d.pi3 = 0.75;
    d.sigma_tau2 = 1.5;
    d.sigma2 = {0.125 * (s + 1)};
    chain.draws.push_back(std::move(d));
  }
  return chain;
}

}  // namespace

TEST_CASE("fnv1a64 matches published vectors") {
  CHECK(fnv1a64("", 0) == 14695981039346656037ull);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ull);
  CHECK(hex64(0) == "0000000000000000");
  CHECK(hex64(0xdeadbeefull) == "00000000deadbeef");
  CHECK(hex64(fnv1a64("foobar", 6)) == "85944171f73967e8");
}

TEST_CASE("format_double survives a parse round trip") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(-2.5) == "-2.5");
  const double v = 0.123456789012345678;
  CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("config parsing is strict") {
  RunConfig cfg = RunConfig::parse(
      "# leading comment\n"
      "alpha = 1.5   # trailing comment\n"
      "name= chain-a\n"
      "count =42\n"
      "flag = yes\n"
      "\n");
  CHECK(cfg.get_double("alpha") == 1.5);
  CHECK(cfg.get_string("name") == "chain-a");
  CHECK(cfg.get_int("count") == 42);
  CHECK(cfg.get_bool("flag", false));
  cfg.reject_unknown();

  SUBCASE("typed getter fallbacks") {
    RunConfig c = RunConfig::parse("present = 3\n");
    CHECK(c.get_double("absent", 2.5) == 2.5);
    CHECK(c.get_int("absent", -7) == -7);
    CHECK(c.get_u64("absent", 11) == 11);
    CHECK(c.get_bool("absent", true));
    CHECK(c.get_string("absent", "dflt") == "dflt");
    CHECK(c.get_u64("present", 0) == 3);
    c.reject_unknown();
  }
  SUBCASE("duplicate keys are rejected") {
    CHECK_THROWS_WITH_AS(RunConfig::parse("a = 1\na = 2\n"),
                         "duplicate config key: a", ConfigError);
  }
  SUBCASE("non key-value lines are rejected") {
    CHECK_THROWS_WITH_AS(RunConfig::parse("a = 1\njust words\n"),
                         "line 2: expected key = value", ConfigError);
    CHECK_THROWS_WITH_AS(RunConfig::parse("= 3\n"), "line 1: empty key",
                         ConfigError);
  }
  SUBCASE("unknown keys are named") {
    RunConfig c = RunConfig::parse("good = 1\nmystery = 2\n");
    CHECK(c.get_int("good") == 1);
    CHECK_THROWS_WITH_AS(c.reject_unknown(), "unknown config key(s): mystery",
                         ConfigError);
  }
  SUBCASE("value parse failures name the key") {
    RunConfig c = RunConfig::parse("alpha = abc\nseed = -3\nflag = maybe\n");
    CHECK_THROWS_WITH_AS(c.get_double("alpha"), "alpha: 'abc' is not a number",
                         ConfigError);
    CHECK_THROWS_WITH_AS(c.get_u64("seed", 0), "seed: '-3' is negative",
                         ConfigError);
    CHECK_THROWS_WITH_AS(c.get_bool("flag", false),
                         "flag: 'maybe' is not a boolean", ConfigError);
  }
  SUBCASE("missing required key") {
    RunConfig c = RunConfig::parse("a = 1\n");
    CHECK_THROWS_WITH_AS(c.get_string("b"), "missing required config key: b",
                         ConfigError);
  }
}

TEST_CASE("schema files round trip") {
  TempDir tmp("bsmr_io_schema");
  DatasetSchema s;
  s.l = 2;
  s.m = 1;
  s.k = 3;
  s.group_sizes = {4, 2, 4};
  const std::string path = tmp.path("schema.cfg");
  write_schema(path, s);
  CHECK(read_file(path) == "l = 2\nm = 1\nk = 3\ngroup_sizes = [4, 2, 4]\n");

  const DatasetSchema r = read_schema(path);
  CHECK(r.l == 2);
  CHECK(r.m == 1);
  CHECK(r.k == 3);
  CHECK(r.group_sizes == std::vector<std::size_t>{4, 2, 4});

  SUBCASE("bare lists parse too") {
    write_file_atomic(path, "l = 1\nm = 0\nk = 0\ngroup_sizes = 5,5\n");
    CHECK(read_schema(path).group_sizes == std::vector<std::size_t>{5, 5});
  }
  SUBCASE("zero group size is rejected") {
    write_file_atomic(path, "l = 1\nm = 0\nk = 0\ngroup_sizes = [3, 0]\n");
    CHECK_THROWS_WITH_AS(read_schema(path), "group_sizes: zero group size",
                         ConfigError);
  }
  SUBCASE("stray keys are rejected") {
    write_file_atomic(path,
                      "l = 1\nm = 0\nk = 0\ngroup_sizes = [2]\nbogus = 1\n");
    CHECK_THROWS_WITH_AS(read_schema(path), "unknown config key(s): bogus",
                         ConfigError);
  }
}

TEST_CASE("dataset csv round trip") {
  TempDir tmp("bsmr_io_dataset");
  const MixedResponseDataset d = tiny_dataset();
  const std::string csv = tmp.path("data.csv");
  const std::string schema = tmp.path("data.schema");
  save_dataset(csv, schema, d);

  const std::string text = read_file(csv);
  CHECK(text.substr(0, text.find('\n')) == "x1,x2,u1,z1,w1");

  const MixedResponseDataset r = load_dataset(csv, schema);
  CHECK(r.x == d.x);
  CHECK(r.u == d.u);
  CHECK(r.z == d.z);
  CHECK(r.w == d.w);
  CHECK(r.groups == d.groups);
}

TEST_CASE("dataset csv rejections carry coordinates") {
  TempDir tmp("bsmr_io_badcsv");
  const std::string csv = tmp.path("data.csv");
  const std::string schema = tmp.path("data.schema");
  write_file_atomic(schema, "l = 1\nm = 1\nk = 1\ngroup_sizes = [1]\n");

  SUBCASE("wrong header name") {
    write_file_atomic(csv, "x1,u1,zz,w1\n1,1,1,1\n");
    CHECK_THROWS_WITH_AS(load_dataset(csv, schema),
                         (csv + ": header column 3 is 'zz', expected 'z1'").c_str(),
                         DataError);
  }
  SUBCASE("wrong header width") {
    write_file_atomic(csv, "x1,u1,z1\n1,1,1\n");
    CHECK_THROWS_WITH_AS(
        load_dataset(csv, schema),
        (csv + ": header has 3 columns, expected 4").c_str(), DataError);
  }
  SUBCASE("short row") {
    write_file_atomic(csv, "x1,u1,z1,w1\n1,1,1\n");
    CHECK_THROWS_WITH_AS(load_dataset(csv, schema),
                         "row 1: has 3 cells, expected 4", DataError);
  }
  SUBCASE("unparsable cell") {
    write_file_atomic(csv, "x1,u1,z1,w1\n1,1,1,1\n1,oops,2,0\n");
    CHECK_THROWS_WITH_AS(load_dataset(csv, schema),
                         "row 2, column 2: 'oops' is not a number", DataError);
  }
  SUBCASE("binary cell out of range") {
    write_file_atomic(csv, "x1,u1,z1,w1\n1,1,1,2\n");
    CHECK_THROWS_WITH_AS(load_dataset(csv, schema),
                         "binary value is not 0 or 1 at w row 1, column 1",
                         DataError);
  }
  SUBCASE("fractional count") {
    write_file_atomic(csv, "x1,u1,z1,w1\n1,1,2.5,1\n");
    CHECK_THROWS_WITH_AS(load_dataset(csv, schema),
                         "count is not a non-negative integer at z row 1, column 1",
                         DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_dataset(tmp.path("absent.csv"), schema), IoError);
  }
}

TEST_CASE("predictor-only loading") {
  TempDir tmp("bsmr_io_pred");
  const std::string path = tmp.path("x.csv");
  write_file_atomic(path, "x1,x2,x3\n1,2,3\n4,5,6\n");
  const Matrix x = load_predictors(path);
  CHECK(x.rows() == 2);
  CHECK(x.cols() == 3);
  CHECK(x(1, 2) == 6.0);

  SUBCASE("full dataset csv works, responses ignored") {
    const MixedResponseDataset d = tiny_dataset();
    save_dataset(tmp.path("full.csv"), tmp.path("full.schema"), d);
    const Matrix got = load_predictors(tmp.path("full.csv"));
    CHECK(got == d.x);
  }
  SUBCASE("header must begin with x1") {
    write_file_atomic(path, "u1,x1\n1,2\n");
    CHECK_THROWS_WITH_AS(
        load_predictors(path),
        (path + ": header must start with predictor column x1").c_str(),
        DataError);
  }
}

TEST_CASE("ground truth persists everything except realized latents") {
  TempDir tmp("bsmr_io_truth");
  RngStream rng(902, 1);
  SimulationScenario sc = SimulationScenario::standard(1, 1);
  sc.n = 15;
  sc.n_test = 5;
  SimulatedData sim = generate_dataset(sc, rng);

  const std::string path = tmp.path("truth.json");
  save_truth(path, sc, sim.truth);
  const GroundTruth r = load_truth(path);
  CHECK(r.coeff == sim.truth.coeff);
  CHECK(r.omega == sim.truth.omega);
  CHECK(r.support == sim.truth.support);
  CHECK(r.xi_train.size() == 0);
  CHECK(r.xi_test.size() == 0);

  SUBCASE("malformed json is a data error") {
    write_file_atomic(path, "{not json");
    CHECK_THROWS_AS(load_truth(path), DataError);
  }
}

TEST_CASE("model state serialization is bit exact") {
  RngStream rng(903, 1);
  SimulationScenario sc = SimulationScenario::standard(2, 1);
  sc.n = 12;
  sc.n_test = 2;
  SimulatedData sim = generate_dataset(sc, rng);
  Hyperparameters h;
  GibbsSampler s(sim.train, h, RunOptions{}, RngStream(903, 2));
  for (int t = 0; t < 3; ++t) s.sweep();

  const std::string bytes = serialize_state(s.state());
  CHECK(bytes.rfind("BSMRSTATE v1\n", 0) == 0);
  const ModelState r = deserialize_state(bytes);
  CHECK(serialize_state(r) == bytes);
  CHECK(r.b_tilde == s.state().b_tilde);
  CHECK(r.omega == s.state().omega);
  CHECK(r.xi == s.state().xi);
  CHECK(r.edge_ind == s.state().edge_ind);
  CHECK(r.intercept == s.state().intercept);

  SUBCASE("bad magic") {
    CHECK_THROWS_AS(deserialize_state("BOGUS v9\n{}\n"), DataError);
  }
  SUBCASE("truncated payload") {
    CHECK_THROWS_AS(deserialize_state(bytes.substr(0, bytes.size() - 4)),
                    DataError);
  }
  SUBCASE("trailing bytes") {
    CHECK_THROWS_WITH_AS(deserialize_state(bytes + "xx"),
                         "state: trailing bytes after payload", DataError);
  }
}

TEST_CASE("chain serialization is bit exact for both intercept layouts") {
  for (bool intercept : {true, false}) {
    const PosteriorChain chain = tiny_chain(intercept);
    const std::string bytes = serialize_chain(chain);
    CHECK(bytes.rfind("BSMRCHAIN v1\n", 0) == 0);
    const PosteriorChain r = deserialize_chain(bytes);
    CHECK(serialize_chain(r) == bytes);
    CHECK(r.has_intercept == intercept);
    CHECK(r.group_sizes == chain.group_sizes);
    CHECK(r.seed == 901);
    CHECK(r.stream == 4);
    CHECK(r.draws.size() == 4);
    CHECK(r.draws[2].coef == chain.draws[2].coef);
    CHECK(r.draws[2].edge == chain.draws[2].edge);
    CHECK(r.draws[3].sigma2 == chain.draws[3].sigma2);
    CHECK(chain_digest(r) == chain_digest(chain));
  }
}

TEST_CASE("chain files survive a disk round trip") {
  TempDir tmp("bsmr_io_chain");
  const PosteriorChain chain = tiny_chain(true);
  const std::string path = tmp.path("runs/chain.bin");
  save_chain(path, chain);
  const PosteriorChain r = load_chain(path);
  CHECK(serialize_chain(r) == serialize_chain(chain));

  CHECK_THROWS_AS(load_chain(tmp.path("absent.bin")), IoError);
  write_file_atomic(path, "BSMRCHAIN v1\n{broken\n");
  CHECK_THROWS_AS(load_chain(path), DataError);
}

TEST_CASE("chain digest is a stable function of the content") {
  const PosteriorChain chain = tiny_chain(true);
  const std::string d1 = chain_digest(chain);
  CHECK(d1.size() == 16);
  CHECK(d1 == chain_digest(chain));

  PosteriorChain other = chain;
  other.draws[0].coef(0, 0) += 1e-12;
  CHECK(chain_digest(other) != d1);
}

TEST_CASE("chain csv export layout") {
  TempDir tmp("bsmr_io_csv");
  const PosteriorChain chain = tiny_chain(true);
  const std::string path = tmp.path("chain.csv");
  export_chain_csv(path, chain);
  const std::string text = read_file(path);
  CHECK(text.substr(0, text.find('\n')) ==
        "iter,pi1,pi2,pi3,sigma_tau2,sigma2[1],b0[1],b0[2],"
        "B[1,1],B[1,2],B[2,1],B[2,2],"
        "Omega[1,1],Omega[1,2],Omega[2,2]");
  // draws start right after burn-in
  CHECK(text.find("\n4,") != std::string::npos);
  CHECK(text.find("\n7,") != std::string::npos);
  std::size_t rows = 0;
  for (char c : text) rows += c == '\n';
  CHECK(rows == 5);

  SUBCASE("thinning keeps every k-th draw") {
    export_chain_csv(path, chain, 2);
    const std::string thinned = read_file(path);
    CHECK(thinned.find("\n4,") != std::string::npos);
    CHECK(thinned.find("\n5,") == std::string::npos);
    CHECK(thinned.find("\n6,") != std::string::npos);
    std::size_t t_rows = 0;
    for (char c : thinned) t_rows += c == '\n';
    CHECK(t_rows == 3);
  }
  SUBCASE("zero thin is rejected") {
    CHECK_THROWS_AS(export_chain_csv(path, chain, 0), ConfigError);
  }
}

TEST_CASE("atomic writes create directories and leave no temp file") {
  TempDir tmp("bsmr_io_atomic");
  const std::string path = tmp.path("a/b/c/out.txt");
  write_file_atomic(path, "payload");
  CHECK(read_file(path) == "payload");
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  write_file_atomic(path, "rewritten");
  CHECK(read_file(path) == "rewritten");
}

TEST_CASE("evaluation reports serialize without wall-clock fields") {
  EvaluationReport report;
  ReplicateMetrics m;
  m.loss_b = 0.25;
  m.loss_omega = 0.5;
  m.fsl_b = 0.1;
  m.fsl_omega = 0.2;
  m.rmse_continuous = 1.25;
  m.rmse_count = 10.0;
  m.misclass_rate = 0.05;
  m.seconds = 123.0;
  report.replicates = {m, m};
  report.mean = m;
  report.se = ReplicateMetrics{};

  const std::string j = report_json(report);
  CHECK(j.find("\"loss_b\"") != std::string::npos);
  CHECK(j.find("\"replicates\"") != std::string::npos);
  CHECK(j.find("\"mean\"") != std::string::npos);
  CHECK(j.find("\"se\"") != std::string::npos);
  CHECK(j.find("seconds") == std::string::npos);
  CHECK(report_json(report) == j);

  const std::string csv = report_csv(report);
  CHECK(csv.substr(0, csv.find('\n')) ==
        "replicate,loss_b,loss_omega,fsl_b,fsl_omega,rmse_continuous,"
        "rmse_count,misclass_rate");
  CHECK(csv.find("\n1,0.25,") != std::string::npos);
  CHECK(csv.find("\nmean,") != std::string::npos);
  CHECK(csv.find("\nse,") != std::string::npos);
  CHECK(csv.find("123") == std::string::npos);
}

TEST_CASE("error envelopes are single-line json") {
  CHECK(error_json("config", "boom") ==
        "{\"error\":\"config\",\"message\":\"boom\"}\n");
}
