#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "bsmr/errors.hpp"
#include "bsmr/synthesis.hpp"

using namespace bsmr;

TEST_CASE("geometric-decay precision, q=3") {
  RngStream rng(31, 1);
  SpdMatrix o = make_omega(3, 3, 1, rng);
  const Matrix expect{{1.0, 0.5, 0.25}, {0.5, 1.0, 0.5}, {0.25, 0.5, 1.0}};
  CHECK(max_abs_diff(o.mat(), expect) == 0.0);
}

TEST_CASE("banded precision, q=6") {
  RngStream rng(31, 2);
  SpdMatrix o = make_omega(1, 6, 1, rng);
  CHECK(o(0, 0) == 1.0);
  CHECK(o(0, 1) == 0.5);
  CHECK(o(0, 2) == 0.3);
  CHECK(o(0, 3) == 0.1);
  CHECK(o(0, 4) == 0.0);
  CHECK(o(0, 5) == 0.0);
  CHECK(o(4, 2) == 0.3);
  CHECK(is_symmetric(o.mat(), 0.0));
}

TEST_CASE("permuted banded precision keeps the entry multiset") {
  RngStream rng(31, 3);
  const Matrix base = make_omega(1, 6, 1, rng).mat();
  for (int rep = 0; rep < 5; ++rep) {
    SpdMatrix o = make_omega(2, 6, 1, rng);
    std::vector<double> a(base.data(), base.data() + base.size());
    std::vector<double> b(o.mat().data(), o.mat().data() + o.mat().size());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    // row sums are permuted too: same multiset
    std::vector<double> ra(6, 0.0), rb(6, 0.0);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        ra[i] += base(i, j);
        rb[i] += o(i, j);
      }
    std::sort(ra.begin(), ra.end());
    std::sort(rb.begin(), rb.end());
    for (std::size_t i = 0; i < 6; ++i) CHECK(ra[i] == doctest::Approx(rb[i]));
  }
}

TEST_CASE("random-block precision partitions the indices") {
  RngStream rng(31, 4);
  for (int rep = 0; rep < 10; ++rep) {
    SpdMatrix o = make_omega(4, 6, 3, rng);
    // Recover blocks from the 0.4 pattern.
    std::vector<int> block(6, -1);
    int next = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      if (block[i] < 0) block[i] = next++;
      for (std::size_t j = i + 1; j < 6; ++j)
        if (o(i, j) == 0.4) {
          CHECK((block[j] < 0 || block[j] == block[i]));
          block[j] = block[i];
        }
    }
    std::set<int> ids(block.begin(), block.end());
    CHECK(ids.size() == 3);
    std::vector<std::size_t> sizes(ids.size(), 0);
    for (int b : block) ++sizes[static_cast<std::size_t>(b)];
    for (std::size_t s : sizes) CHECK(s == 2);  // q=6 evenly into 3 blocks
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(o(i, i) == 1.0);
      for (std::size_t j = 0; j < 6; ++j)
        if (i != j) CHECK((o(i, j) == 0.0 || o(i, j) == 0.4));
    }
  }
  // q=7 into 3 blocks: first block takes the extra index.
  SpdMatrix o7 = make_omega(4, 7, 3, rng);
  std::size_t forty = 0;
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = i + 1; j < 7; ++j)
      if (o7(i, j) == 0.4) ++forty;
  CHECK(forty == 3 + 1 + 1);  // C(3,2) + C(2,2) + C(2,2)
}

TEST_CASE("compound-symmetry block precision") {
  RngStream rng(31, 5);
  SpdMatrix o = make_omega(5, 6, 1, rng);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(o(i, j) == (i == j ? 1.0 : 0.5));
  CHECK(o(0, 4) == 0.0);
  CHECK(o(0, 5) == 0.0);
  CHECK(o(4, 4) == 1.0);
  CHECK(o(5, 5) == 1.0);
  CHECK(o(4, 5) == 0.0);
}

TEST_CASE("every precision pattern is positive definite at study sizes") {
  RngStream rng(31, 6);
  for (int id = 1; id <= 5; ++id) {
    for (std::size_t q : {std::size_t{6}, std::size_t{15}}) {
      SpdMatrix o = make_omega(id, q, id == 4 ? (q == 6 ? 3 : 5) : 1, rng);
      CHECK(o.dim() == q);
      CHECK(o.logdet() == o.logdet());  // finite, factorization succeeded
    }
  }
}

TEST_CASE("coefficient pattern 1") {
  RngStream rng(32, 1);
  CoefficientPattern p = make_coefficients(1, 6, 0.3, 0.8, rng);
  CHECK(p.coeff.rows() == 20);
  CHECK(p.coeff.cols() == 6);
  CHECK(p.group_sizes == std::vector<std::size_t>{5, 5, 5, 5});
  const std::set<std::size_t> active{0, 1, 4, 10, 11, 14};
  for (std::size_t r = 0; r < 20; ++r)
    for (std::size_t j = 0; j < 6; ++j) {
      if (active.count(r)) {
        CHECK(p.coeff(r, j) >= 0.3);
        CHECK(p.coeff(r, j) <= 0.8);
        CHECK(p.support(r, j) == 1.0);
      } else {
        CHECK(p.coeff(r, j) == 0.0);
        CHECK(p.support(r, j) == 0.0);
      }
    }
}

TEST_CASE("coefficient patterns 2-4 supports and sizes") {
  RngStream rng(32, 2);

  CoefficientPattern p2 = make_coefficients(2, 6, 0.3, 0.8, rng);
  const std::set<std::size_t> active2{5, 6, 9, 10, 11, 14};
  for (std::size_t r = 0; r < 20; ++r)
    CHECK((p2.coeff(r, 0) != 0.0) == (active2.count(r) > 0));

  CoefficientPattern p3 = make_coefficients(3, 15, 0.3, 0.8, rng);
  CHECK(p3.coeff.rows() == 80);
  CHECK(p3.group_sizes == std::vector<std::size_t>{10, 20, 10, 10, 20, 10});
  std::set<std::size_t> active3;
  for (std::size_t r : {5, 6, 7, 8, 9}) active3.insert(r);
  for (std::size_t r = 30; r < 35; ++r) active3.insert(r);
  for (std::size_t r = 50; r < 55; ++r) active3.insert(r);
  for (std::size_t r = 0; r < 80; ++r)
    CHECK((p3.support(r, 3) == 1.0) == (active3.count(r) > 0));

  CoefficientPattern p4 = make_coefficients(4, 15, 0.3, 0.8, rng);
  CHECK(p4.group_sizes == std::vector<std::size_t>{20, 10, 10, 20, 10, 10});
  std::set<std::size_t> active4;
  for (std::size_t r = 25; r < 35; ++r) active4.insert(r);
  for (std::size_t r = 40; r < 45; ++r) active4.insert(r);
  for (std::size_t r = 0; r < 80; ++r)
    CHECK((p4.coeff(r, 14) != 0.0) == (active4.count(r) > 0));

  CHECK_THROWS_AS(make_coefficients(5, 6, 0.3, 0.8, rng), ConfigError);
}

TEST_CASE("support mask always matches the exact zero pattern") {
  RngStream rng(32, 3);
  for (int id = 1; id <= 4; ++id) {
    CoefficientPattern p = make_coefficients(id, id <= 2 ? 6 : 15, 0.3, 0.8, rng);
    for (std::size_t i = 0; i < p.coeff.size(); ++i)
      CHECK((p.coeff.data()[i] != 0.0) == (p.support.data()[i] == 1.0));
  }
}

TEST_CASE("standard scenarios pin the study shapes") {
  SimulationScenario s1 = SimulationScenario::standard(1, 1);
  CHECK(s1.p() == 20);
  CHECK(s1.q() == 6);
  CHECK(s1.n == 100);
  CHECK(s1.n_test == 100);
  s1.validate();

  SimulationScenario s3 = SimulationScenario::standard(4, 3);
  CHECK(s3.p() == 80);
  CHECK(s3.q() == 15);
  CHECK(s3.n_blocks == 5);
  s3.validate();

  SimulationScenario bad = s1;
  bad.omega_id = 6;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  SimulationScenario bad2 = s1;
  bad2.coeff_low = 0.9;
  CHECK_THROWS_AS(bad2.validate(), ConfigError);
  SimulationScenario bad5 = SimulationScenario::standard(5, 1);
  bad5.l = bad5.m = 1;
  bad5.k = 1;
  CHECK_THROWS_AS(bad5.validate(), ConfigError);
}

TEST_CASE("full replicate generation") {
  SimulationScenario sc = SimulationScenario::standard(1, 1);
  RngStream rng(33, 1);
  SimulatedData d = generate_dataset(sc, rng);

  CHECK(d.train.n() == 100);
  CHECK(d.test.n() == 100);
  CHECK(d.train.p() == 20);
  CHECK(d.train.q() == 6);
  CHECK(d.train.groups.n_groups() == 4);
  d.train.validate();
  d.test.validate();

  CHECK(d.truth.coeff.rows() == 20);
  CHECK(d.truth.omega.rows() == 6);
  CHECK(d.truth.xi_train.rows() == 100);
  CHECK(d.truth.xi_test.rows() == 100);
  for (std::size_t i = 0; i < d.truth.coeff.size(); ++i)
    CHECK((d.truth.coeff.data()[i] != 0.0) == (d.truth.support.data()[i] == 1.0));

  double zmax = 0;
  for (std::size_t i = 0; i < d.train.z.size(); ++i)
    zmax = std::max(zmax, d.train.z.data()[i]);
  CHECK(zmax <= sc.count_cap);
}

TEST_CASE("generation replays bit-identically from the stream") {
  SimulationScenario sc = SimulationScenario::standard(2, 2);
  RngStream a(34, 9), b(34, 9);
  SimulatedData da = generate_dataset(sc, a);
  SimulatedData db = generate_dataset(sc, b);
  CHECK(da.train.x == db.train.x);
  CHECK(da.train.z == db.train.z);
  CHECK(da.test.w == db.test.w);
  CHECK(da.truth.coeff == db.truth.coeff);
  CHECK(da.truth.omega == db.truth.omega);

  RngStream c(35, 9);
  SimulatedData dc = generate_dataset(sc, c);
  CHECK(da.train.x != dc.train.x);
}

TEST_CASE("unreachable count cap raises after bounded retries") {
  SimulationScenario sc = SimulationScenario::standard(1, 1);
  sc.n = 20;
  sc.n_test = 5;
  sc.count_cap = 0.5;  // even a single count of 1 rejects the replicate
  RngStream rng(36, 1);
  CHECK_THROWS_AS(generate_dataset(sc, rng), NumericError);
}

TEST_CASE("vanishing predictor scale isolates the latent covariance") {
  SimulationScenario sc = SimulationScenario::standard(1, 1);
  sc.n = 40000;
  sc.n_test = 1;
  sc.sigma_x = 1e-8;
  RngStream rng(37, 1);
  SimulatedData d = generate_dataset(sc, rng);

  RngStream rng2(37, 99);
  const Matrix sigma = spd_inverse(make_omega(1, 6, 1, rng2)).mat();
  const double n = static_cast<double>(sc.n);

  // Continuous responses: xi + unit noise, so Var(u_j) = Sigma_jj + 1.
  for (std::size_t j = 0; j < 2; ++j) {
    double s = 0, ss = 0;
    for (std::size_t i = 0; i < sc.n; ++i) {
      s += d.train.u(i, j);
      ss += d.train.u(i, j) * d.train.u(i, j);
    }
    const double var = ss / n - (s / n) * (s / n);
    CHECK(var == doctest::Approx(sigma(j, j) + 1.0).epsilon(0.1));
  }

  // Counts: Poisson mixed over a lognormal mean, E z_j = exp(Sigma_jj / 2).
  for (std::size_t j = 0; j < 2; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < sc.n; ++i) s += d.train.z(i, j);
    const double expect = std::exp(0.5 * sigma(2 + j, 2 + j));
    CHECK(s / n == doctest::Approx(expect).epsilon(0.1));
  }
}
