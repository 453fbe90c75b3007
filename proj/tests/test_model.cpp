#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>

#include "bsmr/errors.hpp"
#include "bsmr/model.hpp"
#include "bsmr/rng.hpp"

using namespace bsmr;

namespace {

MixedResponseDataset tiny_dataset() {
  MixedResponseDataset d;
  d.x = Matrix{{1.0, 0.5}, {-1.0, 2.0}, {0.0, 1.0}};
  d.u = Matrix{{0.1}, {0.2}, {0.3}};
  d.z = Matrix{{1.0}, {0.0}, {4.0}};
  d.w = Matrix{{1.0}, {0.0}, {1.0}};
  d.groups = GroupStructure({1, 1});
  return d;
}

}  // namespace

TEST_CASE("group structure offsets and lookup") {
  GroupStructure g({2, 3, 1});
  CHECK(g.n_groups() == 3);
  CHECK(g.n_predictors() == 6);
  CHECK(g.offset(0) == 0);
  CHECK(g.offset(1) == 2);
  CHECK(g.offset(2) == 5);
  CHECK(g.group_of(0) == 0);
  CHECK(g.group_of(4) == 1);
  CHECK(g.group_of(5) == 2);
  CHECK_THROWS_AS(g.group_of(6), DataError);
  CHECK_THROWS_AS(GroupStructure({2, 0}), DataError);
}

TEST_CASE("effective coefficients scale rows by tau") {
  GroupStructure groups({2});
  Matrix b_tilde{{1, 1}, {3, 3}};

  SUBCASE("tau all zero gives the zero matrix") {
    Matrix b = effective_coefficients(b_tilde, {0, 0}, {1}, groups);
    CHECK(max_abs(b) == 0.0);
  }
  SUBCASE("tau all one is the identity scaling") {
    Matrix b = effective_coefficients(b_tilde, {1, 1}, {1}, groups);
    CHECK(b == b_tilde);
  }
  SUBCASE("mixed tau") {
    Matrix b = effective_coefficients(b_tilde, {2, 0}, {1}, groups);
    CHECK(b(0, 0) == 2.0);
    CHECK(b(0, 1) == 2.0);
    CHECK(b(1, 0) == 0.0);
    CHECK(b(1, 1) == 0.0);
  }
  SUBCASE("excluded group zeroes its rows regardless of tau") {
    Matrix b = effective_coefficients(b_tilde, {2, 2}, {0}, groups);
    CHECK(max_abs(b) == 0.0);
  }
}

TEST_CASE("linear predictor single point") {
  SUBCASE("zero coefficients") {
    Matrix b(4, 3);
    Vector eta = linear_predictor(b, {1, 2, 3, 4});
    for (double v : eta) CHECK(v == 0.0);
  }
  SUBCASE("identity selects the coordinate") {
    Matrix b = Matrix::identity(3);
    Vector eta = linear_predictor(b, {1, 0, 0});
    CHECK(eta == Vector{1, 0, 0});
  }
  SUBCASE("random case matches a triple-loop oracle") {
    RngStream rng(21, 1);
    Matrix b(3, 2);
    for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-2, 2);
    Vector x{0.3, -1.2, 2.5};
    Vector eta = linear_predictor(b, x);
    for (std::size_t j = 0; j < 2; ++j) {
      double acc = 0;
      for (std::size_t r = 0; r < 3; ++r) acc += b(r, j) * x[r];
      CHECK(std::fabs(eta[j] - acc) < 1e-12);
    }
  }
}

TEST_CASE("linear predictor dataset form with intercept") {
  Matrix x{{1.0, 2.0}, {0.0, -1.0}};
  Matrix coeff{{0.5, -0.5}, {1.0, 2.0}};
  Vector intercept{10.0, 20.0};
  Matrix mean = linear_predictor(x, coeff, intercept);
  CHECK(mean(0, 0) == doctest::Approx(10.0 + 0.5 + 2.0));
  CHECK(mean(0, 1) == doctest::Approx(20.0 - 0.5 + 4.0));
  CHECK(mean(1, 0) == doctest::Approx(10.0 - 1.0));
  CHECK(mean(1, 1) == doctest::Approx(20.0 - 2.0));

  Matrix no_icpt = linear_predictor(x, coeff, Vector{});
  CHECK(no_icpt(1, 0) == doctest::Approx(-1.0));
}

TEST_CASE("response links") {
  SUBCASE("zero latent maps to neutral parameters") {
    Vector out = response_links({0, 0, 0}, 1, 1, 1);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 1.0);
    CHECK(out[2] == 0.5);
  }
  SUBCASE("log link inverse") {
    Vector out = response_links({std::log(5.0)}, 0, 1, 0);
    CHECK(out[0] == doctest::Approx(5.0).epsilon(1e-14));
  }
  SUBCASE("logistic evaluation") {
    Vector out = response_links({2.0}, 0, 0, 1);
    CHECK(std::fabs(out[0] - 0.88079707797788244) < 1e-12);
  }
  SUBCASE("count overflow guard") {
    CHECK_THROWS_AS(response_links({701.0}, 0, 1, 0), NumericError);
    // Continuous and binary slots pass large values through untouched.
    Vector ok = response_links({701.0, 701.0}, 1, 0, 1);
    CHECK(ok[0] == 701.0);
    CHECK(ok[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("dataset validation names the offending cell") {
  MixedResponseDataset d = tiny_dataset();
  d.validate();

  SUBCASE("binary out of range") {
    d.w(1, 0) = 2.0;
    CHECK_THROWS_WITH_AS(d.validate(), "binary value is not 0 or 1 at w row 2, column 1",
                         DataError);
  }
  SUBCASE("fractional count") {
    d.z(2, 0) = 1.5;
    try {
      d.validate();
      CHECK(false);
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("row 3, column 1") != std::string::npos);
    }
  }
  SUBCASE("negative count") {
    d.z(0, 0) = -1.0;
    CHECK_THROWS_AS(d.validate(), DataError);
  }
  SUBCASE("non-finite predictor") {
    d.x(0, 1) = std::nan("");
    CHECK_THROWS_AS(d.validate(), DataError);
  }
  SUBCASE("group sizes must sum to p") {
    d.groups = GroupStructure({3});
    try {
      d.validate();
      CHECK(false);
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("sum to 3") != std::string::npos);
    }
  }
}

TEST_CASE("initial latent values") {
  MixedResponseDataset d = tiny_dataset();
  Matrix xi = initial_latent(d);
  CHECK(xi(0, 0) == d.u(0, 0));
  CHECK(xi(1, 1) == doctest::Approx(std::log(0.5)));
  CHECK(xi(2, 1) == doctest::Approx(std::log(4.5)));
  CHECK(xi(0, 2) == 1.0);
  CHECK(xi(1, 2) == -1.0);
}

TEST_CASE("initial state is feasible and honours pins") {
  MixedResponseDataset d = tiny_dataset();
  Hyperparameters h;
  ModelState s = initial_state(d, h);
  validate_state(s, d, true);
  CHECK(s.pi1 == doctest::Approx(20.0 / 60.0));
  CHECK(s.pi2 == doctest::Approx(20.0 / 60.0));
  // q = 3: a5 = 3, a6 = 3.
  CHECK(s.pi3 == doctest::Approx(0.5));
  CHECK(s.tau == Vector{1.0, 1.0});
  CHECK(s.omega == Matrix::identity(3));
  CHECK(s.sigma2 == Vector{1.0});

  Hyperparameters pinned = h;
  pinned.pin_pi1 = 0.9;
  pinned.include_intercept = false;
  pinned.omega_init = Matrix{{2, 0, 0}, {0, 2, 0}, {0, 0, 2}};
  pinned.sigma2_init = Vector{0.25};
  ModelState s2 = initial_state(d, pinned);
  validate_state(s2, d, false);
  CHECK(s2.pi1 == 0.9);
  CHECK(s2.intercept.empty());
  CHECK(s2.omega(1, 1) == 2.0);
  CHECK(s2.sigma2[0] == 0.25);

  Hyperparameters bad = h;
  bad.omega_init = Matrix{{1, 0}, {0, 1}};
  CHECK_THROWS_AS(initial_state(d, bad), ConfigError);
}

TEST_CASE("state validation rejects support violations") {
  MixedResponseDataset d = tiny_dataset();
  Hyperparameters h;
  ModelState s = initial_state(d, h);

  ModelState broken = s;
  broken.group_included[0] = 0;
  broken.b_tilde(0, 0) = 1.0;
  CHECK_THROWS_AS(validate_state(broken, d, true), DataError);

  ModelState neg = s;
  neg.tau[1] = -0.5;
  CHECK_THROWS_AS(validate_state(neg, d, true), DataError);

  ModelState badpi = s;
  badpi.pi2 = 1.5;
  CHECK_THROWS_AS(validate_state(badpi, d, true), DataError);
}

TEST_CASE("hyperparameter validation") {
  Hyperparameters h;
  h.validate();
  CHECK(h.resolved_a5(6) == 6.0);
  CHECK(h.resolved_a6(6) == 15.0);
  CHECK(h.resolved_lambda(6) == 6.0);
  h.a5 = 2.0;
  CHECK(h.resolved_a5(6) == 2.0);

  Hyperparameters bad = h;
  bad.sigma0 = 3.0;
  bad.sigma1 = 0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  Hyperparameters bad2 = h;
  bad2.a1 = 0.0;
  CHECK_THROWS_AS(bad2.validate(), ConfigError);
  Hyperparameters bad3 = h;
  bad3.pin_pi2 = 1.0001;
  CHECK_THROWS_AS(bad3.validate(), ConfigError);
}

TEST_CASE("edge index walks the strict upper triangle row by row") {
  const std::size_t q = 4;
  std::size_t expect = 0;
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = i + 1; j < q; ++j)
      CHECK(ModelState::edge_index(i, j, q) == expect++);
  CHECK(expect == q * (q - 1) / 2);
}
