#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "bsmr/kernels.hpp"

using namespace bsmr;

namespace {

// Deterministic fill that exercises signs and magnitudes without an RNG
// dependency (this suite runs below the RNG layer).
std::vector<double> pattern(std::size_t n, std::uint64_t salt) {
  std::vector<double> v(n);
  std::uint64_t s = salt * 0x9e3779b97f4a7c15ull + 1;
  for (std::size_t i = 0; i < n; ++i) {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    v[i] = static_cast<double>(static_cast<std::int64_t>(s >> 11)) * 0x1.0p-53 * 4.0 - 2.0;
  }
  return v;
}

}  // namespace

TEST_CASE("scalar kernels match hand values") {
  const double x[] = {1.0, 2.0, 3.0};
  const double y[] = {4.0, 5.0, 6.0};
  const auto& ops = kernels::detail::scalar_ops;
  CHECK(ops.dot(x, y, 3) == doctest::Approx(32.0).epsilon(1e-15));
  CHECK(ops.sum(x, 3) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(ops.sumsq(x, 3) == doctest::Approx(14.0).epsilon(1e-15));

  double acc[] = {1.0, 1.0, 1.0};
  ops.axpy(2.0, x, acc, 3);
  CHECK(acc[0] == doctest::Approx(3.0));
  CHECK(acc[1] == doctest::Approx(5.0));
  CHECK(acc[2] == doctest::Approx(7.0));

  ops.scale(0.5, acc, 3);
  CHECK(acc[0] == doctest::Approx(1.5));
  CHECK(acc[2] == doctest::Approx(3.5));
}

TEST_CASE("zero-length inputs are safe and neutral") {
  const auto& ops = kernels::detail::scalar_ops;
  CHECK(ops.dot(nullptr, nullptr, 0) == 0.0);
  CHECK(ops.sum(nullptr, 0) == 0.0);
  CHECK(ops.sumsq(nullptr, 0) == 0.0);
  ops.axpy(2.0, nullptr, nullptr, 0);
  ops.scale(2.0, nullptr, 0);
  CHECK(kernels::dot(nullptr, nullptr, 0) == 0.0);
}

TEST_CASE("avx2 backend agrees with scalar across remainder lengths") {
  if (!kernels::backend_supported(kernels::Backend::avx2)) {
    MESSAGE("avx2 unavailable on this host; equivalence suite skipped");
    return;
  }
  const auto& sc = kernels::detail::scalar_ops;
  const auto& vx = kernels::detail::avx2_ops;
  REQUIRE(vx.dot != nullptr);

  // Cover every residue mod 4 plus sizes around unroll boundaries.
  const std::size_t sizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17,
                               31, 32, 33, 63, 64, 65, 100, 255, 1024, 1031};
  for (std::size_t n : sizes) {
    CAPTURE(n);
    auto x = pattern(n, 2 * n + 1);
    auto y = pattern(n, 7 * n + 3);
    const double tol = 1e-12 * (static_cast<double>(n) + 1.0);

    CHECK(std::fabs(sc.dot(x.data(), y.data(), n) - vx.dot(x.data(), y.data(), n)) <= tol);
    CHECK(std::fabs(sc.sum(x.data(), n) - vx.sum(x.data(), n)) <= tol);
    CHECK(std::fabs(sc.sumsq(x.data(), n) - vx.sumsq(x.data(), n)) <= tol);

    auto a = y, b = y;
    sc.axpy(1.25, x.data(), a.data(), n);
    vx.axpy(1.25, x.data(), b.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(a[i] - b[i]) <= tol);

    auto c = x, d = x;
    sc.scale(-0.75, c.data(), n);
    vx.scale(-0.75, d.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(c[i] == d[i]);
  }
}

TEST_CASE("backend can be forced and restored") {
  const auto initial = kernels::active_backend();
  CHECK(kernels::backend_supported(kernels::Backend::scalar));

  kernels::set_backend(kernels::Backend::scalar);
  CHECK(kernels::active_backend() == kernels::Backend::scalar);
  const double x[] = {1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(kernels::dot(x, x, 5) == doctest::Approx(55.0));

  if (kernels::backend_supported(kernels::Backend::avx2)) {
    kernels::set_backend(kernels::Backend::avx2);
    CHECK(kernels::active_backend() == kernels::Backend::avx2);
    CHECK(kernels::dot(x, x, 5) == doctest::Approx(55.0));
  } else {
    CHECK_THROWS_AS(kernels::set_backend(kernels::Backend::avx2), std::runtime_error);
  }

  kernels::set_backend(initial);
  CHECK(kernels::active_backend() == initial);
}

TEST_CASE("backend names") {
  CHECK(kernels::backend_name(kernels::Backend::scalar) == "scalar");
  CHECK(kernels::backend_name(kernels::Backend::avx2) == "avx2");
}
