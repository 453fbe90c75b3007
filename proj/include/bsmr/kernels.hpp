#pragma once

#include <cstddef>
#include <string>

// Dense inner-loop primitives used by the matrix layer.  A scalar reference
// implementation is always available; on x86-64 an AVX2+FMA variant is
// selected at startup when the CPU supports it.  The active backend can be
// forced with set_backend() or the BSMR_KERNELS environment variable
// ("scalar", "avx2", "auto").  Within one backend results are deterministic.

namespace bsmr::kernels {

enum class Backend { scalar, avx2 };

// y . x
double dot(const double* x, const double* y, std::size_t n);
// y += a * x
void axpy(double a, const double* x, double* y, std::size_t n);
// sum_i x[i]
double sum(const double* x, std::size_t n);
// sum_i x[i]^2
double sumsq(const double* x, std::size_t n);
// x *= a
void scale(double a, double* x, std::size_t n);

bool backend_supported(Backend b);
Backend active_backend();
// Throws std::runtime_error if the backend is not supported on this CPU.
void set_backend(Backend b);
std::string backend_name(Backend b);

namespace detail {

struct Ops {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*sumsq)(const double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
};

extern const Ops scalar_ops;
// Null-filled when the binary was built without AVX2 support.
extern const Ops avx2_ops;

}  // namespace detail

}  // namespace bsmr::kernels
