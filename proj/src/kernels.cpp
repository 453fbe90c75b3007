#include "bsmr/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace bsmr::kernels {

namespace {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend pick_default() {
  if (const char* env = std::getenv("BSMR_KERNELS")) {
    std::string v(env);
    if (v == "scalar") return Backend::scalar;
    if (v == "avx2" && backend_supported(Backend::avx2)) return Backend::avx2;
    // "auto" or anything unrecognized falls through to detection
  }
  return backend_supported(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

const detail::Ops* ops_for(Backend b) {
  return b == Backend::avx2 ? &detail::avx2_ops : &detail::scalar_ops;
}

Backend g_backend = pick_default();
const detail::Ops* g_ops = ops_for(g_backend);

}  // namespace

bool backend_supported(Backend b) {
  if (b == Backend::scalar) return true;
  return detail::avx2_ops.dot != nullptr && cpu_has_avx2();
}

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
  if (!backend_supported(b))
    throw std::runtime_error("kernel backend not supported on this CPU: " +
                             backend_name(b));
  g_backend = b;
  g_ops = ops_for(b);
}

std::string backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

double dot(const double* x, const double* y, std::size_t n) {
  return g_ops->dot(x, y, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  g_ops->axpy(a, x, y, n);
}

double sum(const double* x, std::size_t n) { return g_ops->sum(x, n); }

double sumsq(const double* x, std::size_t n) { return g_ops->sumsq(x, n); }

void scale(double a, double* x, std::size_t n) { g_ops->scale(a, x, n); }

}  // namespace bsmr::kernels
