#include "gnls/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace gnls::simd {
namespace {

struct Table {
  void (*multiply)(std::span<cplx>, std::span<const cplx>);
  void (*rotate)(std::span<cplx>, std::span<const double>);
  void (*polar)(std::span<cplx>, std::span<const double>);
  void (*nonlinear_rotate)(std::span<cplx>, double, double);
  double (*weighted_norm2)(std::span<const cplx>, std::span<const double>);
  cplx (*weighted_dot)(std::span<const cplx>, std::span<const cplx>, std::span<const double>);
  double (*max_abs)(std::span<const cplx>);
  void (*sincos)(std::span<const double>, std::span<double>, std::span<double>);
};

constexpr Table kScalar{scalar::multiply,       scalar::rotate,       scalar::polar,
                        scalar::nonlinear_rotate, scalar::weighted_norm2, scalar::weighted_dot,
                        scalar::max_abs,        scalar::sincos};

#if defined(GNLS_HAVE_AVX2)
constexpr Table kAvx2{avx2::multiply,       avx2::rotate,       avx2::polar,
                      avx2::nonlinear_rotate, avx2::weighted_norm2, avx2::weighted_dot,
                      avx2::max_abs,        avx2::sincos};
#endif

bool cpu_has_avx2() {
#if defined(GNLS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Table* table_for(Backend b) {
#if defined(GNLS_HAVE_AVX2)
  if (b == Backend::avx2) return &kAvx2;
#endif
  (void)b;
  return &kScalar;
}

Backend initial_backend() {
  if (const char* env = std::getenv("GNLS_KERNELS"); env != nullptr && std::string(env) == "scalar") {
    return Backend::scalar;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<const Table*>& active_table() {
  static std::atomic<const Table*> table{table_for(initial_backend())};
  return table;
}

const Table& t() { return *active_table().load(std::memory_order_relaxed); }

}  // namespace

std::string_view backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

bool backend_available(Backend b) { return b == Backend::scalar || cpu_has_avx2(); }

Backend active_backend() { return &t() == &kScalar ? Backend::scalar : Backend::avx2; }

void force_backend(Backend b) {
  if (!backend_available(b)) {
    throw std::invalid_argument("kernel backend not available on this CPU: " + std::string(backend_name(b)));
  }
  active_table().store(table_for(b), std::memory_order_relaxed);
}

void multiply(std::span<cplx> z, std::span<const cplx> f) { t().multiply(z, f); }
void rotate(std::span<cplx> z, std::span<const double> a) { t().rotate(z, a); }
void polar(std::span<cplx> out, std::span<const double> a) { t().polar(out, a); }
void nonlinear_rotate(std::span<cplx> z, double coef, double power) { t().nonlinear_rotate(z, coef, power); }
double weighted_norm2(std::span<const cplx> z, std::span<const double> w) { return t().weighted_norm2(z, w); }
cplx weighted_dot(std::span<const cplx> a, std::span<const cplx> b, std::span<const double> w) {
  return t().weighted_dot(a, b, w);
}
double max_abs(std::span<const cplx> z) { return t().max_abs(z); }
void sincos(std::span<const double> x, std::span<double> s, std::span<double> c) { t().sincos(x, s, c); }

}  // namespace gnls::simd
