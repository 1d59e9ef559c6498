#pragma once

// Pointwise arithmetic kernels used by every transform and time step.
//
// Each kernel has a scalar reference implementation and, on x86-64, an AVX2+FMA
// variant. The variant is chosen once at startup from the CPU feature bits; the
// environment variable GNLS_KERNELS=scalar forces the reference path. Both
// variants are exported so tests can compare them directly.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace gnls::simd {

using cplx = std::complex<double>;

enum class Backend { scalar, avx2 };

std::string_view backend_name(Backend b);
bool backend_available(Backend b);
Backend active_backend();
/// Throws std::invalid_argument if the backend is not available on this CPU.
void force_backend(Backend b);

// Dispatched entry points. Spans that are read together must have equal size.

/// z[i] *= factor[i]
void multiply(std::span<cplx> z, std::span<const cplx> factor);
/// z[i] *= exp(i * angle[i])
void rotate(std::span<cplx> z, std::span<const double> angle);
/// out[i] = exp(i * angle[i])
void polar(std::span<cplx> out, std::span<const double> angle);
/// z[i] *= exp(i * coef * |z[i]|^power); |z| is unchanged.
void nonlinear_rotate(std::span<cplx> z, double coef, double power);
/// sum_i w[i] |z[i]|^2
double weighted_norm2(std::span<const cplx> z, std::span<const double> w);
/// sum_i w[i] a[i] conj(b[i])
cplx weighted_dot(std::span<const cplx> a, std::span<const cplx> b, std::span<const double> w);
/// max_i |z[i]|
double max_abs(std::span<const cplx> z);
void sincos(std::span<const double> x, std::span<double> s, std::span<double> c);

namespace scalar {
void multiply(std::span<cplx> z, std::span<const cplx> factor);
void rotate(std::span<cplx> z, std::span<const double> angle);
void polar(std::span<cplx> out, std::span<const double> angle);
void nonlinear_rotate(std::span<cplx> z, double coef, double power);
double weighted_norm2(std::span<const cplx> z, std::span<const double> w);
cplx weighted_dot(std::span<const cplx> a, std::span<const cplx> b, std::span<const double> w);
double max_abs(std::span<const cplx> z);
void sincos(std::span<const double> x, std::span<double> s, std::span<double> c);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void multiply(std::span<cplx> z, std::span<const cplx> factor);
void rotate(std::span<cplx> z, std::span<const double> angle);
void polar(std::span<cplx> out, std::span<const double> angle);
void nonlinear_rotate(std::span<cplx> z, double coef, double power);
double weighted_norm2(std::span<const cplx> z, std::span<const double> w);
cplx weighted_dot(std::span<const cplx> a, std::span<const cplx> b, std::span<const double> w);
double max_abs(std::span<const cplx> z);
void sincos(std::span<const double> x, std::span<double> s, std::span<double> c);
}  // namespace avx2
#endif

}  // namespace gnls::simd
