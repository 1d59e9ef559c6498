#include "gnls/simd/kernels.hpp"

#include <cassert>
#include <cmath>

namespace gnls::simd::scalar {

void multiply(std::span<cplx> z, std::span<const cplx> factor) {
  assert(z.size() == factor.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double a = z[i].real(), b = z[i].imag();
    const double c = factor[i].real(), d = factor[i].imag();
    z[i] = cplx(a * c - b * d, b * c + a * d);
  }
}

void rotate(std::span<cplx> z, std::span<const double> angle) {
  assert(z.size() == angle.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double c = std::cos(angle[i]), s = std::sin(angle[i]);
    const double a = z[i].real(), b = z[i].imag();
    z[i] = cplx(a * c - b * s, b * c + a * s);
  }
}

void polar(std::span<cplx> out, std::span<const double> angle) {
  assert(out.size() == angle.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cplx(std::cos(angle[i]), std::sin(angle[i]));
}

void nonlinear_rotate(std::span<cplx> z, double coef, double power) {
  for (auto& v : z) {
    const double a = v.real(), b = v.imag();
    const double m2 = a * a + b * b;
    double mag_p;
    if (power == 2.0) {
      mag_p = m2;
    } else if (power == 1.0) {
      mag_p = std::sqrt(m2);
    } else {
      mag_p = std::pow(m2, 0.5 * power);
    }
    const double theta = coef * mag_p;
    const double c = std::cos(theta), s = std::sin(theta);
    v = cplx(a * c - b * s, b * c + a * s);
  }
}

double weighted_norm2(std::span<const cplx> z, std::span<const double> w) {
  assert(z.size() == w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double a = z[i].real(), b = z[i].imag();
    acc += w[i] * (a * a + b * b);
  }
  return acc;
}

cplx weighted_dot(std::span<const cplx> a, std::span<const cplx> b, std::span<const double> w) {
  assert(a.size() == b.size() && a.size() == w.size());
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    re += w[i] * (ar * br + ai * bi);
    im += w[i] * (ai * br - ar * bi);
  }
  return {re, im};
}

double max_abs(std::span<const cplx> z) {
  double m2 = 0.0;
  for (const auto& v : z) {
    const double a = v.real(), b = v.imag();
    m2 = std::max(m2, a * a + b * b);
  }
  return std::sqrt(m2);
}

void sincos(std::span<const double> x, std::span<double> s, std::span<double> c) {
  assert(x.size() == s.size() && x.size() == c.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    s[i] = std::sin(x[i]);
    c[i] = std::cos(x[i]);
  }
}

}  // namespace gnls::simd::scalar
