// AVX2 + FMA variants of the pointwise kernels. This translation unit is the
// only one compiled with -mavx2 -mfma; nothing here may be called unless the
// dispatcher has confirmed CPU support.

#include "gnls/simd/kernels.hpp"

#include <immintrin.h>

#include <cassert>
#include <cmath>

namespace gnls::simd::avx2 {
namespace {

// Lanes with |x| above this go through libm; the three-part Cody-Waite
// reduction below is exact for |quadrant| < 2^19.
constexpr double kReductionLimit = 1.0e5;

// fdlibm split of pi/2 (33 + 33 + remaining bits).
constexpr double kPio2Hi = 1.57079632673412561417e+00;
constexpr double kPio2Mid = 6.07710050630396597660e-11;
constexpr double kPio2Lo = 2.02226624871116645580e-21;

// fdlibm __kernel_sin / __kernel_cos minimax coefficients on [-pi/4, pi/4].
constexpr double kS1 = -1.66666666666666324348e-01;
constexpr double kS2 = 8.33333333332248946124e-03;
constexpr double kS3 = -1.98412698298579493134e-04;
constexpr double kS4 = 2.75573137070700676789e-06;
constexpr double kS5 = -2.50507602534068634195e-08;
constexpr double kS6 = 1.58969099521155010221e-10;

constexpr double kC1 = 4.16666666666666019037e-02;
constexpr double kC2 = -1.38888888888741095749e-03;
constexpr double kC3 = 2.48015872894767294178e-05;
constexpr double kC4 = -2.75573143513906633035e-07;
constexpr double kC5 = 2.08757232129817482790e-09;
constexpr double kC6 = -1.13596475577881948265e-11;

inline __m256d set1(double v) { return _mm256_set1_pd(v); }

inline void sincos4(__m256d x, __m256d& s_out, __m256d& c_out) {
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  const __m256d ax = _mm256_and_pd(x, abs_mask);
  const int big = _mm256_movemask_pd(_mm256_cmp_pd(ax, set1(kReductionLimit), _CMP_GT_OQ));
  // NaN lanes compare false above; they propagate through the polynomial.

  const __m256d q = _mm256_round_pd(_mm256_mul_pd(x, set1(2.0 / M_PI)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(q, set1(kPio2Hi), x);
  r = _mm256_fnmadd_pd(q, set1(kPio2Mid), r);
  r = _mm256_fnmadd_pd(q, set1(kPio2Lo), r);

  const __m256d z = _mm256_mul_pd(r, r);

  __m256d ps = _mm256_fmadd_pd(z, set1(kS6), set1(kS5));
  ps = _mm256_fmadd_pd(z, ps, set1(kS4));
  ps = _mm256_fmadd_pd(z, ps, set1(kS3));
  ps = _mm256_fmadd_pd(z, ps, set1(kS2));
  ps = _mm256_fmadd_pd(z, ps, set1(kS1));
  const __m256d sin_r = _mm256_fmadd_pd(_mm256_mul_pd(r, z), ps, r);

  __m256d pc = _mm256_fmadd_pd(z, set1(kC6), set1(kC5));
  pc = _mm256_fmadd_pd(z, pc, set1(kC4));
  pc = _mm256_fmadd_pd(z, pc, set1(kC3));
  pc = _mm256_fmadd_pd(z, pc, set1(kC2));
  pc = _mm256_fmadd_pd(z, pc, set1(kC1));
  // cos r = w + ((1 - w) - hz) + z^2 C(z), w = 1 - hz  (fdlibm ordering)
  const __m256d hz = _mm256_mul_pd(set1(0.5), z);
  const __m256d w = _mm256_sub_pd(set1(1.0), hz);
  const __m256d tail = _mm256_fmadd_pd(_mm256_mul_pd(z, z), pc,
                                       _mm256_sub_pd(_mm256_sub_pd(set1(1.0), w), hz));
  const __m256d cos_r = _mm256_add_pd(w, tail);

  // Quadrant from the low bits of q via the 2^52 + 2^51 shift trick.
  const __m256d shifted = _mm256_add_pd(q, set1(6755399441055744.0));
  const __m256i quad = _mm256_and_si256(_mm256_castpd_si256(shifted), _mm256_set1_epi64x(3));
  const __m256d swap = _mm256_castsi256_pd(
      _mm256_cmpeq_epi64(_mm256_and_si256(quad, _mm256_set1_epi64x(1)), _mm256_set1_epi64x(1)));
  const __m256d sin_neg = _mm256_castsi256_pd(
      _mm256_cmpeq_epi64(_mm256_and_si256(quad, _mm256_set1_epi64x(2)), _mm256_set1_epi64x(2)));
  // cos is negated in quadrants 1 and 2.
  const __m256i q_plus1 = _mm256_add_epi64(quad, _mm256_set1_epi64x(1));
  const __m256d cos_neg = _mm256_castsi256_pd(
      _mm256_cmpeq_epi64(_mm256_and_si256(q_plus1, _mm256_set1_epi64x(2)), _mm256_set1_epi64x(2)));

  __m256d s = _mm256_blendv_pd(sin_r, cos_r, swap);
  __m256d c = _mm256_blendv_pd(cos_r, sin_r, swap);
  const __m256d sign = set1(-0.0);
  s = _mm256_xor_pd(s, _mm256_and_pd(sin_neg, sign));
  c = _mm256_xor_pd(c, _mm256_and_pd(cos_neg, sign));

  if (big != 0) {
    alignas(32) double xs[4], ss[4], cs[4];
    _mm256_store_pd(xs, x);
    _mm256_store_pd(ss, s);
    _mm256_store_pd(cs, c);
    for (int k = 0; k < 4; ++k) {
      if (big & (1 << k)) {
        ss[k] = std::sin(xs[k]);
        cs[k] = std::cos(xs[k]);
      }
    }
    s = _mm256_load_pd(ss);
    c = _mm256_load_pd(cs);
  }
  s_out = s;
  c_out = c;
}

inline double* dp(cplx* z) { return reinterpret_cast<double*>(z); }
inline const double* dp(const cplx* z) { return reinterpret_cast<const double*>(z); }

// (z0, z1) * (f0, f1) for two interleaved complex pairs.
inline __m256d cmul(__m256d z, __m256d f) {
  const __m256d f_re = _mm256_movedup_pd(f);
  const __m256d f_im = _mm256_permute_pd(f, 0xF);
  const __m256d z_sw = _mm256_permute_pd(z, 0x5);
  return _mm256_fmaddsub_pd(z, f_re, _mm256_mul_pd(z_sw, f_im));
}

// Interleave cos/sin of four angles into two (c, s) complex pairs.
inline void interleave(__m256d c, __m256d s, __m256d& lo, __m256d& hi) {
  const __m256d a = _mm256_unpacklo_pd(c, s);  // c0 s0 c2 s2
  const __m256d b = _mm256_unpackhi_pd(c, s);  // c1 s1 c3 s3
  lo = _mm256_permute2f128_pd(a, b, 0x20);
  hi = _mm256_permute2f128_pd(a, b, 0x31);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// |z|^2 of four complex values starting at p, in lane order.
inline __m256d abs2x4(const double* p) {
  const __m256d a = _mm256_loadu_pd(p);
  const __m256d b = _mm256_loadu_pd(p + 4);
  const __m256d h = _mm256_hadd_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b));  // 0 2 1 3
  return _mm256_permute4x64_pd(h, 0b11011000);
}

}  // namespace

void multiply(std::span<cplx> z, std::span<const cplx> factor) {
  assert(z.size() == factor.size());
  const std::size_t n = z.size();
  double* zp = dp(z.data());
  const double* fp = dp(factor.data());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    _mm256_storeu_pd(zp + 2 * i, cmul(_mm256_loadu_pd(zp + 2 * i), _mm256_loadu_pd(fp + 2 * i)));
  }
  scalar::multiply(z.subspan(i), factor.subspan(i));
}

void rotate(std::span<cplx> z, std::span<const double> angle) {
  assert(z.size() == angle.size());
  const std::size_t n = z.size();
  double* zp = dp(z.data());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d s, c, lo, hi;
    sincos4(_mm256_loadu_pd(angle.data() + i), s, c);
    interleave(c, s, lo, hi);
    _mm256_storeu_pd(zp + 2 * i, cmul(_mm256_loadu_pd(zp + 2 * i), lo));
    _mm256_storeu_pd(zp + 2 * i + 4, cmul(_mm256_loadu_pd(zp + 2 * i + 4), hi));
  }
  scalar::rotate(z.subspan(i), angle.subspan(i));
}

void polar(std::span<cplx> out, std::span<const double> angle) {
  assert(out.size() == angle.size());
  const std::size_t n = out.size();
  double* op = dp(out.data());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d s, c, lo, hi;
    sincos4(_mm256_loadu_pd(angle.data() + i), s, c);
    interleave(c, s, lo, hi);
    _mm256_storeu_pd(op + 2 * i, lo);
    _mm256_storeu_pd(op + 2 * i + 4, hi);
  }
  scalar::polar(out.subspan(i), angle.subspan(i));
}

void nonlinear_rotate(std::span<cplx> z, double coef, double power) {
  const std::size_t n = z.size();
  double* zp = dp(z.data());
  const __m256d vcoef = set1(coef);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d m2 = abs2x4(zp + 2 * i);
    __m256d mag_p;
    if (power == 2.0) {
      mag_p = m2;
    } else if (power == 1.0) {
      mag_p = _mm256_sqrt_pd(m2);
    } else {
      alignas(32) double tmp[4];
      _mm256_store_pd(tmp, m2);
      for (double& t : tmp) t = std::pow(t, 0.5 * power);
      mag_p = _mm256_load_pd(tmp);
    }
    __m256d s, c, lo, hi;
    sincos4(_mm256_mul_pd(vcoef, mag_p), s, c);
    interleave(c, s, lo, hi);
    _mm256_storeu_pd(zp + 2 * i, cmul(_mm256_loadu_pd(zp + 2 * i), lo));
    _mm256_storeu_pd(zp + 2 * i + 4, cmul(_mm256_loadu_pd(zp + 2 * i + 4), hi));
  }
  scalar::nonlinear_rotate(z.subspan(i), coef, power);
}

double weighted_norm2(std::span<const cplx> z, std::span<const double> w) {
  assert(z.size() == w.size());
  const std::size_t n = z.size();
  const double* zp = dp(z.data());
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w.data() + i), abs2x4(zp + 2 * i), acc);
  }
  return hsum(acc) + scalar::weighted_norm2(z.subspan(i), w.subspan(i));
}

cplx weighted_dot(std::span<const cplx> a, std::span<const cplx> b, std::span<const double> w) {
  assert(a.size() == b.size() && a.size() == w.size());
  const std::size_t n = a.size();
  const double* ap = dp(a.data());
  const double* bp = dp(b.data());
  __m256d acc_re = _mm256_setzero_pd();  // lanes: ar*br, ai*bi per complex
  __m256d acc_im = _mm256_setzero_pd();  // lanes: ai*br, -ar*bi
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(ap + 2 * i);
    const __m256d vb = _mm256_loadu_pd(bp + 2 * i);
    const __m128d w2 = _mm_loadu_pd(w.data() + i);
    const __m256d vw = _mm256_permute4x64_pd(_mm256_castpd128_pd256(w2), 0b01010000);
    const __m256d wa = _mm256_mul_pd(vw, va);
    acc_re = _mm256_fmadd_pd(wa, vb, acc_re);
    // (ai*br - ar*bi): swap b and negate the imaginary-lane product.
    const __m256d vb_sw = _mm256_permute_pd(vb, 0x5);  // bi br
    const __m256d prod = _mm256_mul_pd(wa, vb_sw);      // ar*bi ai*br
    acc_im = _mm256_addsub_pd(acc_im, prod);            // -ar*bi, +ai*br
  }
  const cplx tail = scalar::weighted_dot(a.subspan(i), b.subspan(i), w.subspan(i));
  return {hsum(acc_re) + tail.real(), hsum(acc_im) + tail.imag()};
}

double max_abs(std::span<const cplx> z) {
  const std::size_t n = z.size();
  const double* zp = dp(z.data());
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, abs2x4(zp + 2 * i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double best = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  const double tail = scalar::max_abs(z.subspan(i));
  return std::max(std::sqrt(best), tail);
}

void sincos(std::span<const double> x, std::span<double> s, std::span<double> c) {
  assert(x.size() == s.size() && x.size() == c.size());
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vs, vc;
    sincos4(_mm256_loadu_pd(x.data() + i), vs, vc);
    _mm256_storeu_pd(s.data() + i, vs);
    _mm256_storeu_pd(c.data() + i, vc);
  }
  scalar::sincos(x.subspan(i), s.subspan(i), c.subspan(i));
}

}  // namespace gnls::simd::avx2
