#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gnls/simd/kernels.hpp"

using gnls::simd::cplx;
namespace simd = gnls::simd;

namespace {

std::vector<cplx> random_complex(std::size_t n, unsigned seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  std::vector<cplx> v(n);
  for (auto& z : v) z = {d(rng), d(rng)};
  return v;
}

std::vector<double> random_real(std::size_t n, unsigned seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

bool have_avx2() { return simd::backend_available(simd::Backend::avx2); }

// Odd lengths exercise the scalar tails of the vector loops.
const std::size_t kSizes[] = {0, 1, 3, 4, 7, 17, 1001};

}  // namespace

TEST(Kernels, ScalarSincosMatchesLibm) {
  const auto x = random_real(257, 1, -50.0, 50.0);
  std::vector<double> s(x.size()), c(x.size());
  simd::scalar::sincos(x, s, c);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(s[i], std::sin(x[i]));
    EXPECT_EQ(c[i], std::cos(x[i]));
  }
}

#if defined(__x86_64__)

TEST(Kernels, Avx2SincosAgreesWithLibm) {
  if (!have_avx2()) GTEST_SKIP() << "no AVX2";
  for (double range : {1.0, 100.0, 9.0e4, 1.0e7}) {
    const auto x = random_real(4099, 7, -range, range);
    std::vector<double> s(x.size()), c(x.size());
    simd::avx2::sincos(x, s, c);
    for (std::size_t i = 0; i < x.size(); ++i) {
      ASSERT_NEAR(s[i], std::sin(x[i]), 4e-16) << x[i];
      ASSERT_NEAR(c[i], std::cos(x[i]), 4e-16) << x[i];
    }
  }
}

TEST(Kernels, Avx2SincosSpecialValues) {
  if (!have_avx2()) GTEST_SKIP() << "no AVX2";
  const double pi = std::acos(-1.0);
  std::vector<double> x = {0.0, -0.0, pi / 2, pi, -pi, 3 * pi / 2, 1e-300, 1e5, -1e5, 1e5 + 1, 2e9};
  std::vector<double> s(x.size()), c(x.size());
  simd::avx2::sincos(x, s, c);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(s[i], std::sin(x[i]), 4e-16) << x[i];
    EXPECT_NEAR(c[i], std::cos(x[i]), 4e-16) << x[i];
  }
  std::vector<double> bad = {std::nan(""), 1.0, 2.0, 3.0};
  std::vector<double> sb(4), cb(4);
  simd::avx2::sincos(bad, sb, cb);
  EXPECT_TRUE(std::isnan(sb[0]));
  EXPECT_TRUE(std::isnan(cb[0]));
  EXPECT_NEAR(sb[1], std::sin(1.0), 4e-16);
}

TEST(Kernels, Avx2MultiplyMatchesScalar) {
  if (!have_avx2()) GTEST_SKIP() << "no AVX2";
  for (std::size_t n : kSizes) {
    auto a = random_complex(n, 11);
    auto b = a;
    const auto f = random_complex(n, 12);
    simd::scalar::multiply(a, f);
    simd::avx2::multiply(b, f);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(std::abs(a[i] - b[i]), 0.0, 1e-15 * (1 + std::abs(a[i])));
  }
}

TEST(Kernels, Avx2RotateAndPolarMatchScalar) {
  if (!have_avx2()) GTEST_SKIP() << "no AVX2";
  for (std::size_t n : kSizes) {
    const auto ang = random_real(n, 21, -3e5, 3e5);
    auto a = random_complex(n, 22);
    auto b = a;
    simd::scalar::rotate(a, ang);
    simd::avx2::rotate(b, ang);
    std::vector<cplx> pa(n), pb(n);
    simd::scalar::polar(pa, ang);
    simd::avx2::polar(pb, ang);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LT(std::abs(a[i] - b[i]), 2e-15 * (1 + std::abs(a[i])));
      EXPECT_LT(std::abs(pa[i] - pb[i]), 1e-15);
    }
  }
}

TEST(Kernels, Avx2NonlinearRotateMatchesScalar) {
  if (!have_avx2()) GTEST_SKIP() << "no AVX2";
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    for (std::size_t n : kSizes) {
      auto a = random_complex(n, 31, 2.0);
      auto b = a;
      simd::scalar::nonlinear_rotate(a, -0.37, p);
      simd::avx2::nonlinear_rotate(b, -0.37, p);
      for (std::size_t i = 0; i < n; ++i) EXPECT_LT(std::abs(a[i] - b[i]), 1e-14 * (1 + std::abs(a[i]))) << p;
    }
  }
}

TEST(Kernels, Avx2ReductionsMatchScalar) {
  if (!have_avx2()) GTEST_SKIP() << "no AVX2";
  for (std::size_t n : kSizes) {
    const auto a = random_complex(n, 41);
    const auto b = random_complex(n, 42);
    const auto w = random_real(n, 43, 0.0, 1.0);
    const double na = simd::scalar::weighted_norm2(a, w);
    EXPECT_NEAR(simd::avx2::weighted_norm2(a, w), na, 1e-13 * (1 + na));
    const cplx da = simd::scalar::weighted_dot(a, b, w);
    EXPECT_LT(std::abs(simd::avx2::weighted_dot(a, b, w) - da), 1e-13 * (1 + std::abs(da)));
    EXPECT_EQ(simd::avx2::max_abs(a), simd::scalar::max_abs(a));
  }
}

#endif

TEST(Kernels, DispatchCanBeForced) {
  const auto original = simd::active_backend();
  simd::force_backend(simd::Backend::scalar);
  EXPECT_EQ(simd::active_backend(), simd::Backend::scalar);
  std::vector<cplx> z = {{3.0, 4.0}};
  EXPECT_DOUBLE_EQ(simd::max_abs(z), 5.0);
  if (have_avx2()) {
    simd::force_backend(simd::Backend::avx2);
    EXPECT_EQ(simd::active_backend(), simd::Backend::avx2);
    EXPECT_DOUBLE_EQ(simd::max_abs(z), 5.0);
  } else {
    EXPECT_THROW(simd::force_backend(simd::Backend::avx2), std::invalid_argument);
  }
  simd::force_backend(original);
  EXPECT_EQ(simd::backend_name(simd::Backend::scalar), "scalar");
}

TEST(Kernels, NonlinearRotatePreservesModulus) {
  auto z = random_complex(333, 51);
  const auto before = z;
  simd::nonlinear_rotate(z, 1.3, 2.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(std::abs(z[i]), std::abs(before[i]), 1e-14);
    const double theta = 1.3 * std::norm(before[i]);
    EXPECT_LT(std::abs(z[i] - before[i] * std::polar(1.0, theta)), 1e-13);
  }
}
