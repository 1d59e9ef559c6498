#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "gnls/errors.hpp"
#include "gnls/fit.hpp"

using namespace gnls;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return t;
}

}  // namespace

TEST(FitDecay, ExactPowerLaw) {
  const auto t = log_grid(1, 1000, 31);
  std::vector<double> v;
  for (double s : t) v.push_back(3.0 / std::sqrt(s));
  const auto r = fit_decay_exponent(t, v, 1, 1000);
  EXPECT_NEAR(r.slope, -0.5, 1e-12);
  EXPECT_NEAR(r.intercept, std::log(3.0), 1e-12);
  EXPECT_NEAR(r.r_squared, 1.0, 1e-12);
  EXPECT_EQ(r.n_points, 31);
}

TEST(FitDecay, LogCorrectedPowerLaw) {
  const auto t = log_grid(10, 1000, 41);
  std::vector<double> v;
  for (double s : t) v.push_back(std::log(s) / std::sqrt(s));
  // Local slope is -1/2 + 1/log t, from -0.066 at t = 10 to -0.355 at t = 1000.
  // The least-squares average over the window is about -0.27, well above -0.35.
  const auto r = fit_decay_exponent(t, v, 10, 1000);
  EXPECT_GT(r.slope, -0.355);
  EXPECT_LT(r.slope, -0.066);
  EXPECT_NEAR(r.slope, -0.27, 0.01);
}

TEST(FitDecay, ConstantAndWindow) {
  const auto t = log_grid(1, 1e4, 50);
  std::vector<double> v(t.size(), 2.0);
  auto r = fit_decay_exponent(t, v, 1, 1e4);
  EXPECT_NEAR(r.slope, 0.0, 1e-14);
  EXPECT_EQ(r.r_squared, 1.0);
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = t[i] < 100 ? 1.0 / t[i] : 1.0 / (t[i] * t[i]);
  r = fit_decay_exponent(t, v, 200, 1e4);
  EXPECT_NEAR(r.slope, -2.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.window_lo, 200);
}

TEST(FitDecay, ZeroSentinelAndErrors) {
  const auto t = log_grid(1, 100, 10);
  std::vector<double> v(t.size(), 0.0);
  EXPECT_EQ(fit_decay_exponent(t, v, 1, 100).slope, -std::numeric_limits<double>::infinity());
  v[3] = -1.0;
  EXPECT_THROW(fit_decay_exponent(t, v, 1, 100), DomainError);
  std::vector<double> ok(t.size(), 1.0);
  EXPECT_THROW(fit_decay_exponent(t, ok, 50, 100), PreconditionError);
  EXPECT_THROW(fit_decay_exponent(t, ok, 0, 100), DomainError);
}

TEST(FitLine, SlopeAndVerdicts) {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const auto r = fit_line(x, y);
  EXPECT_NEAR(r.slope, 2.0, 1e-14);
  EXPECT_NEAR(r.intercept, 1.0, 1e-14);
  EXPECT_TRUE(judge("s", r.slope, Comparison::greater, 0.0).pass);
  EXPECT_FALSE(judge("s", -0.1, Comparison::greater_equal, 0.0).pass);
  EXPECT_TRUE(judge("s", -0.01, Comparison::abs_less_equal, 0.02).pass);
  const auto v = judge("s", -0.3, Comparison::less_equal, -0.2, 10, 1000);
  EXPECT_TRUE(v.pass);
  EXPECT_EQ(v.window_hi, 1000);
}
