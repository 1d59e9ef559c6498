#include "gnls/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gnls/errors.hpp"

namespace gnls {

FitResult fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("fit_line: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw PreconditionError("fit_line needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0, ymax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
    ymax = std::max(ymax, std::abs(y[i]));
  }
  // Round-off level spread in y counts as constant.
  const double flat = 1e-14 * ymax;
  if (!(sxx > 0.0)) throw PreconditionError("fit_line: abscissae are all equal");
  FitResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.r_squared = syy > n * flat * flat ? (sxy * sxy) / (sxx * syy) : 1.0;
  r.n_points = static_cast<int>(n);
  r.window_lo = x[0];
  r.window_hi = x[n - 1];
  return r;
}

FitResult fit_decay_exponent(std::span<const double> times, std::span<const double> values, double lo, double hi) {
  if (times.size() != values.size()) throw ShapeError("fit_decay_exponent: times and values differ in length");
  if (!(lo > 0.0) || !(hi > lo)) throw DomainError("fit window must satisfy 0 < lo < hi");
  std::vector<double> lx, ly;
  int zeros = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t < lo * (1.0 - 1e-12) || t > hi * (1.0 + 1e-12)) continue;
    const double v = values[i];
    if (!std::isfinite(v) || v < 0.0) throw DomainError("fit_decay_exponent: values must be finite and >= 0");
    if (v == 0.0) {
      ++zeros;
      continue;
    }
    lx.push_back(std::log(t));
    ly.push_back(std::log(v));
  }
  const int count = static_cast<int>(lx.size()) + zeros;
  if (count < 5) throw PreconditionError("fit_decay_exponent needs at least 5 points in the window");
  FitResult r;
  if (zeros > 0) {
    r.slope = -std::numeric_limits<double>::infinity();
    r.intercept = 0.0;
    r.r_squared = 1.0;
  } else {
    r = fit_line(lx, ly);
  }
  r.window_lo = lo;
  r.window_hi = hi;
  r.n_points = count;
  return r;
}

const char* to_string(Comparison c) {
  switch (c) {
    case Comparison::less: return "<";
    case Comparison::less_equal: return "<=";
    case Comparison::greater_equal: return ">=";
    case Comparison::greater: return ">";
    case Comparison::abs_less_equal: return "|x|<=";
  }
  return "?";
}

Verdict judge(std::string name, double value, Comparison comparison, double threshold, double window_lo,
              double window_hi) {
  Verdict v{std::move(name), value, comparison, threshold, window_lo, window_hi, false};
  switch (comparison) {
    case Comparison::less: v.pass = value < threshold; break;
    case Comparison::less_equal: v.pass = value <= threshold; break;
    case Comparison::greater_equal: v.pass = value >= threshold; break;
    case Comparison::greater: v.pass = value > threshold; break;
    case Comparison::abs_less_equal: v.pass = std::abs(value) <= threshold; break;
  }
  return v;
}

}  // namespace gnls
