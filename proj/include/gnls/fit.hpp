#pragma once

// Least-squares rate fits and the verdict record every experiment reports.

#include <span>
#include <string>

namespace gnls {

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  int n_points = 0;
};

/// Ordinary least squares y = slope * x + intercept over all points.
/// Throws PreconditionError with fewer than two points or constant x.
/// r_squared is 1 when y is constant.
FitResult fit_line(std::span<const double> x, std::span<const double> y);

/// OLS of log(value) against log(time) over times in [lo, hi].
/// Needs at least 5 points in the window (PreconditionError). Negative or
/// non-finite values throw DomainError; an exact zero inside the window gives
/// slope = -inf (a residual that vanished), r_squared = 1.
FitResult fit_decay_exponent(std::span<const double> times, std::span<const double> values, double lo, double hi);

enum class Comparison { less, less_equal, greater_equal, greater, abs_less_equal };

/// A judged quantity together with the threshold and window it was judged against.
struct Verdict {
  std::string name;
  double value = 0.0;
  Comparison comparison = Comparison::less_equal;
  double threshold = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  bool pass = false;
};

Verdict judge(std::string name, double value, Comparison comparison, double threshold, double window_lo = 0.0,
              double window_hi = 0.0);

const char* to_string(Comparison c);

}  // namespace gnls
