#pragma once

// Free propagator e^{it Delta_K} by three routes, and the split-step solver for
//
//   i u_t + Delta_K u + lambda |u|^p u = 0.

#include <functional>
#include <limits>
#include <vector>

#include "gnls/transforms.hpp"

namespace gnls {

/// inverse_F(exp(-i t k^2) forward_F(f)); any real t.
GraphFunction free_evolve_spectral(const TransformPlan& plan, const GraphFunction& f, double t);

/// Multiplies a frequency field by exp(-i t k^2).
SpectralFunction apply_free_phase(const SpectralFunction& g, double t);

/// Explicit-kernel oracle: (U^- - U^+) I + (2/n) U^+ J with
/// U^{+-} f(x) = int_0^L (4 pi i t)^{-1/2} exp(i (x +- y)^2 / 4t) f(y) dy by the trapezoid rule.
/// O(N^2) per edge; throws PreconditionError for N > kKernelMaxIntervals and DomainError for t <= 0.
GraphFunction free_evolve_kernel(const GraphFunction& f, double t);
inline constexpr int kKernelMaxIntervals = 2048;

/// M(t) D(t) F M(t) f. Throws DomainError for t <= 0.
GraphFunction free_evolve_factorized(const TransformPlan& plan, const GraphFunction& f, double t);

/// J(t) u = U(t) X U(-t) u.
GraphFunction apply_J(const TransformPlan& plan, const GraphFunction& u, double t);

/// ||X U(-t)(|f|^2 f)|| / (||f||_inf^2 ||X U(-t) f||): the empirical constant c0.
double cubic_weight_ratio(const TransformPlan& plan, const GraphFunction& f, double t);

enum class StepGrowth {
  fixed,         // dt
  proportional,  // dt * max(1, t), capped by max_dt
};

struct EvolutionConfig {
  int lambda = 1;  // +1 focusing, -1 defocusing
  double power = 2.0;
  double t_start = 0.0;
  double t_end = 1.0;
  double dt = 1e-2;
  StepGrowth growth = StepGrowth::fixed;
  double max_dt = std::numeric_limits<double>::infinity();
  double tol_support = kSupportTolerance;
  double tol_kirchhoff = 1e-6;
  /// Extra times (inside [t_start, t_end]) where the state is stored; steps are
  /// shortened to land on them. t_start and t_end are always stored.
  std::vector<double> snapshot_times;
  /// Abort (NumericalAbort) instead of warning when the support monitor trips.
  bool abort_on_support_breach = false;

  /// Throws DomainError on an inconsistent configuration.
  void validate() const;
};

struct Snapshot {
  double t;
  GraphFunction u;
};

struct EvolutionDiagnostics {
  double initial_mass = 0.0;          // ||u0||_2^2
  double max_mass_drift = 0.0;        // max_t |mass(t) - mass(0)|
  double max_continuity_defect = 0.0;
  double max_flux_defect = 0.0;
  double max_energy_drift = 0.0;      // over stored snapshots
  double support_breach_time = std::numeric_limits<double>::quiet_NaN();
  long steps = 0;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  EvolutionDiagnostics diagnostics;
};

/// Called with (t, u) at t_start and after every step.
using StepObserver = std::function<void(double, const GraphFunction&)>;

/// Strang splitting: exact nonlinear phase half step, exact linear step through F,
/// nonlinear half step. Throws NumericalAbort on non-finite values.
Trajectory nls_evolve(const TransformPlan& plan, const GraphFunction& u0, const EvolutionConfig& cfg,
                      const StepObserver& observer = {});

/// 1/2 ||u'||^2 - lambda/(p+2) int |u|^{p+2}.
double energy(const TransformPlan& plan, const GraphFunction& u, int lambda, double power);

/// t_lo * 2^{k / per_octave} up to and including t_hi (t_hi appended if not hit).
std::vector<double> geometric_times(double t_lo, double t_hi, int per_octave);

}  // namespace gnls
