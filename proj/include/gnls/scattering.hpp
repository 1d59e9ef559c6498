#pragma once

// Long-time experiments for i u_t + Delta_K u + lambda |u|^p u = 0:
//
//  * the final state problem, solved by Picard iteration of
//      u = u_ap + i int_t^Tmax U(t-s){N(u) - N(u_ap)} ds
//              - i int_t^Tmax (2s)^{-1} U(t-s) R_{N(w)} ds + R_w,
//    with w = phi exp(i lambda/2 |phi|^2 log t), u_ap = M D w,
//    R_f = M D F (M - 1) F^{-1} f and N(u) = -lambda |u|^2 u;
//  * modified scattering data (gauge B, limits W and Psi) for the initial value problem;
//  * the pairing functional used to detect failure of scattering for p <= 2.
//
// Final data phi, profiles w, W and Psi are frequency-grid fields.

#include <limits>
#include <string>
#include <vector>

#include "gnls/fit.hpp"
#include "gnls/propagator.hpp"

namespace gnls {

/// Per-edge residual history with a fitted decay exponent.
struct ScatterReport {
  std::string name;
  std::vector<double> times;
  std::vector<std::vector<double>> residual_l2;    // [edge][time]
  std::vector<std::vector<double>> residual_linf;  // [edge][time]
  std::vector<double> total;                       // the fitted series
  FitResult fit;
  std::vector<FitResult> edge_fits;                // per-edge fits (final state only)
  Verdict verdict;

  double fitted_exponent() const { return fit.slope; }
};

// ---------------------------------------------------------------- final state

struct FinalStateProfile {
  SpectralFunction phi;
  int lambda = 1;
  double t = 1.0;
  SpectralFunction w;
  GraphFunction u_ap;
};

/// w = phi exp(i lambda/2 |phi|^2 log t) (log_phase = false drops the phase) and u_ap = M D w.
/// Throws PreconditionError if phi is not continuous at the vertex.
FinalStateProfile build_final_profile(const TransformPlan& plan, const SpectralFunction& phi, int lambda, double t,
                                      bool log_phase = true);

/// M D F (M - 1) F^{-1} f at time t.
GraphFunction final_state_remainder(const TransformPlan& plan, const SpectralFunction& f, double t);

struct FinalStateOptions {
  int lambda = 1;
  double alpha = 0.3;
  double T = 20.0;
  double T_max = 320.0;
  int per_octave = 16;  // time grid density; an even interval count is enforced
  int max_iters = 8;
  double tol = 1e-10;  // on sup_t t^alpha ||v^{k+1} - v^k||_Y, relative to ||u_ap||_X
  /// Switch for testing: N == 0 turns both Duhamel integrals off.
  bool nonlinear = true;
  /// Relative Richardson estimate above which the Duhamel quadrature is rejected.
  double duhamel_tol = 1e-3;
  double slope_slack = 0.1;    // residual verdict: slope <= -alpha + slack
  double ablation_gap = 0.1;   // ablation verdict: slope degrades by at least this
};

/// Trajectory on the time grid t_0 = T < ... < t_K = T_max.
using TimeSeries = std::vector<GraphFunction>;

/// The truncated integral equation on a fixed time grid.
class FinalStateProblem {
 public:
  FinalStateProblem(const TransformPlan& plan, const SpectralFunction& phi, const FinalStateOptions& options);

  const TransformPlan& plan() const { return *plan_; }
  const FinalStateOptions& options() const { return options_; }
  const std::vector<double>& times() const { return times_; }
  const SpectralFunction& phi() const { return phi_; }
  const TimeSeries& u_ap() const { return u_ap_; }
  /// R_w(t) on the grid.
  const TimeSeries& remainder() const { return r_w_; }

  /// Phi(v) on the grid. Throws PreconditionError when the Duhamel quadrature
  /// fails its self-consistency check.
  TimeSeries picard_step(const TimeSeries& v) const;

  /// ||f(t)||_Y = ||f(t)||_2 + (int_t^Tmax ||f||_inf^4)^{1/4}, per grid time.
  std::vector<double> y_norms(const TimeSeries& f) const;
  /// sup_t t^alpha ||f(t)||_Y.
  double x_norm(const TimeSeries& f) const;

  /// Relative Richardson error estimate of the last picard_step's Duhamel quadrature.
  double last_quadrature_error() const { return quad_error_; }

 private:
  TimeSeries duhamel(const std::vector<SpectralFunction>& integrand) const;

  const TransformPlan* plan_;
  FinalStateOptions options_;
  SpectralFunction phi_;
  std::vector<double> times_;
  TimeSeries u_ap_;
  TimeSeries r_w_;
  TimeSeries source_;  // -i int (2s)^{-1} U(t-s) R_{N(w)} ds, fixed
  mutable double quad_error_ = 0.0;
};

struct FinalStateResult {
  std::vector<double> times;
  TimeSeries u;
  std::vector<double> contraction;  // ||v^{k+1} - v^k||_X / ||v^k - v^{k-1}||_X
  double kappa = 0.0;               // max of contraction
  int iterations = 0;
  bool converged = false;
  double rho = 0.0;                 // ||u - u_ap||_X
  double tail_bound = 0.0;          // rho ||phi||_inf^2 T_max^{-alpha} / alpha
  double quadrature_error = 0.0;
  ScatterReport residual;           // ||u_j - (u_ap)_j||_{L2(e_j)}
  ScatterReport ablation;           // same against M D phi (no log phase)
  std::vector<Verdict> verdicts;    // convergence, kappa, slope, ablation gap
};

/// Iterates picard_step from v^0 = u_ap until the X-norm increment drops below tol
/// or max_iters is reached.
FinalStateResult run_final_state(const TransformPlan& plan, const SpectralFunction& phi,
                                 const FinalStateOptions& options);

struct CalibrationPoint {
  double phi_sup;
  double T;
  double kappa;
};

/// Two Picard steps per (amplitude scale, T) pair; kappa = ratio of the increments.
std::vector<CalibrationPoint> calibrate_final_state(const TransformPlan& plan, const SpectralFunction& phi,
                                                    const FinalStateOptions& options,
                                                    const std::vector<double>& scales,
                                                    const std::vector<double>& starts);

// ------------------------------------------------------ initial value problem

struct ModifiedPhaseState {
  double t = 1.0;
  SpectralFunction Fv;              // F U(-t) u(t)
  SpectralFunction B;               // exp(-i lambda/2 phase_integral)
  SpectralFunction Fw;              // B Fv
  SpectralFunction phase_integral;  // int_1^t |Fv|^2 ds/s (real)
};

/// F U(-t) u = exp(i t k^2) F u.
SpectralFunction profile_transform(const TransformPlan& plan, const GraphFunction& u, double t);

/// State at the reference time t0 (phase integral zero, B = 1).
ModifiedPhaseState initial_phase_state(const TransformPlan& plan, const GraphFunction& u, double t0 = 1.0);

/// Advances Fv, the phase integral (trapezoid in log s), B and Fw to t_next.
/// Throws DomainError unless t_next > state.t.
ModifiedPhaseState gauge_advance(const TransformPlan& plan, const ModifiedPhaseState& state,
                                 const GraphFunction& u_next, double t_next, int lambda);

struct Remainders {
  double I1_linf = 0.0;
  double I1_l2 = 0.0;
  double I2_linf = 0.0;
  double I2_l2 = 0.0;
};

/// I1 = F(M(-t) - 1)F^{-1}(|F M(t) v|^2 F M(t) v), I2 = |F M(t) v|^2 F M(t) v - |Fv|^2 Fv,
/// where v = F^{-1} Fv.
Remainders compute_remainders(const TransformPlan& plan, const SpectralFunction& Fv, double t);

struct ScatteringOptions {
  double fit_lo = 10.0;
  double fit_hi = 1000.0;
  double profile_slope = -0.15;    // ||Fw - W||_inf
  double composite_slope = -0.10;  // (Fv)_j - exp(i lambda/2 |W_j|^2 log t + i Psi_j) W_j
  double physical_slope = -0.60;   // u - asymptotic formula, sup norm
};

struct ScatteringData {
  SpectralFunction W;
  SpectralFunction Psi;  // real
  std::vector<double> times;
  ScatterReport profile;
  ScatterReport composite;
  ScatterReport physical;
  std::vector<double> cauchy_times;  // t with 2t also stored
  std::vector<double> cauchy;        // ||Fw(2t) - Fw(t)||_inf
  double gauge_identity_error = 0.0; // Fv(T_max) rebuilt from W and Psi
  double max_gauge_modulus_error = 0.0;  // max | |B| - 1 |
};

/// W = Fw(T_max), Psi = Theta(T_max) from the stored snapshots, which must include
/// t = 1 and reach fit_hi; the phase integral runs over the snapshots with t >= 1.
/// Throws PreconditionError when the window spans less than two decades or the
/// trajectory does not cover it.
ScatteringData extract_scattering_data(const TransformPlan& plan, const Trajectory& trajectory, int lambda,
                                       const ScatteringOptions& options = {});

struct LinftyDecomposition {
  double lhs = 0.0;         // ||u||_inf
  double profile = 0.0;     // t^{-1/2} ||F U(-t) u||_inf
  double weighted = 0.0;    // t^{-1/2-alpha} ||U(-t) u||_{H^{0,1}}
  double ratio = 0.0;       // lhs / (profile + weighted)
};

LinftyDecomposition check_linfty_decomposition(const TransformPlan& plan, const GraphFunction& u, double t,
                                               double alpha);

// ----------------------------------------------------- failure of scattering

/// Test function with F phi = -G / ||G||, G = lambda |u~|^p u~, u~ = D^{-1} M^{-1} u(t_ref).
GraphFunction failure_test_function(const TransformPlan& plan, const GraphFunction& u_ref, double t_ref,
                                    int lambda, double power);

struct FailureHistory {
  double power = 2.0;
  std::vector<double> times;
  std::vector<double> pairing;    // Re <G(u~), w~>, w~ = F M(t) phi
  std::vector<double> integral;   // int_T^t s^{-p/2} (-pairing) ds
  std::vector<double> mass_u;     // ||u(t)||_2
  std::vector<double> mass_w;     // ||w~(t)||_2 = ||U(t) phi||_2
  std::vector<double> weak_form;  // |i(<u,w>(t) - <u,w>(T)) + int_T^t <G(u), w> ds|
  double pairing_bound = 0.0;     // max |<u, w>|
};

/// Pairing history over the snapshots with t >= T. Integrals use the trapezoid
/// rule in log s. Throws DomainError for power <= 0.
FailureHistory failure_functional(const TransformPlan& plan, const Trajectory& trajectory,
                                  const GraphFunction& phi_test, int lambda, double power, double T);

}  // namespace gnls
