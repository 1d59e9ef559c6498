#include "gnls/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gnls/diagnostics.hpp"
#include "gnls/simd/kernels.hpp"

namespace gnls {
namespace {

constexpr double kPi = std::numbers::pi;

void require_positive_time(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError(std::string(what) + " requires t > 0");
}

}  // namespace

SpectralFunction apply_free_phase(const SpectralFunction& g, double t) {
  std::vector<double> angle(g.samples());
  for (std::size_t k = 0; k < angle.size(); ++k) {
    const double xi = g.coordinate(k);
    angle[k] = -t * xi * xi;
  }
  std::vector<cplx> factor(angle.size());
  simd::polar(factor, angle);
  SpectralFunction out = g;
  for (int j = 0; j < out.edges(); ++j) simd::multiply(out.edge(j), factor);
  return out;
}

GraphFunction free_evolve_spectral(const TransformPlan& plan, const GraphFunction& f, double t) {
  if (!std::isfinite(t)) throw DomainError("free_evolve_spectral requires finite t");
  if (t == 0.0) return f;
  return inverse_F(plan, apply_free_phase(forward_F(plan, f), t));
}

GraphFunction free_evolve_kernel(const GraphFunction& f, double t) {
  require_positive_time(t, "free_evolve_kernel");
  const StarGraph& g = f.graph();
  const int N = g.intervals();
  if (N > kKernelMaxIntervals) throw PreconditionError("kernel oracle is limited to N <= 2048");
  const double h = g.spacing(Domain::space);
  const int n = g.edges();

  // K(r h) for r = -N..2N covers every x - y and x + y on the grid.
  const cplx pref = std::polar(1.0 / std::sqrt(4.0 * kPi * t), -kPi / 4.0) * h;
  std::vector<cplx> kernel(3 * static_cast<std::size_t>(N) + 1);
  for (int r = -N; r <= 2 * N; ++r) {
    const double d = r * h;
    kernel[r + N] = pref * std::polar(1.0, d * d / (4.0 * t));
  }
  const auto w = g.trapezoid_weights();
  auto apply = [&](std::span<const cplx> in, int sign) {
    std::vector<cplx> out(in.size());
    for (int m = 0; m <= N; ++m) {
      cplx acc = 0.0;
      for (int l = 0; l <= N; ++l) acc += w[l] * kernel[m + sign * l + N] * in[l];
      out[m] = acc;
    }
    return out;
  };

  std::vector<cplx> sum(g.samples(), 0.0);
  for (int j = 0; j < n; ++j) {
    const auto e = f.edge(j);
    for (std::size_t m = 0; m < sum.size(); ++m) sum[m] += e[m];
  }
  const auto reflected_sum = apply(sum, +1);
  GraphFunction out(g);
  for (int j = 0; j < n; ++j) {
    const auto direct = apply(f.edge(j), -1);
    const auto reflected = apply(f.edge(j), +1);
    auto o = out.edge(j);
    for (std::size_t m = 0; m < o.size(); ++m) o[m] = direct[m] - reflected[m] + (2.0 / n) * reflected_sum[m];
  }
  return out;
}

GraphFunction free_evolve_factorized(const TransformPlan& plan, const GraphFunction& f, double t) {
  require_positive_time(t, "free_evolve_factorized");
  return apply_M(t, apply_D(plan, t, forward_F(plan, apply_M(t, f))));
}

GraphFunction apply_J(const TransformPlan& plan, const GraphFunction& u, double t) {
  return free_evolve_spectral(plan, apply_X(free_evolve_spectral(plan, u, -t)), t);
}

double cubic_weight_ratio(const TransformPlan& plan, const GraphFunction& f, double t) {
  GraphFunction cube = f;
  for (auto& v : cube.values()) v *= std::norm(v);
  const double sup = lp_norm(f, std::numeric_limits<double>::infinity());
  const double rhs = sup * sup * l2_norm(apply_X(free_evolve_spectral(plan, f, -t)));
  if (rhs == 0.0) return 0.0;
  return l2_norm(apply_X(free_evolve_spectral(plan, cube, -t))) / rhs;
}

void EvolutionConfig::validate() const {
  if (lambda != 1 && lambda != -1) throw DomainError("lambda must be +1 or -1");
  if (!(power > 0.0) || !std::isfinite(power)) throw DomainError("power must be positive");
  if (!std::isfinite(t_start) || !std::isfinite(t_end) || !(t_end > t_start)) {
    throw DomainError("evolution window must satisfy t_start < t_end");
  }
  if (!(dt > 0.0) || dt > t_end - t_start) throw DomainError("dt must lie in (0, t_end - t_start]");
  if (!(max_dt > 0.0)) throw DomainError("max_dt must be positive");
  if (!(tol_support > 0.0) || !(tol_kirchhoff > 0.0)) throw DomainError("tolerances must be positive");
  for (double s : snapshot_times) {
    if (!(s >= t_start && s <= t_end)) throw DomainError("snapshot time outside the evolution window");
  }
}

double energy(const TransformPlan& plan, const GraphFunction& u, int lambda, double power) {
  const double grad = std::pow(l2_norm(derivative(plan, u)), 2);
  const double pot = std::pow(lp_norm(u, power + 2.0), power + 2.0);
  return 0.5 * grad - lambda * pot / (power + 2.0);
}

std::vector<double> geometric_times(double t_lo, double t_hi, int per_octave) {
  if (!(t_lo > 0.0) || !(t_hi >= t_lo) || per_octave < 1) throw DomainError("invalid geometric time grid");
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double t = t_lo * std::exp2(static_cast<double>(k) / per_octave);
    if (t > t_hi * (1.0 + 1e-12)) break;
    out.push_back(t);
  }
  if (out.back() < t_hi * (1.0 - 1e-12)) out.push_back(t_hi);
  return out;
}

namespace {

void check_finite(const GraphFunction& u, double t) {
  if (!u.all_finite()) {
    std::ostringstream msg;
    msg << "non-finite values in the solution at t=" << t;
    throw NumericalAbort(msg.str());
  }
}

}  // namespace

Trajectory nls_evolve(const TransformPlan& plan, const GraphFunction& u0, const EvolutionConfig& cfg,
                      const StepObserver& observer) {
  cfg.validate();
  plan.require(u0.graph());
  check_finite(u0, cfg.t_start);

  const auto k0 = kirchhoff_residual(u0);
  if (k0.continuity_defect > cfg.tol_kirchhoff || k0.flux_defect > cfg.tol_kirchhoff) {
    std::ostringstream msg;
    msg << "initial data fails the discrete Kirchhoff check at this grid spacing (continuity "
        << k0.continuity_defect << ", flux " << k0.flux_defect << ")";
    warn(msg.str());
  }

  std::vector<double> stops = cfg.snapshot_times;
  stops.push_back(cfg.t_end);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  Trajectory traj;
  auto& diag = traj.diagnostics;
  diag.initial_mass = std::pow(l2_norm(u0), 2);
  const double e0 = energy(plan, u0, cfg.lambda, cfg.power);
  traj.snapshots.push_back({cfg.t_start, u0});
  if (observer) observer(cfg.t_start, u0);

  GraphFunction u = u0;
  double t = cfg.t_start;
  std::size_t next = 0;
  while (next < stops.size() && stops[next] <= t) ++next;

  const double half = 0.5 * cfg.lambda;
  while (next < stops.size()) {
    double dt = cfg.dt;
    if (cfg.growth == StepGrowth::proportional) dt *= std::max(1.0, t);
    dt = std::min(dt, cfg.max_dt);
    const double target = stops[next];
    bool landed = false;
    // Absorb a sliver step into this one rather than taking a tiny step next.
    if (t + dt >= target - 1e-9 * dt) {
      dt = target - t;
      landed = true;
    }

    for (int j = 0; j < u.edges(); ++j) simd::nonlinear_rotate(u.edge(j), half * dt, cfg.power);
    u = free_evolve_spectral(plan, u, dt);
    for (int j = 0; j < u.edges(); ++j) simd::nonlinear_rotate(u.edge(j), half * dt, cfg.power);
    t = landed ? target : t + dt;
    ++diag.steps;

    check_finite(u, t);
    const double mass = std::pow(l2_norm(u), 2);
    diag.max_mass_drift = std::max(diag.max_mass_drift, std::abs(mass - diag.initial_mass));
    const auto k = kirchhoff_residual(u);
    diag.max_continuity_defect = std::max(diag.max_continuity_defect, k.continuity_defect);
    diag.max_flux_defect = std::max(diag.max_flux_defect, k.flux_defect);
    if (std::isnan(diag.support_breach_time) && tail_fraction(u) > cfg.tol_support) {
      diag.support_breach_time = t;
      std::ostringstream msg;
      msg << "support monitor: mass near the truncation point exceeds " << cfg.tol_support << " at t=" << t;
      if (cfg.abort_on_support_breach) throw NumericalAbort(msg.str());
      warn(msg.str());
    }
    if (observer) observer(t, u);

    if (landed) {
      traj.snapshots.push_back({t, u});
      diag.max_energy_drift = std::max(diag.max_energy_drift, std::abs(energy(plan, u, cfg.lambda, cfg.power) - e0));
      ++next;
    }
  }
  return traj;
}

}  // namespace gnls
