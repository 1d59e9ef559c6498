#include "gnls/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gnls/diagnostics.hpp"
#include "gnls/simd/kernels.hpp"

namespace gnls {
namespace {

constexpr cplx kI(0.0, 1.0);
const double kInf = std::numeric_limits<double>::infinity();

// lambda |f|^p f; for p = 2 this is -N(f).
template <Domain D>
Field<D> power_nonlinearity(const Field<D>& f, double coef, double power) {
  Field<D> out = f;
  for (auto& v : out.values()) v *= coef * std::pow(std::abs(v), power);
  return out;
}

template <Domain D>
Field<D> cube(const Field<D>& f) {
  Field<D> out = f;
  for (auto& v : out.values()) v *= std::norm(v);
  return out;
}

template <Domain D>
void require_vertex_continuity(const Field<D>& f, const char* what) {
  const double sup = lp_norm(f, kInf);
  const auto k = kirchhoff_residual(f);
  if (k.continuity_defect > 1e-10 * std::max(sup, 1e-300) && k.continuity_defect > 1e-14) {
    std::ostringstream msg;
    msg << what << " is not continuous at the vertex (defect " << k.continuity_defect << ")";
    throw PreconditionError(msg.str());
  }
}

double edge_l2(std::span<const cplx> e, std::span<const double> w, double h) {
  return std::sqrt(h * simd::weighted_norm2(e, w));
}

template <Domain D>
void edge_norms(const Field<D>& f, std::vector<std::vector<double>>& l2, std::vector<std::vector<double>>& linf) {
  const auto w = f.graph().trapezoid_weights();
  for (int j = 0; j < f.edges(); ++j) {
    l2[j].push_back(edge_l2(f.edge(j), w, f.spacing()));
    linf[j].push_back(simd::max_abs(f.edge(j)));
  }
}

ScatterReport empty_report(std::string name, int edges) {
  ScatterReport r;
  r.name = std::move(name);
  r.residual_l2.assign(edges, {});
  r.residual_linf.assign(edges, {});
  return r;
}

// Times T (T_max / T)^{k / K} with K even and at least per_octave * log2(T_max / T).
std::vector<double> even_log_grid(double T, double T_max, int per_octave) {
  int K = static_cast<int>(std::ceil(per_octave * std::log2(T_max / T) - 1e-9));
  K = std::max(K, 2);
  if (K % 2) ++K;
  std::vector<double> t(K + 1);
  for (int k = 0; k <= K; ++k) t[k] = T * std::pow(T_max / T, static_cast<double>(k) / K);
  t[K] = T_max;
  return t;
}

}  // namespace

// ---------------------------------------------------------------- final state

FinalStateProfile build_final_profile(const TransformPlan& plan, const SpectralFunction& phi, int lambda, double t,
                                      bool log_phase) {
  if (!(t > 0.0)) throw DomainError("build_final_profile requires t > 0");
  plan.require(phi.graph());
  require_vertex_continuity(phi, "final data phi");
  FinalStateProfile p{phi, lambda, t, phi, GraphFunction(phi.graph())};
  if (log_phase) {
    const double c = 0.5 * lambda * std::log(t);
    for (auto& v : p.w.values()) v *= std::polar(1.0, c * std::norm(v));
  }
  p.u_ap = apply_M(t, apply_D(plan, t, p.w));
  return p;
}

GraphFunction final_state_remainder(const TransformPlan& plan, const SpectralFunction& f, double t) {
  const GraphFunction g = inverse_F(plan, f);
  const GraphFunction h = apply_M(t, g) - g;
  return apply_M(t, apply_D(plan, t, forward_F(plan, h)));
}

FinalStateProblem::FinalStateProblem(const TransformPlan& plan, const SpectralFunction& phi,
                                     const FinalStateOptions& options)
    : plan_(&plan), options_(options), phi_(phi) {
  const auto& o = options_;
  if (o.lambda != 1 && o.lambda != -1) throw DomainError("lambda must be +1 or -1");
  if (!(o.alpha > 0.25 && o.alpha < 0.5)) throw DomainError("alpha must lie in (1/4, 1/2)");
  if (!(o.T > 0.0) || !(o.T_max > o.T)) throw DomainError("final state window must satisfy 0 < T < T_max");
  if (o.per_octave < 1 || o.max_iters < 1) throw DomainError("per_octave and max_iters must be positive");
  plan.require(phi.graph());
  require_vertex_continuity(phi, "final data phi");

  times_ = even_log_grid(o.T, o.T_max, o.per_octave);
  for (double t : times_) {
    const auto prof = build_final_profile(plan, phi_, o.lambda, t);
    u_ap_.push_back(prof.u_ap);
    r_w_.push_back(final_state_remainder(plan, prof.w, t));
    if (o.nonlinear) {
      // (2t)^{-1} R_{N(w)} with N(w) = -lambda |w|^2 w.
      const auto nw = cplx(-o.lambda) * cube(prof.w);
      source_.push_back(cplx(1.0 / (2.0 * t)) * final_state_remainder(plan, nw, t));
    }
  }
  if (o.nonlinear) {
    std::vector<SpectralFunction> hat;
    hat.reserve(times_.size());
    for (std::size_t k = 0; k < times_.size(); ++k) {
      hat.push_back(apply_free_phase(forward_F(plan, source_[k]), -times_[k]));
    }
    auto k2 = duhamel(hat);
    for (auto& f : k2) f *= -kI;
    source_ = std::move(k2);
  } else {
    source_.assign(times_.size(), GraphFunction(phi.graph()));
  }
}

// U(t_k) int_{t_k}^{T_max} U(-s) G(s) ds from hat_k = exp(i t_k k^2) F G(t_k), by the
// trapezoid rule in log s on the grid, with a Richardson check against every other node.
TimeSeries FinalStateProblem::duhamel(const std::vector<SpectralFunction>& hat) const {
  if (hat.empty()) return {};
  const std::size_t K = times_.size() - 1;
  std::vector<SpectralFunction> acc(K + 1, SpectralFunction(phi_.graph()));
  for (std::size_t k = K; k-- > 0;) {
    const double ds = std::log(times_[k + 1] / times_[k]);
    acc[k] = acc[k + 1];
    auto a = acc[k].values();
    const auto& lo = hat[k].values();
    const auto& hi = hat[k + 1].values();
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] += 0.5 * ds * (times_[k] * lo[i] + times_[k + 1] * hi[i]);
    }
  }
  SpectralFunction coarse(phi_.graph());
  for (std::size_t k = 0; k + 2 <= K; k += 2) {
    const double ds = std::log(times_[k + 2] / times_[k]);
    auto c = coarse.values();
    const auto& lo = hat[k].values();
    const auto& hi = hat[k + 2].values();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += 0.5 * ds * (times_[k] * lo[i] + times_[k + 2] * hi[i]);
  }
  const double full = l2_norm(acc[0]);
  const double err = full > 0.0 ? l2_norm(coarse - acc[0]) / (3.0 * full) : 0.0;
  quad_error_ = std::max(quad_error_, err);
  if (err > options_.duhamel_tol) {
    std::ostringstream msg;
    msg << "Duhamel quadrature self-check failed (relative error " << err << " > " << options_.duhamel_tol
        << "); refine the time grid, e.g. per_octave = " << 2 * options_.per_octave;
    throw PreconditionError(msg.str());
  }
  TimeSeries out;
  out.reserve(K + 1);
  for (std::size_t k = 0; k <= K; ++k) out.push_back(inverse_F(*plan_, apply_free_phase(acc[k], times_[k])));
  return out;
}

TimeSeries FinalStateProblem::picard_step(const TimeSeries& v) const {
  if (v.size() != times_.size()) throw ShapeError("picard_step: trajectory does not match the time grid");
  TimeSeries out;
  out.reserve(v.size());
  if (!options_.nonlinear) {
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(u_ap_[k] + r_w_[k]);
    return out;
  }
  const cplx coef(-options_.lambda);
  std::vector<SpectralFunction> hat;
  hat.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto g = coef * (cube(v[k]) - cube(u_ap_[k]));
    hat.push_back(apply_free_phase(forward_F(*plan_, g), -times_[k]));
  }
  const auto k1 = duhamel(hat);
  for (std::size_t k = 0; k < v.size(); ++k) {
    out.push_back(u_ap_[k] + r_w_[k] + kI * k1[k] + source_[k]);
  }
  return out;
}

std::vector<double> FinalStateProblem::y_norms(const TimeSeries& f) const {
  if (f.size() != times_.size()) throw ShapeError("y_norms: trajectory does not match the time grid");
  const std::size_t K = times_.size() - 1;
  std::vector<double> sup4(K + 1), tail(K + 1, 0.0), out(K + 1);
  for (std::size_t k = 0; k <= K; ++k) sup4[k] = std::pow(lp_norm(f[k], kInf), 4);
  for (std::size_t k = K; k-- > 0;) {
    const double ds = std::log(times_[k + 1] / times_[k]);
    tail[k] = tail[k + 1] + 0.5 * ds * (times_[k] * sup4[k] + times_[k + 1] * sup4[k + 1]);
  }
  for (std::size_t k = 0; k <= K; ++k) out[k] = l2_norm(f[k]) + std::pow(tail[k], 0.25);
  return out;
}

double FinalStateProblem::x_norm(const TimeSeries& f) const {
  const auto y = y_norms(f);
  double m = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) m = std::max(m, std::pow(times_[k], options_.alpha) * y[k]);
  return m;
}

namespace {

TimeSeries difference(const TimeSeries& a, const TimeSeries& b) {
  TimeSeries d;
  d.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d.push_back(a[k] - b[k]);
  return d;
}

ScatterReport edge_residual_report(std::string name, const std::vector<double>& times, const TimeSeries& a,
                                   const TimeSeries& b, double lo, double hi) {
  const int n = a.front().edges();
  auto r = empty_report(std::move(name), n);
  r.times = times;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto d = a[k] - b[k];
    edge_norms(d, r.residual_l2, r.residual_linf);
    double m = 0.0;
    for (int j = 0; j < n; ++j) m = std::max(m, r.residual_l2[j].back());
    r.total.push_back(m);
  }
  r.fit = fit_decay_exponent(r.times, r.total, lo, hi);
  for (int j = 0; j < n; ++j) r.edge_fits.push_back(fit_decay_exponent(r.times, r.residual_l2[j], lo, hi));
  return r;
}

double worst_slope(const ScatterReport& r) {
  double s = -kInf;
  for (const auto& f : r.edge_fits) s = std::max(s, f.slope);
  return s;
}

}  // namespace

FinalStateResult run_final_state(const TransformPlan& plan, const SpectralFunction& phi,
                                 const FinalStateOptions& options) {
  const FinalStateProblem problem(plan, phi, options);
  FinalStateResult res;
  res.times = problem.times();
  TimeSeries v = problem.u_ap();
  const double scale = std::max(problem.x_norm(v), 1e-300);
  double prev = 0.0;
  for (int it = 1; it <= options.max_iters; ++it) {
    TimeSeries next = problem.picard_step(v);
    const double inc = problem.x_norm(difference(next, v));
    if (prev > 0.0) res.contraction.push_back(inc / prev);
    v = std::move(next);
    res.iterations = it;
    if (inc <= options.tol * scale) {
      res.converged = true;
      break;
    }
    prev = inc;
  }
  for (double c : res.contraction) res.kappa = std::max(res.kappa, c);
  res.quadrature_error = problem.last_quadrature_error();

  const auto dev = difference(v, problem.u_ap());
  res.rho = problem.x_norm(dev);
  const double sup = lp_norm(phi, kInf);
  res.tail_bound = res.rho * sup * sup * std::pow(options.T_max, -options.alpha) / options.alpha;

  const double lo = options.T, hi = options.T_max;
  res.residual = edge_residual_report("final_state_residual", res.times, v, problem.u_ap(), lo, hi);
  TimeSeries plain;
  for (double t : res.times) plain.push_back(build_final_profile(plan, phi, options.lambda, t, false).u_ap);
  res.ablation = edge_residual_report("ablation_residual", res.times, v, plain, lo, hi);

  const double slope = worst_slope(res.residual);
  res.residual.verdict =
      judge("residual_slope", slope, Comparison::less_equal, -options.alpha + options.slope_slack, lo, hi);
  res.ablation.verdict = judge("ablation_slope", worst_slope(res.ablation), Comparison::greater_equal,
                               slope + options.ablation_gap, lo, hi);
  res.u = std::move(v);

  res.verdicts.push_back(judge("picard_iterations", res.iterations, Comparison::less_equal, options.max_iters));
  res.verdicts.back().pass = res.converged;
  res.verdicts.push_back(judge("contraction_kappa", res.kappa, Comparison::less, 0.9));
  res.verdicts.push_back(res.residual.verdict);
  if (sup > 0.0) {
    res.verdicts.push_back(judge("ablation_slope_gap", worst_slope(res.ablation) - slope, Comparison::greater_equal,
                                 options.ablation_gap, lo, hi));
  }
  return res;
}

std::vector<CalibrationPoint> calibrate_final_state(const TransformPlan& plan, const SpectralFunction& phi,
                                                    const FinalStateOptions& options,
                                                    const std::vector<double>& scales,
                                                    const std::vector<double>& starts) {
  std::vector<CalibrationPoint> out;
  const double ratio = options.T_max / options.T;
  for (double T : starts) {
    for (double s : scales) {
      FinalStateOptions o = options;
      o.T = T;
      o.T_max = T * ratio;
      const auto scaled = cplx(s) * phi;
      const FinalStateProblem problem(plan, scaled, o);
      const auto v1 = problem.picard_step(problem.u_ap());
      const auto v2 = problem.picard_step(v1);
      const auto v3 = problem.picard_step(v2);
      const double d1 = problem.x_norm(difference(v2, v1));
      const double d2 = problem.x_norm(difference(v3, v2));
      out.push_back({lp_norm(scaled, kInf), T, d1 > 0.0 ? d2 / d1 : 0.0});
    }
  }
  return out;
}

// ------------------------------------------------------ initial value problem

SpectralFunction profile_transform(const TransformPlan& plan, const GraphFunction& u, double t) {
  return apply_free_phase(forward_F(plan, u), -t);
}

ModifiedPhaseState initial_phase_state(const TransformPlan& plan, const GraphFunction& u, double t0) {
  if (!(t0 > 0.0)) throw DomainError("initial_phase_state requires t0 > 0");
  ModifiedPhaseState s{t0, profile_transform(plan, u, t0), SpectralFunction(u.graph()), SpectralFunction(u.graph()),
                       SpectralFunction(u.graph())};
  for (auto& b : s.B.values()) b = 1.0;
  s.Fw = s.Fv;
  return s;
}

ModifiedPhaseState gauge_advance(const TransformPlan& plan, const ModifiedPhaseState& state,
                                 const GraphFunction& u_next, double t_next, int lambda) {
  if (!(t_next > state.t) || !std::isfinite(t_next)) throw DomainError("gauge_advance needs increasing times");
  ModifiedPhaseState s{t_next, profile_transform(plan, u_next, t_next), SpectralFunction(u_next.graph()),
                       SpectralFunction(u_next.graph()), state.phase_integral};
  const double half_ds = 0.5 * std::log(t_next / state.t);
  auto ph = s.phase_integral.values();
  const auto a = state.Fv.values();
  const auto b = s.Fv.values();
  std::vector<double> angle(ph.size());
  for (std::size_t i = 0; i < ph.size(); ++i) {
    ph[i] = ph[i].real() + half_ds * (std::norm(a[i]) + std::norm(b[i]));
    angle[i] = -0.5 * lambda * ph[i].real();
  }
  simd::polar(s.B.values(), angle);
  s.Fw = s.Fv;
  simd::multiply(s.Fw.values(), s.B.values());
  return s;
}

Remainders compute_remainders(const TransformPlan& plan, const SpectralFunction& Fv, double t) {
  if (!(t > 0.0)) throw DomainError("compute_remainders requires t > 0");
  const GraphFunction v = inverse_F(plan, Fv);
  const SpectralFunction fmv = forward_F(plan, apply_M(t, v));
  const SpectralFunction c = cube(fmv);
  const GraphFunction g = inverse_F(plan, c);
  const SpectralFunction i1 = forward_F(plan, apply_M(t, g, Direction::inverse) - g);
  const SpectralFunction i2 = c - cube(Fv);
  return {lp_norm(i1, kInf), l2_norm(i1), lp_norm(i2, kInf), l2_norm(i2)};
}

ScatteringData extract_scattering_data(const TransformPlan& plan, const Trajectory& trajectory, int lambda,
                                       const ScatteringOptions& options) {
  if (!(options.fit_lo > 0.0) || options.fit_hi < 100.0 * options.fit_lo * (1.0 - 1e-12)) {
    throw PreconditionError("scattering fit window must span at least two decades");
  }
  std::vector<const Snapshot*> snaps;
  for (const auto& s : trajectory.snapshots) {
    if (s.t >= 1.0 - 1e-12) snaps.push_back(&s);
  }
  if (snaps.empty() || std::abs(snaps.front()->t - 1.0) > 1e-12) {
    throw PreconditionError("trajectory must store a snapshot at t = 1");
  }
  if (snaps.back()->t < options.fit_hi * (1.0 - 1e-12)) {
    throw PreconditionError("trajectory is too short for the fit window");
  }
  const StarGraph& g = snaps.front()->u.graph();
  plan.require(g);
  const int n = g.edges();

  ScatteringData d{SpectralFunction(g), SpectralFunction(g), {}, {}, {}, {}, {}, {}, 0.0, 0.0};
  std::vector<SpectralFunction> fw;
  std::vector<std::vector<double>> phase;
  ModifiedPhaseState state = initial_phase_state(plan, snaps.front()->u, 1.0);
  auto record = [&](const ModifiedPhaseState& s) {
    d.times.push_back(s.t);
    fw.push_back(s.Fw);
    std::vector<double> p(s.phase_integral.values().size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = s.phase_integral.values()[i].real();
    phase.push_back(std::move(p));
    for (const auto& b : s.B.values()) d.max_gauge_modulus_error = std::max(d.max_gauge_modulus_error, std::abs(std::abs(b) - 1.0));
  };
  record(state);
  for (std::size_t k = 1; k < snaps.size(); ++k) {
    state = gauge_advance(plan, state, snaps[k]->u, snaps[k]->t, lambda);
    record(state);
  }

  const double T_max = d.times.back();
  const double log_T = std::log(T_max);
  d.W = fw.back();
  {
    auto psi = d.Psi.values();
    const auto w = d.W.values();
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = 0.5 * lambda * (phase.back()[i] - std::norm(w[i]) * log_T);
  }

  const auto Wv = d.W.values();
  const auto Pv = d.Psi.values();
  // exp(i lambda/2 |W|^2 log t + i Psi) W
  auto asymptotic_profile = [&](double t) {
    SpectralFunction out = d.W;
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
      o[i] *= std::polar(1.0, 0.5 * lambda * std::norm(Wv[i]) * std::log(t) + Pv[i].real());
    }
    return out;
  };

  d.profile = empty_report("profile_residual", n);
  d.composite = empty_report("composite_residual", n);
  d.physical = empty_report("physical_residual", n);
  for (auto* r : {&d.profile, &d.composite, &d.physical}) r->times = d.times;
  for (std::size_t k = 0; k < d.times.size(); ++k) {
    const double t = d.times[k];
    edge_norms(fw[k] - d.W, d.profile.residual_l2, d.profile.residual_linf);

    SpectralFunction fv = fw[k];
    std::vector<double> angle(phase[k].size());
    for (std::size_t i = 0; i < angle.size(); ++i) angle[i] = 0.5 * lambda * phase[k][i];
    simd::rotate(fv.values(), angle);
    const auto asym = asymptotic_profile(t);
    edge_norms(fv - asym, d.composite.residual_l2, d.composite.residual_linf);

    // W_+ = W e^{i Psi}; |W_+| = |W|, so the profile above is exactly
    // W_+ exp(i lambda/2 |W_+|^2 log t).
    const GraphFunction u_asym = apply_M(t, apply_D(plan, t, asym));
    edge_norms(snaps[k]->u - u_asym, d.physical.residual_l2, d.physical.residual_linf);
  }
  for (auto* r : {&d.profile, &d.composite, &d.physical}) {
    for (std::size_t k = 0; k < d.times.size(); ++k) {
      double m = 0.0;
      for (int j = 0; j < n; ++j) m = std::max(m, r->residual_linf[j][k]);
      r->total.push_back(m);
    }
    r->fit = fit_decay_exponent(r->times, r->total, options.fit_lo, options.fit_hi);
  }
  d.profile.verdict = judge("profile_slope", d.profile.fit.slope, Comparison::less_equal, options.profile_slope,
                            options.fit_lo, options.fit_hi);
  d.composite.verdict = judge("composite_slope", d.composite.fit.slope, Comparison::less_equal,
                              options.composite_slope, options.fit_lo, options.fit_hi);
  d.physical.verdict = judge("physical_slope", d.physical.fit.slope, Comparison::less_equal, options.physical_slope,
                             options.fit_lo, options.fit_hi);

  for (std::size_t k = 0; k < d.times.size(); ++k) {
    for (std::size_t m = k + 1; m < d.times.size(); ++m) {
      if (std::abs(d.times[m] - 2.0 * d.times[k]) <= 1e-9 * d.times[m]) {
        d.cauchy_times.push_back(d.times[k]);
        d.cauchy.push_back(lp_norm(fw[m] - fw[k], kInf));
        break;
      }
    }
  }

  const auto fv_end = profile_transform(plan, snaps.back()->u, T_max);
  d.gauge_identity_error = lp_norm(fv_end - asymptotic_profile(T_max), kInf);
  return d;
}

LinftyDecomposition check_linfty_decomposition(const TransformPlan& plan, const GraphFunction& u, double t,
                                               double alpha) {
  if (!(t > 0.0)) throw DomainError("check_linfty_decomposition requires t > 0");
  if (!(alpha >= 0.0 && alpha < 0.25)) throw DomainError("alpha must lie in [0, 1/4)");
  LinftyDecomposition r;
  r.lhs = lp_norm(u, kInf);
  r.profile = lp_norm(profile_transform(plan, u, t), kInf) / std::sqrt(t);
  const GraphFunction v = free_evolve_spectral(plan, u, -t);
  const double a = l2_norm(v), b = l2_norm(apply_X(v));
  r.weighted = std::pow(t, -0.5 - alpha) * std::sqrt(a * a + b * b);
  const double den = r.profile + r.weighted;
  r.ratio = den > 0.0 ? r.lhs / den : 0.0;
  return r;
}

// ----------------------------------------------------- failure of scattering

namespace {

SpectralFunction pseudo_conformal(const TransformPlan& plan, const GraphFunction& u, double t) {
  return apply_D_inverse(plan, t, apply_M(t, u, Direction::inverse));
}

}  // namespace

GraphFunction failure_test_function(const TransformPlan& plan, const GraphFunction& u_ref, double t_ref,
                                    int lambda, double power) {
  if (!(power > 0.0)) throw DomainError("power must be positive");
  const auto g = power_nonlinearity(pseudo_conformal(plan, u_ref, t_ref), static_cast<double>(lambda), power);
  const double norm = l2_norm(g);
  if (norm == 0.0) return GraphFunction(u_ref.graph());
  const auto k = kirchhoff_residual(g);
  if (k.continuity_defect > 1e-8 * lp_norm(g, kInf)) {
    warn("failure test function: reference profile is not continuous at the vertex");
  }
  return inverse_F(plan, cplx(-1.0 / norm) * g);
}

FailureHistory failure_functional(const TransformPlan& plan, const Trajectory& trajectory,
                                  const GraphFunction& phi_test, int lambda, double power, double T) {
  if (!(power > 0.0) || !std::isfinite(power)) throw DomainError("power must be positive");
  if (!(T > 0.0)) throw DomainError("failure_functional requires T > 0");
  plan.require(phi_test.graph());
  FailureHistory h;
  h.power = power;
  const double coef = lambda;
  cplx uw0 = 0.0, weak = 0.0, prev_gw = 0.0;
  double prev_t = 0.0, prev_integrand = 0.0, acc = 0.0;
  for (const auto& s : trajectory.snapshots) {
    if (s.t < T * (1.0 - 1e-12)) continue;
    const double t = s.t;
    const auto ut = pseudo_conformal(plan, s.u, t);
    const auto wt = forward_F(plan, apply_M(t, phi_test));
    const double pairing = inner_product(power_nonlinearity(ut, coef, power), wt).real();
    const GraphFunction w = free_evolve_spectral(plan, phi_test, t);
    const cplx uw = inner_product(s.u, w);
    const cplx gw = inner_product(power_nonlinearity(s.u, coef, power), w);
    const double integrand = std::pow(t, 1.0 - 0.5 * power) * (-pairing);
    if (h.times.empty()) {
      uw0 = uw;
    } else {
      const double ds = std::log(t / prev_t);
      acc += 0.5 * ds * (prev_integrand + integrand);
      weak += 0.5 * ds * (prev_t * prev_gw + t * gw);
    }
    h.times.push_back(t);
    h.pairing.push_back(pairing);
    h.integral.push_back(acc);
    h.mass_u.push_back(l2_norm(s.u));
    h.mass_w.push_back(l2_norm(wt));
    h.weak_form.push_back(std::abs(kI * (uw - uw0) + weak));
    h.pairing_bound = std::max(h.pairing_bound, std::abs(uw));
    prev_t = t;
    prev_integrand = integrand;
    prev_gw = gw;
  }
  if (h.times.size() < 2) throw PreconditionError("failure_functional needs at least two snapshots after T");
  return h;
}

}  // namespace gnls
