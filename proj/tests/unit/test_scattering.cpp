#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "gnls/diagnostics.hpp"
#include "gnls/scattering.hpp"

using namespace gnls;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// Final data with even average and odd perpendicular part in xi; c = (-1, 0, 1) keeps
// sum c_j = sum c_j^3 = 0.
SpectralFunction final_data(const StarGraph& g, double amp) {
  return SpectralFunction::sample(g, [&](int j, double k) {
    return amp * std::exp(-k * k) * (1.0 + 0.5 * (j - 1) * k);
  });
}

GraphFunction kirchhoff_gaussian(const StarGraph& g, double width, double amp) {
  const double mid = 0.5 * (g.edges() - 1);
  return GraphFunction::sample(g, [&](int j, double x) {
    return amp * std::exp(-x * x / (width * width)) * (1.0 + 0.1 * (j - mid) * x);
  });
}

double rel_diff(const GraphFunction& a, const GraphFunction& b) { return l2_norm(a - b) / l2_norm(b); }

}  // namespace

TEST(FinalProfile, AmplitudeAndContinuity) {
  const StarGraph g(3, 800.0, 2048);
  const TransformPlan plan(g);
  const auto phi = final_data(g, 0.1);
  const auto p = build_final_profile(plan, phi, 1, 40.0);
  EXPECT_NEAR(lp_norm(p.u_ap, kInf), lp_norm(phi, kInf) / std::sqrt(80.0), 1e-3 * lp_norm(phi, kInf));
  EXPECT_NEAR(lp_norm(p.w, kInf), lp_norm(phi, kInf), 1e-14);
  const auto zero = build_final_profile(plan, SpectralFunction(g), -1, 40.0);
  EXPECT_EQ(l2_norm(zero.u_ap), 0.0);
  auto bad = phi;
  bad(0, 0) += 0.01;
  EXPECT_THROW(build_final_profile(plan, bad, 1, 40.0), PreconditionError);
  EXPECT_THROW(build_final_profile(plan, phi, 1, 0.0), DomainError);
}

TEST(FinalProfile, RemainderDecays) {
  const StarGraph g(3, 800.0, 2048);
  const TransformPlan plan(g);
  const auto phi = final_data(g, 1.0);
  const double r10 = l2_norm(final_state_remainder(plan, phi, 10.0));
  const double r40 = l2_norm(final_state_remainder(plan, phi, 40.0));
  EXPECT_GT(r10, 0.0);
  EXPECT_LT(r40, 0.4 * r10);
}

TEST(FinalState, LinearSwitchAndValidation) {
  const StarGraph g(3, 800.0, 2048);
  const TransformPlan plan(g);
  const auto phi = final_data(g, 0.1);
  FinalStateOptions o;
  o.T = 10;
  o.T_max = 40;
  o.per_octave = 4;
  o.nonlinear = false;
  const FinalStateProblem lin(plan, phi, o);
  EXPECT_EQ(lin.times().size() % 2, 1u);
  EXPECT_DOUBLE_EQ(lin.times().front(), 10.0);
  EXPECT_DOUBLE_EQ(lin.times().back(), 40.0);
  const auto step = lin.picard_step(lin.u_ap());
  for (std::size_t k = 0; k < step.size(); ++k) {
    EXPECT_LT(l2_norm(step[k] - lin.u_ap()[k] - lin.remainder()[k]), 1e-15);
  }
  for (double a : {0.25, 0.5, 0.1}) {
    o.alpha = a;
    EXPECT_THROW(FinalStateProblem(plan, phi, o), DomainError) << a;
  }
  o.alpha = 0.3;
  o.T_max = 5;
  EXPECT_THROW(FinalStateProblem(plan, phi, o), DomainError);
}

TEST(FinalState, NormsOfConstantSeries) {
  const StarGraph g(3, 800.0, 2048);
  const TransformPlan plan(g);
  FinalStateOptions o;
  o.T = 10;
  o.T_max = 160;
  o.per_octave = 4;
  o.nonlinear = false;
  const FinalStateProblem p(plan, final_data(g, 0.1), o);
  // Constant in time: Y(T_max) = ||f||_2 and the L^4_t tail is exact up to quadrature.
  const TimeSeries f(p.times().size(), p.u_ap()[0]);
  const auto y = p.y_norms(f);
  EXPECT_NEAR(y.back(), l2_norm(f[0]), 1e-14);
  const double sup4 = std::pow(lp_norm(f[0], kInf), 4);
  EXPECT_NEAR(y.front(), l2_norm(f[0]) + std::pow(sup4 * 150.0, 0.25), 1e-3 * y.front());
  double x = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) x = std::max(x, std::pow(p.times()[k], 0.3) * y[k]);
  EXPECT_DOUBLE_EQ(p.x_norm(f), x);
}

TEST(FinalState, ContractsAndSolvesNls) {
  const StarGraph g(3, 800.0, 2048);
  const TransformPlan plan(g);
  const auto phi = final_data(g, 0.1);
  FinalStateOptions o;
  o.T = 10;
  o.T_max = 80;
  o.per_octave = 8;
  const auto r = run_final_state(plan, phi, o);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 8);
  EXPECT_LT(r.kappa, 0.9);
  EXPECT_GT(r.rho, 0.0);
  EXPECT_LT(r.quadrature_error, 1e-3);
  ASSERT_EQ(r.verdicts.size(), 4u);

  // The fixed point is an NLS solution: evolving it forward reproduces later grid values.
  const std::size_t k0 = r.times.size() / 2, k1 = r.times.size() - 1;
  EvolutionConfig cfg;
  cfg.lambda = o.lambda;
  cfg.t_start = r.times[k0];
  cfg.t_end = r.times[k1];
  cfg.dt = 0.02;
  const auto traj = nls_evolve(plan, r.u[k0], cfg);
  const double nls_err = rel_diff(traj.snapshots.back().u, r.u[k1]);
  const double free_err = rel_diff(free_evolve_spectral(plan, r.u[k0], cfg.t_end - cfg.t_start), r.u[k1]);
  EXPECT_LT(nls_err, 1e-3);
  EXPECT_LT(nls_err, 0.2 * free_err);
}

TEST(FinalState, ZeroDataPassesWithoutAblation) {
  const StarGraph g(3, 800.0, 2048);
  const TransformPlan plan(g);
  FinalStateOptions o;
  o.T = 10;
  o.T_max = 80;
  o.per_octave = 4;
  const auto r = run_final_state(plan, SpectralFunction(g), o);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.kappa, 0.0);
  EXPECT_EQ(r.rho, 0.0);
  ASSERT_EQ(r.verdicts.size(), 3u);
  for (const auto& v : r.verdicts) EXPECT_TRUE(v.pass) << v.name;
}

TEST(FinalState, CalibrationKappaGrowsWithAmplitude) {
  const StarGraph g(3, 800.0, 2048);
  const TransformPlan plan(g);
  FinalStateOptions o;
  o.T = 10;
  o.T_max = 40;
  o.per_octave = 8;
  const auto phi = final_data(g, 1.0);
  const auto pts = calibrate_final_state(plan, phi, o, {0.05, 0.2}, {10.0});
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(pts[0].phi_sup, 0.05 * lp_norm(phi, kInf), 1e-12);
  EXPECT_LT(pts[0].kappa, pts[1].kappa);
}

TEST(Gauge, LinearFlowHasConstantProfile) {
  const StarGraph g(3, 400.0, 4096);
  const TransformPlan plan(g);
  const auto u0 = kirchhoff_gaussian(g, 2.0, 0.3);
  auto s = initial_phase_state(plan, free_evolve_spectral(plan, u0, 1.0), 1.0);
  const auto fv1 = s.Fv;
  for (double t : {2.0, 4.0, 8.0}) s = gauge_advance(plan, s, free_evolve_spectral(plan, u0, t), t, 1);
  EXPECT_LT(lp_norm(s.Fv - fv1, kInf), 1e-9);
  double worst_b = 0.0, worst_phase = 0.0;
  for (std::size_t i = 0; i < s.B.values().size(); ++i) {
    worst_b = std::max(worst_b, std::abs(std::abs(s.B.values()[i]) - 1.0));
    const double expect = std::norm(fv1.values()[i]) * std::log(8.0);
    worst_phase = std::max(worst_phase, std::abs(s.phase_integral.values()[i] - expect));
  }
  EXPECT_LT(worst_b, 1e-14);
  EXPECT_LT(worst_phase, 1e-9);
  EXPECT_THROW(gauge_advance(plan, s, u0, 8.0, 1), DomainError);
}

TEST(Gauge, ExtractionPreconditions) {
  const StarGraph g(2, 64.0, 256);
  const TransformPlan plan(g);
  Trajectory traj;
  for (double t : {0.5, 2.0, 4.0}) traj.snapshots.push_back({t, GraphFunction(g)});
  EXPECT_THROW(extract_scattering_data(plan, traj, 1), PreconditionError);
  ScatteringOptions narrow;
  narrow.fit_hi = 50;
  EXPECT_THROW(extract_scattering_data(plan, traj, 1, narrow), PreconditionError);
}

TEST(Remainders, DecayInTime) {
  const StarGraph g(3, 400.0, 4096);
  const TransformPlan plan(g);
  const auto fv = forward_F(plan, kirchhoff_gaussian(g, 2.0, 0.3));
  const auto a = compute_remainders(plan, fv, 10.0);
  const auto b = compute_remainders(plan, fv, 100.0);
  EXPECT_GT(a.I2_linf, 0.0);
  EXPECT_LT(b.I1_l2, 0.3 * a.I1_l2);
  EXPECT_LT(b.I2_linf, 0.3 * a.I2_linf);
}

TEST(Remainders, RateAndCubicScaling) {
  const StarGraph g(3, 400.0, 4096);
  const TransformPlan plan(g);
  const auto fv = forward_F(plan, kirchhoff_gaussian(g, 2.0, 0.3));
  const auto times = geometric_times(1.0, 100.0, 4);
  std::vector<double> i1, i2;
  for (double t : times) {
    const auto r = compute_remainders(plan, fv, t);
    i1.push_back(r.I1_l2);
    i2.push_back(r.I2_linf);
  }
  EXPECT_LE(fit_decay_exponent(times, i1, 1.0, 100.0).slope, -0.2);
  EXPECT_LE(fit_decay_exponent(times, i2, 1.0, 100.0).slope, -0.2);

  const auto a = compute_remainders(plan, fv, 7.0);
  const auto b = compute_remainders(plan, cplx(2.0, 0.0) * fv, 7.0);
  EXPECT_NEAR(b.I1_l2, 8.0 * a.I1_l2, 1e-10 * b.I1_l2);
  EXPECT_NEAR(b.I2_linf, 8.0 * a.I2_linf, 1e-10 * b.I2_linf);
  const auto z = compute_remainders(plan, SpectralFunction(g), 7.0);
  EXPECT_EQ(z.I1_linf + z.I1_l2 + z.I2_linf + z.I2_l2, 0.0);
}

TEST(Linfty, EdgeCases) {
  const StarGraph g(3, 400.0, 4096);
  const TransformPlan plan(g);
  const auto zero = check_linfty_decomposition(plan, GraphFunction(g), 10.0, 0.1);
  EXPECT_EQ(zero.lhs, 0.0);
  EXPECT_EQ(zero.ratio, 0.0);
  const auto u = free_evolve_spectral(plan, kirchhoff_gaussian(g, 2.0, 0.3), 20.0);
  const auto a0 = check_linfty_decomposition(plan, u, 20.0, 0.0);
  const auto a1 = check_linfty_decomposition(plan, u, 20.0, 0.1);
  EXPECT_EQ(a0.profile, a1.profile);
  EXPECT_GT(a0.weighted, a1.weighted);
}

TEST(Linfty, DecompositionBoundsSupNorm) {
  const StarGraph g(3, 400.0, 4096);
  const TransformPlan plan(g);
  const auto u0 = kirchhoff_gaussian(g, 2.0, 0.3);
  for (double t : {10.0, 40.0}) {
    const auto d = check_linfty_decomposition(plan, free_evolve_spectral(plan, u0, t), t, 0.1);
    EXPECT_GT(d.ratio, 0.1) << t;
    EXPECT_LT(d.ratio, 1.5) << t;
  }
  EXPECT_THROW(check_linfty_decomposition(plan, u0, 1.0, 0.25), DomainError);
}

TEST(Failure, TestFunctionAndWeakForm) {
  const StarGraph g(3, 200.0, 2048);
  const TransformPlan plan(g);
  const auto u0 = kirchhoff_gaussian(g, 3.0, 0.2);
  EXPECT_EQ(l2_norm(failure_test_function(plan, GraphFunction(g), 5.0, 1, 2.0)), 0.0);
  EvolutionConfig cfg;
  cfg.t_end = 20.0;
  cfg.dt = 0.005;
  cfg.snapshot_times = geometric_times(1.0, 20.0, 16);
  const auto traj = nls_evolve(plan, u0, cfg);
  const auto& ref = traj.snapshots[traj.snapshots.size() / 2];
  const auto phi = failure_test_function(plan, ref.u, ref.t, 1, 2.0);
  const auto h = failure_functional(plan, traj, phi, 1, 2.0, 1.0);
  EXPECT_EQ(h.times.front(), 1.0);
  EXPECT_GT(h.pairing_bound, 0.0);
  double worst = 0.0;
  for (double d : h.weak_form) worst = std::max(worst, d);
  EXPECT_LT(worst, 1e-3 * h.pairing_bound);
  EXPECT_NEAR(h.mass_w.back(), h.mass_w.front(), 1e-6 * h.mass_w.front());
  EXPECT_THROW(failure_functional(plan, traj, phi, 1, 0.0, 1.0), DomainError);
}
