#include "gnls/harness/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "gnls/diagnostics.hpp"
#include "gnls/simd/kernels.hpp"

namespace gnls::harness {

using nlohmann::json;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// JSON has no infinities; non-finite values are written as strings.
json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

json num_array(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

// Tab-separated table with a header row.
class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "\t" : "") << columns_[i];
    out_ << '\n';
  }
  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "\t" : "") << format_number(values[i]);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::vector<std::string> columns_;
  std::ostringstream out_;
};

std::vector<std::string> edge_columns(const std::string& prefix, int n) {
  std::vector<std::string> c;
  for (int j = 0; j < n; ++j) c.push_back(prefix + "_e" + std::to_string(j));
  return c;
}

template <class... V>
std::vector<std::string> concat(std::vector<std::string> a, const V&... rest) {
  (a.insert(a.end(), rest.begin(), rest.end()), ...);
  return a;
}

// Uniform [0, 1) from the top 53 bits of a raw draw.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<cplx> read_sample_file(const std::string& path, const StarGraph& g) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file '" + path + "'");
  const int n = g.edges();
  const std::size_t rows = g.samples();
  std::vector<cplx> values(rows * n);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<double> nums;
    double x;
    while (ls >> x) nums.push_back(x);
    if (!ls.eof()) throw ConfigError("data file '" + path + "': non-numeric entry in row " + std::to_string(row + 1));
    if (nums.empty()) continue;
    if (nums.size() != 2u * n) {
      throw ConfigError("data file '" + path + "': expected " + std::to_string(2 * n) + " numbers per row");
    }
    if (row >= rows) throw ConfigError("data file '" + path + "': more than N + 1 rows");
    for (int j = 0; j < n; ++j) values[j * rows + row] = {nums[2 * j], nums[2 * j + 1]};
    ++row;
  }
  if (row != rows) throw ConfigError("data file '" + path + "': expected " + std::to_string(rows) + " rows");
  return values;
}

double relative_drift_rate(const EvolutionDiagnostics& d, double duration) {
  if (!(d.initial_mass > 0.0)) return 0.0;
  return d.max_mass_drift / d.initial_mass / duration;
}

EvolutionConfig evolution_config(const EvolutionSpec& e, double power) {
  EvolutionConfig c;
  c.lambda = e.lambda;
  c.power = power;
  c.t_end = e.t_end;
  c.dt = e.dt;
  c.growth = e.growth == "proportional" ? StepGrowth::proportional : StepGrowth::fixed;
  if (e.max_dt > 0.0) c.max_dt = e.max_dt;
  c.abort_on_support_breach = e.abort_on_support_breach;
  return c;
}

std::vector<double> snapshot_grid(const EvolutionSpec& e) {
  if (e.t_end <= 1.0) return {};
  return geometric_times(1.0, e.t_end, e.snapshots_per_octave);
}

// ------------------------------------------------------------ transform-check

void run_transform_check(const ExperimentConfig& cfg, RunOutput& out) {
  const auto& tc = cfg.transform_check;
  Table table({"edges", "function", "parseval_F", "parseval_Fc", "roundtrip_F", "roundtrip_Fc", "x_inverse",
               "co_derivative", "derivative_of_F"});
  json per_star = json::array();
  for (int n : tc.edge_counts) {
    const StarGraph g(n, cfg.graph.length, cfg.graph.grid);
    const TransformPlan plan(g);
    const auto bank = smooth_bank(g, tc.bank_size, cfg.seed + static_cast<std::uint64_t>(n));
    double parseval = 0.0, roundtrip = 0.0, commutation = 0.0;
    for (std::size_t i = 0; i < bank.size(); ++i) {
      const auto& f = bank[i];
      const auto xf = apply_X(f);
      const double nf = l2_norm(f), nx = l2_norm(xf);
      const double pf = std::abs(l2_norm(forward_F(plan, f)) - nf) / nf;
      const double pc = std::abs(l2_norm(forward_Fc(plan, xf)) - nx) / nx;
      const double rf = lp_norm(inverse_F(plan, forward_F(plan, f)) - f, kInf) / lp_norm(f, kInf);
      const double rc = lp_norm(inverse_Fc(plan, forward_Fc(plan, xf)) - xf, kInf) / lp_norm(xf, kInf);
      const auto cr = check_commutation_identities(plan, f);
      parseval = std::max({parseval, pf, pc});
      roundtrip = std::max({roundtrip, rf, rc});
      commutation = std::max({commutation, cr.x_inverse, cr.co_derivative, cr.derivative_of_F});
      table.row({static_cast<double>(n), static_cast<double>(i), pf, pc, rf, rc, cr.x_inverse, cr.co_derivative,
                 cr.derivative_of_F});
    }

    const StarGraph small(n, cfg.graph.length, tc.slow_grid);
    const TransformPlan small_plan(small);
    double fast_slow = 0.0;
    for (const auto& f : smooth_bank(small, std::min(tc.bank_size, 4), cfg.seed + 1000u + n)) {
      const SpectralFunction s(small, std::vector<cplx>(f.values().begin(), f.values().end()));
      for (auto kind : {TransformKind::forward, TransformKind::inverse, TransformKind::co_forward,
                        TransformKind::co_inverse}) {
        fast_slow = std::max(fast_slow, lp_norm(transform(small_plan, kind, f) - transform_reference(kind, f), kInf));
        fast_slow = std::max(fast_slow, lp_norm(transform(small_plan, kind, s) - transform_reference(kind, s), kInf));
      }
    }

    const std::string tag = "[n=" + std::to_string(n) + "]";
    out.verdicts.push_back(judge("parseval" + tag, parseval, Comparison::less, kParsevalTol));
    out.verdicts.push_back(judge("round_trip" + tag, roundtrip, Comparison::less, kRoundTripTol));
    out.verdicts.push_back(judge("commutation" + tag, commutation, Comparison::less, kCommutationTol));
    out.verdicts.push_back(judge("fast_vs_slow" + tag, fast_slow, Comparison::less, kFastSlowTol));
    per_star.push_back({{"edges", n},
                        {"functions", bank.size()},
                        {"max_parseval", num(parseval)},
                        {"max_round_trip", num(roundtrip)},
                        {"max_commutation", num(commutation)},
                        {"slow_grid", tc.slow_grid},
                        {"max_fast_vs_slow", num(fast_slow)}});
  }
  out.report["results"] = {{"stars", per_star}};
  out.series = table.str();
}

// --------------------------------------------------------------------- evolve

void run_evolve(const ExperimentConfig& cfg, RunOutput& out) {
  const StarGraph g(cfg.graph.edges, cfg.graph.length, cfg.graph.grid);
  const TransformPlan plan(g);
  const auto u0 = make_data<Domain::space>(cfg.data, g);
  const auto& e = cfg.evolution;
  const int n = g.edges();

  std::vector<Snapshot> snaps;
  double weighted_sup = 0.0;
  EvolutionDiagnostics diag;
  if (e.nonlinear) {
    auto ec = evolution_config(e, e.power);
    ec.snapshot_times = snapshot_grid(e);
    auto traj = nls_evolve(plan, u0, ec, [&](double t, const GraphFunction& u) {
      weighted_sup = std::max(weighted_sup, std::sqrt(1.0 + t) * lp_norm(u, kInf));
    });
    snaps = std::move(traj.snapshots);
    diag = traj.diagnostics;
  } else {
    std::vector<double> times{0.0};
    for (double t : snapshot_grid(e)) times.push_back(t);
    if (times.back() < e.t_end) times.push_back(e.t_end);
    for (double t : times) {
      snaps.push_back({t, t == 0.0 ? u0 : free_evolve_spectral(plan, u0, t)});
      weighted_sup = std::max(weighted_sup, std::sqrt(1.0 + t) * lp_norm(snaps.back().u, kInf));
    }
  }

  Table table(concat(std::vector<std::string>{"t", "mass", "sup", "weighted_sup", "continuity", "flux"},
                     edge_columns("l2", n)));
  std::vector<double> times, sups;
  double max_cont = 0.0, max_flux = 0.0;
  const auto w = g.trapezoid_weights();
  for (const auto& s : snaps) {
    const double sup = lp_norm(s.u, kInf);
    const auto k = kirchhoff_residual(s.u);
    max_cont = std::max(max_cont, k.continuity_defect);
    max_flux = std::max(max_flux, k.flux_defect);
    std::vector<double> row{s.t, std::pow(l2_norm(s.u), 2), sup, std::sqrt(1.0 + s.t) * sup, k.continuity_defect,
                            k.flux_defect};
    for (int j = 0; j < n; ++j) row.push_back(std::sqrt(g.spacing(Domain::space) * simd::weighted_norm2(s.u.edge(j), w)));
    table.row(row);
    times.push_back(s.t);
    sups.push_back(sup);
  }

  const double lo = cfg.fit_window[0], hi = cfg.fit_window[1];
  const auto fit = fit_decay_exponent(times, sups, lo, hi);
  out.verdicts.push_back(judge("decay_slope_lower", fit.slope, Comparison::greater_equal, kDecaySlopeLo, lo, hi));
  out.verdicts.push_back(judge("decay_slope_upper", fit.slope, Comparison::less_equal, kDecaySlopeHi, lo, hi));
  out.verdicts.push_back(judge("decay_r_squared", fit.r_squared, Comparison::greater_equal, kDecayR2, lo, hi));
  const double initial = lp_norm(u0, kInf);
  const double ratio = initial > 0.0 ? weighted_sup / initial : 0.0;
  out.verdicts.push_back(judge("amplitude_ratio", ratio, Comparison::less_equal, kAmplitudeRatio, 0.0, e.t_end));

  json results = {{"decay_fit", to_json(fit)},
                  {"initial_sup", num(initial)},
                  {"max_weighted_sup", num(weighted_sup)},
                  {"max_continuity_defect", num(max_cont)},
                  {"max_flux_defect", num(max_flux)}};
  if (e.nonlinear) {
    const double rate = relative_drift_rate(diag, e.t_end);
    out.verdicts.push_back(judge("mass_drift_rate", rate, Comparison::less, kMassDriftRate, 0.0, e.t_end));
    results["steps"] = diag.steps;
    results["initial_mass"] = num(diag.initial_mass);
    results["max_mass_drift"] = num(diag.max_mass_drift);
    results["max_energy_drift"] = num(diag.max_energy_drift);
  } else {
    // The boundary invariants are asserted only for data that satisfies them initially.
    const auto k0 = kirchhoff_residual(u0);
    const bool compatible = k0.continuity_defect < kKirchhoffTol && k0.flux_defect < kKirchhoffTol;
    results["kirchhoff_compatible_data"] = compatible;
    if (compatible) {
      out.verdicts.push_back(
          judge("kirchhoff_continuity", max_cont, Comparison::less, kKirchhoffTol, 0.0, e.t_end));
      out.verdicts.push_back(judge("kirchhoff_flux", max_flux, Comparison::less, kKirchhoffTol, 0.0, e.t_end));
    }
  }
  out.report["results"] = results;
  out.series = table.str();
}

// ---------------------------------------------------------------- final-state

void run_final(const ExperimentConfig& cfg, RunOutput& out) {
  const StarGraph g(cfg.graph.edges, cfg.graph.length, cfg.graph.grid);
  const TransformPlan plan(g);
  const auto phi = make_data<Domain::frequency>(cfg.data, g);
  const auto& fs = cfg.final_state;
  FinalStateOptions o;
  o.lambda = cfg.evolution.lambda;
  o.alpha = fs.alpha;
  o.T = fs.T;
  o.T_max = fs.T_max;
  o.per_octave = fs.per_octave;
  o.max_iters = fs.max_iters;
  o.tol = fs.tol;
  o.nonlinear = fs.nonlinear;

  const auto r = run_final_state(plan, phi, o);
  out.verdicts = r.verdicts;

  // The rate should not get worse as the window moves into the asymptotic regime.
  const double split = 4.0 * o.T;
  json improvement = nullptr;
  int early = 0, late = 0;
  for (double t : r.times) {
    early += t <= split * (1 + 1e-12);
    late += t >= split * (1 - 1e-12);
  }
  // An identically zero residual has no rate to compare.
  const bool flat = std::ranges::all_of(r.residual.total, [](double v) { return v == 0.0; });
  if (early >= 5 && late >= 5 && !flat) {
    const auto f1 = fit_decay_exponent(r.times, r.residual.total, o.T, split);
    const auto f2 = fit_decay_exponent(r.times, r.residual.total, split, o.T_max);
    out.verdicts.push_back(judge("rate_improves", f2.slope - f1.slope, Comparison::less_equal,
                                 kRateImprovementSlack, o.T, o.T_max));
    improvement = {{"early", to_json(f1)}, {"late", to_json(f2)}};
  }

  json edge_fits = json::array(), ablation_fits = json::array();
  for (const auto& f : r.residual.edge_fits) edge_fits.push_back(to_json(f));
  for (const auto& f : r.ablation.edge_fits) ablation_fits.push_back(to_json(f));
  json results = {{"phi_sup", num(lp_norm(phi, kInf))},
                  {"time_points", r.times.size()},
                  {"iterations", r.iterations},
                  {"converged", r.converged},
                  {"contraction", num_array(r.contraction)},
                  {"kappa", num(r.kappa)},
                  {"rho", num(r.rho)},
                  {"tail_bound", num(r.tail_bound)},
                  {"quadrature_error", num(r.quadrature_error)},
                  {"residual_fit", to_json(r.residual.fit)},
                  {"residual_edge_fits", edge_fits},
                  {"ablation_fit", to_json(r.ablation.fit)},
                  {"ablation_edge_fits", ablation_fits},
                  {"rate_split", improvement}};
  if (!fs.calibration_scales.empty()) {
    std::vector<double> starts = fs.calibration_starts.empty() ? std::vector<double>{fs.T} : fs.calibration_starts;
    json cal = json::array();
    for (const auto& p : calibrate_final_state(plan, phi, o, fs.calibration_scales, starts)) {
      cal.push_back({{"phi_sup", num(p.phi_sup)}, {"T", num(p.T)}, {"kappa", num(p.kappa)}, {"contracts", p.kappa < 0.9}});
    }
    results["calibration"] = cal;
  }
  out.report["results"] = results;

  const int n = g.edges();
  Table table(concat(std::vector<std::string>{"t", "residual_total"}, edge_columns("residual_l2", n),
                     edge_columns("residual_linf", n), edge_columns("ablation_l2", n)));
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    std::vector<double> row{r.times[k], r.residual.total[k]};
    for (int j = 0; j < n; ++j) row.push_back(r.residual.residual_l2[j][k]);
    for (int j = 0; j < n; ++j) row.push_back(r.residual.residual_linf[j][k]);
    for (int j = 0; j < n; ++j) row.push_back(r.ablation.residual_l2[j][k]);
    table.row(row);
  }
  out.series = table.str();
}

// ---------------------------------------------------------------- ivp-scatter

void run_ivp(const ExperimentConfig& cfg, RunOutput& out) {
  const StarGraph g(cfg.graph.edges, cfg.graph.length, cfg.graph.grid);
  const TransformPlan plan(g);
  const auto u0 = make_data<Domain::space>(cfg.data, g);
  const auto& e = cfg.evolution;
  auto ec = evolution_config(e, e.power);
  ec.snapshot_times = snapshot_grid(e);
  const auto traj = nls_evolve(plan, u0, ec);

  ScatteringOptions so;
  so.fit_lo = cfg.fit_window[0];
  so.fit_hi = cfg.fit_window[1];
  const auto d = extract_scattering_data(plan, traj, e.lambda, so);
  out.verdicts.push_back(d.profile.verdict);
  out.verdicts.push_back(d.composite.verdict);
  out.verdicts.push_back(d.physical.verdict);
  out.verdicts.push_back(judge("gauge_unimodularity", d.max_gauge_modulus_error, Comparison::less_equal, kGaugeTol));
  out.verdicts.push_back(judge("gauge_identity", d.gauge_identity_error, Comparison::less_equal, kGaugeTol));
  const double rate = relative_drift_rate(traj.diagnostics, e.t_end);
  out.verdicts.push_back(judge("mass_drift_rate", rate, Comparison::less, kMassDriftRate, 0.0, e.t_end));

  const int n = g.edges();
  Table table(concat(std::vector<std::string>{"t", "sup", "profile", "composite", "physical", "I1_linf", "I2_linf",
                                              "linfty_ratio"},
                     edge_columns("profile_linf", n)));
  double max_ratio = 0.0;
  std::size_t k = 0;
  for (const auto& s : traj.snapshots) {
    if (s.t < 1.0 - 1e-12) continue;
    const auto rem = compute_remainders(plan, profile_transform(plan, s.u, s.t), s.t);
    const auto dec = check_linfty_decomposition(plan, s.u, s.t, kLinftyAlpha);
    max_ratio = std::max(max_ratio, dec.ratio);
    std::vector<double> row{s.t,
                            dec.lhs,
                            d.profile.total[k],
                            d.composite.total[k],
                            d.physical.total[k],
                            rem.I1_linf,
                            rem.I2_linf,
                            dec.ratio};
    for (int j = 0; j < n; ++j) row.push_back(d.profile.residual_linf[j][k]);
    table.row(row);
    ++k;
  }

  auto report_json = [](const ScatterReport& r) {
    return json{{"name", r.name}, {"fit", to_json(r.fit)}, {"verdict", to_json(r.verdict)}};
  };
  json cauchy = json::array();
  for (std::size_t i = 0; i < d.cauchy.size(); ++i) cauchy.push_back({num(d.cauchy_times[i]), num(d.cauchy[i])});
  double psi_lo = kInf, psi_hi = -kInf;
  for (const auto& v : d.Psi.values()) {
    psi_lo = std::min(psi_lo, v.real());
    psi_hi = std::max(psi_hi, v.real());
  }
  out.report["results"] = {{"steps", traj.diagnostics.steps},
                           {"initial_mass", num(traj.diagnostics.initial_mass)},
                           {"max_mass_drift", num(traj.diagnostics.max_mass_drift)},
                           {"W_sup", num(lp_norm(d.W, kInf))},
                           {"W_l2", num(l2_norm(d.W))},
                           {"Psi_range", {num(psi_lo), num(psi_hi)}},
                           {"profile", report_json(d.profile)},
                           {"composite", report_json(d.composite)},
                           {"physical", report_json(d.physical)},
                           {"cauchy", cauchy},
                           {"linfty_alpha", kLinftyAlpha},
                           {"linfty_constant", num(max_ratio)}};
  out.series = table.str();
}

// --------------------------------------------------------------- failure-scan

struct FailureFit {
  FitResult fit;
  Verdict verdict;
};

FailureFit judge_failure(const FailureHistory& h, double t_end) {
  const double p = h.power;
  std::vector<double> x, y;
  if (p > 2.0 + 1e-12) {
    const double lo = t_end / 10.0;
    for (std::size_t k = 0; k < h.times.size(); ++k) {
      if (h.times[k] >= lo * (1 - 1e-12)) {
        x.push_back(std::log(h.times[k]));
        y.push_back(h.integral[k]);
      }
    }
    auto f = fit_line(x, y);
    f.window_lo = lo;
    f.window_hi = t_end;
    char name[64];
    std::snprintf(name, sizeof name, "bounded_slope_log[p=%g]", p);
    return {f, judge(name, f.slope, Comparison::abs_less_equal, kBoundedSlope, lo, t_end)};
  }
  const bool log_scale = std::abs(p - 2.0) <= 1e-12;
  for (std::size_t k = 0; k < h.times.size(); ++k) {
    x.push_back(log_scale ? std::log(h.times[k]) : std::pow(h.times[k], 1.0 - 0.5 * p));
    y.push_back(h.integral[k]);
  }
  auto f = fit_line(x, y);
  f.window_lo = h.times.front();
  f.window_hi = h.times.back();
  char name[64];
  std::snprintf(name, sizeof name, log_scale ? "divergence_slope_log[p=%g]" : "divergence_slope_power[p=%g]", p);
  return {f, judge(name, f.slope, Comparison::greater, 0.0, f.window_lo, f.window_hi)};
}

double max_relative_spread(const std::vector<double>& v) {
  if (v.empty() || !(v.front() > 0.0)) return 0.0;
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x - v.front()) / v.front());
  return m;
}

void run_failure(const ExperimentConfig& cfg, RunOutput& out) {
  const StarGraph g(cfg.graph.edges, cfg.graph.length, cfg.graph.grid);
  const TransformPlan plan(g);
  const auto u0 = make_data<Domain::space>(cfg.data, g);
  const auto& e = cfg.evolution;
  const double T = cfg.failure.T;
  const double t_ref = cfg.failure.t_ref > 0.0 ? cfg.failure.t_ref : std::sqrt(T * e.t_end);

  Table table({"power", "t", "pairing", "integral", "mass_u", "mass_w", "weak_form"});
  json runs = json::array();
  for (double p : cfg.failure.powers) {
    auto ec = evolution_config(e, p);
    ec.snapshot_times = snapshot_grid(e);
    ec.snapshot_times.push_back(T);
    ec.snapshot_times.push_back(t_ref);
    std::sort(ec.snapshot_times.begin(), ec.snapshot_times.end());
    ec.snapshot_times.erase(std::unique(ec.snapshot_times.begin(), ec.snapshot_times.end()),
                            ec.snapshot_times.end());
    const auto traj = nls_evolve(plan, u0, ec);
    const GraphFunction* ref = nullptr;
    for (const auto& s : traj.snapshots) {
      if (std::abs(s.t - t_ref) <= 1e-12 * t_ref) ref = &s.u;
    }
    if (!ref) throw PreconditionError("reference snapshot missing from the trajectory");
    const auto phi = failure_test_function(plan, *ref, t_ref, e.lambda, p);
    const auto h = failure_functional(plan, traj, phi, e.lambda, p, T);
    for (std::size_t k = 0; k < h.times.size(); ++k) {
      table.row({p, h.times[k], h.pairing[k], h.integral[k], h.mass_u[k], h.mass_w[k], h.weak_form[k]});
    }

    const auto ff = judge_failure(h, e.t_end);
    out.verdicts.push_back(ff.verdict);
    char tag[32];
    std::snprintf(tag, sizeof tag, "[p=%g]", p);
    const double mu = max_relative_spread(h.mass_u), mw = max_relative_spread(h.mass_w);
    out.verdicts.push_back(judge(std::string("mass_u_constant") + tag, mu, Comparison::less_equal, kFailureMassTol, T,
                                 e.t_end));
    out.verdicts.push_back(judge(std::string("mass_w_constant") + tag, mw, Comparison::less_equal, kFailureMassTol, T,
                                 e.t_end));
    const double rate = relative_drift_rate(traj.diagnostics, e.t_end);
    out.verdicts.push_back(
        judge(std::string("mass_drift_rate") + tag, rate, Comparison::less, kMassDriftRate, 0.0, e.t_end));
    double weak = 0.0;
    for (double x : h.weak_form) weak = std::max(weak, x);
    runs.push_back({{"power", p},
                    {"t_ref", t_ref},
                    {"fit", to_json(ff.fit)},
                    {"final_integral", num(h.integral.back())},
                    {"final_pairing", num(h.pairing.back())},
                    {"pairing_bound", num(h.pairing_bound)},
                    {"max_weak_form_defect", num(weak)},
                    {"steps", traj.diagnostics.steps}});
  }
  out.report["results"] = {{"runs", runs}};
  out.series = table.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
}

}  // namespace

bool RunOutput::pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", x == 0.0 ? 0.0 : x);
  return buf;
}

json to_json(const Verdict& v) {
  return {{"name", v.name},
          {"value", num(v.value)},
          {"comparison", to_string(v.comparison)},
          {"threshold", num(v.threshold)},
          {"window", {num(v.window_lo), num(v.window_hi)}},
          {"pass", v.pass}};
}

json to_json(const FitResult& f) {
  return {{"slope", num(f.slope)},
          {"intercept", num(f.intercept)},
          {"r_squared", num(f.r_squared)},
          {"window", {num(f.window_lo), num(f.window_hi)}},
          {"n_points", f.n_points}};
}

template <Domain D>
Field<D> make_data(const DataSpec& spec, const StarGraph& g) {
  const int n = g.edges();
  Field<D> f(g);
  if (spec.preset == "file") {
    f = Field<D>(g, read_sample_file(spec.file, g));
  } else if (spec.preset == "gaussian") {
    std::vector<bool> on(n, spec.edges.empty());
    for (int j : spec.edges) on[j] = true;
    const double mid = 0.5 * (n - 1);
    f = Field<D>::sample(g, [&](int j, double y) {
      if (!on[j]) return 0.0;
      const double s = (y - spec.center) / spec.width;
      return spec.amplitude * std::exp(-s * s) * (1.0 + spec.tilt * (j - mid) * y / spec.width);
    });
  } else if (spec.preset == "bump") {
    const int edge = spec.edges.empty() ? 0 : spec.edges.front();
    f = Field<D>::sample(g, [&](int j, double y) {
      const double s = (y - spec.center) / spec.width;
      return j == edge ? spec.amplitude * std::exp(-s * s) : 0.0;
    });
  } else if (spec.preset == "discontinuous") {
    f = Field<D>::sample(g, [&](int j, double y) {
      const double s = y / spec.width;
      return spec.amplitude * std::exp(-s * s) * (1.0 + j);
    });
  } else {
    throw ConfigError("unknown data preset '" + spec.preset + "'");
  }
  if (spec.sup_norm > 0.0) {
    const double sup = lp_norm(f, kInf);
    if (sup > 0.0) f *= cplx(spec.sup_norm / sup);
  }
  return f;
}

template GraphFunction make_data<Domain::space>(const DataSpec&, const StarGraph&);
template SpectralFunction make_data<Domain::frequency>(const DataSpec&, const StarGraph&);

std::vector<GraphFunction> smooth_bank(const StarGraph& g, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto u = [&] { return 2.0 * uniform01(rng) - 1.0; };
  const double L = g.length();
  std::vector<GraphFunction> bank;
  for (int i = 0; i < count; ++i) {
    const cplx a0(u(), u());
    const double w0 = 1.0 + 0.5 * (u() + 1.0);
    std::vector<cplx> amp(g.edges());
    std::vector<double> center(g.edges()), k(g.edges());
    for (int j = 0; j < g.edges(); ++j) {
      amp[j] = {u(), u()};
      center[j] = L * (0.2 + 0.15 * (u() + 1.0));
      k[j] = 2.0 * u();
    }
    bank.push_back(GraphFunction::sample(g, [&](int j, double x) {
      const double d = (x - center[j]) / 1.5;
      return a0 * std::exp(-x * x / (w0 * w0)) + amp[j] * std::exp(-d * d) * std::polar(1.0, k[j] * x);
    }));
  }
  return bank;
}

RunOutput run_experiment(const ExperimentConfig& cfg) {
  RunOutput out;
  WarningCapture warnings;
  out.report = json::object();
  out.report["schema_version"] = kSchemaVersion;
  out.report["tool"] = "graph-nls";
  out.report["version"] = kVersion;
  out.report["kind"] = to_string(cfg.kind);
  out.report["config_hash"] = config_hash(cfg);
  out.report["config"] = to_json(cfg);
  const StarGraph g(cfg.graph.edges, cfg.graph.length, cfg.graph.grid);
  out.report["grid"] = {{"edges", g.edges()},
                        {"length", g.length()},
                        {"intervals", g.intervals()},
                        {"space_spacing", g.spacing(Domain::space)},
                        {"frequency_spacing", g.spacing(Domain::frequency)},
                        {"kernel_backend", std::string(simd::backend_name(simd::active_backend()))}};
  switch (cfg.kind) {
    case ExperimentKind::transform_check: run_transform_check(cfg, out); break;
    case ExperimentKind::evolve: run_evolve(cfg, out); break;
    case ExperimentKind::final_state: run_final(cfg, out); break;
    case ExperimentKind::ivp_scatter: run_ivp(cfg, out); break;
    case ExperimentKind::failure_scan: run_failure(cfg, out); break;
  }
  json verdicts = json::array();
  for (const auto& v : out.verdicts) verdicts.push_back(to_json(v));
  out.report["verdicts"] = verdicts;
  out.report["pass"] = out.pass();
  out.report["warnings"] = warnings.messages();
  return out;
}

int execute(const ExperimentConfig& cfg, std::ostream& err) {
  auto record = [&](const char* type, const std::string& message, int code) {
    const json e = {{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}};
    err << e.dump() << '\n';
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (!ec) {
      std::ofstream f(std::filesystem::path(cfg.output_dir) / "error.json", std::ios::binary);
      f << e.dump(2) << '\n';
    }
    return code;
  };
  try {
    validate(cfg);
    const auto out = run_experiment(cfg);
    const std::filesystem::path dir(cfg.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
    std::filesystem::remove(dir / "error.json", ec);
    write_file(dir / "report.json", out.report.dump(2) + "\n");
    write_file(dir / "series.tsv", out.series);
    for (const auto& w : out.report["warnings"]) err << "warning: " << w.get<std::string>() << '\n';
    for (const auto& v : out.verdicts) {
      err << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << format_number(v.value) << ' '
          << to_string(v.comparison) << ' ' << format_number(v.threshold) << '\n';
    }
    return out.pass() ? kExitPass : kExitVerdictFail;
  } catch (const NumericalAbort& e) {
    return record("numerical_abort", e.what(), kExitNumericalAbort);
  } catch (const ConfigError& e) {
    return record("config_error", e.what(), kExitConfigError);
  } catch (const DomainError& e) {
    return record("domain_error", e.what(), kExitConfigError);
  } catch (const PreconditionError& e) {
    return record("precondition_error", e.what(), kExitConfigError);
  } catch (const ShapeError& e) {
    return record("shape_error", e.what(), kExitConfigError);
  } catch (const std::exception& e) {
    return record("internal_error", e.what(), kExitNumericalAbort);
  }
}

}  // namespace gnls::harness
