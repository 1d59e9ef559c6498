#include "gnls/transforms.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <numbers>
#include <sstream>

#include "gnls/diagnostics.hpp"
#include "gnls/simd/kernels.hpp"

namespace gnls {
namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2OverPi = std::sqrt(2.0 / kPi);

void scale(std::span<cplx> z, cplx c) {
  for (auto& v : z) v *= c;
}

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct R2R {
  fftw_plan plan = nullptr;
  int length = 0;

  R2R(int n, fftw_r2r_kind kind) : length(n) {
    std::lock_guard lock(planner_mutex());
    double* in = fftw_alloc_real(2 * static_cast<std::size_t>(n));
    double* out = fftw_alloc_real(2 * static_cast<std::size_t>(n));
    // Two interleaved transforms: real and imaginary parts of a complex profile.
    plan = fftw_plan_many_r2r(1, &n, 2, in, nullptr, 2, 1, out, nullptr, 2, 1, &kind,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    if (!plan) throw Error("FFTW failed to build an r2r plan");
  }
  ~R2R() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  R2R(const R2R&) = delete;
  R2R& operator=(const R2R&) = delete;

  void run(const cplx* in, cplx* out) const {
    std::vector<cplx> scratch(in, in + length);
    fftw_execute_r2r(plan, reinterpret_cast<double*>(scratch.data()), reinterpret_cast<double*>(out));
  }
};

void check_size(std::span<const cplx> in, std::span<cplx> out, std::size_t n) {
  if (in.size() != n || out.size() != n) throw ShapeError("transform profile has the wrong length");
}

void cosine_impl(const R2R& p, std::span<const cplx> in, std::span<cplx> out, double spacing) {
  check_size(in, out, static_cast<std::size_t>(p.length));
  p.run(in.data(), out.data());
  scale(out, 0.5 * kSqrt2OverPi * spacing);
}

void sine_impl(const R2R& p, std::span<const cplx> in, std::span<cplx> out, double spacing) {
  check_size(in, out, static_cast<std::size_t>(p.length) + 2);
  p.run(in.data() + 1, out.data() + 1);
  out.front() = 0.0;
  out.back() = 0.0;
  scale(out, 0.5 * kSqrt2OverPi * spacing);
}

}  // namespace

struct TransformPlan::Impl {
  R2R dct, dst, dct_refined, dst_refined;
  Impl(int n, int p)
      : dct(n + 1, FFTW_REDFT00),
        dst(n - 1, FFTW_RODFT00),
        dct_refined(p * n + 1, FFTW_REDFT00),
        dst_refined(p * n - 1, FFTW_RODFT00) {}
};

TransformPlan::TransformPlan(const StarGraph& graph, int refine_factor) : graph_(graph), refine_(refine_factor) {
  if (refine_factor < 1 || refine_factor > 16) throw DomainError("refine factor must lie in [1, 16]");
  impl_ = std::make_shared<const Impl>(graph.intervals(), refine_factor);
}

void TransformPlan::cosine(std::span<const cplx> in, std::span<cplx> out, double spacing) const {
  cosine_impl(impl_->dct, in, out, spacing);
}
void TransformPlan::sine(std::span<const cplx> in, std::span<cplx> out, double spacing) const {
  sine_impl(impl_->dst, in, out, spacing);
}
void TransformPlan::cosine_refined(std::span<const cplx> in, std::span<cplx> out, double spacing) const {
  cosine_impl(impl_->dct_refined, in, out, spacing);
}
void TransformPlan::sine_refined(std::span<const cplx> in, std::span<cplx> out, double spacing) const {
  sine_impl(impl_->dst_refined, in, out, spacing);
}

void TransformPlan::require(const StarGraph& g) const {
  if (!(g == graph_)) throw ShapeError("transform plan was built for a different graph");
}

std::vector<cplx> half_line_transform(HalfLineSign sign, std::span<const cplx> profile, double spacing) {
  if (profile.size() < 2) throw ShapeError("half-line profile needs at least two samples");
  const std::size_t n = profile.size() - 1;
  const std::size_t period = 2 * n;
  // exp(i pi r / N) for r = 0..2N-1; the phase index k*m is reduced mod 2N exactly.
  std::vector<cplx> table(period);
  for (std::size_t r = 0; r < period; ++r) {
    const double a = kPi * static_cast<double>(r) / static_cast<double>(n);
    table[r] = {std::cos(a), std::sin(a)};
  }
  const double pref = spacing / std::sqrt(2.0 * kPi);
  std::vector<cplx> out(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    cplx acc = 0.0;
    for (std::size_t m = 0; m <= n; ++m) {
      const double w = (m == 0 || m == n) ? 0.5 : 1.0;
      cplx e = table[(k * m) % period];
      if (sign == HalfLineSign::minus) e = std::conj(e);
      acc += w * e * profile[m];
    }
    out[k] = pref * acc;
  }
  return out;
}

template <Domain D>
Field<dual(D)> transform(const TransformPlan& plan, TransformKind kind, const Field<D>& f) {
  plan.require(f.graph());
  const std::size_t s = f.samples();
  const double h = f.spacing();
  const auto parts = symmetric_decompose(f);
  const bool average_by_cosine = kind == TransformKind::forward || kind == TransformKind::inverse;

  std::vector<cplx> avg_hat(s);
  if (average_by_cosine) {
    plan.cosine(parts.average, avg_hat, h);
  } else {
    plan.sine(parts.average, avg_hat, h);
    // F_c: -i S[avg]; F_c^-1: +i S[avg].
    scale(avg_hat, kind == TransformKind::co_forward ? cplx(0, -1) : cplx(0, 1));
  }

  Field<dual(D)> out(f.graph());
  std::vector<cplx> tmp(s);
  for (int j = 0; j < f.edges(); ++j) {
    const auto p = parts.perp.edge(j);
    if (average_by_cosine) {
      plan.sine(p, tmp, h);
      scale(tmp, kind == TransformKind::forward ? cplx(0, -1) : cplx(0, 1));
    } else {
      plan.cosine(p, tmp, h);
    }
    auto o = out.edge(j);
    for (std::size_t k = 0; k < s; ++k) o[k] = tmp[k] + avg_hat[k];
  }
  return out;
}

template <Domain D>
Field<dual(D)> transform_reference(TransformKind kind, const Field<D>& f) {
  const int n = f.edges();
  const std::size_t s = f.samples();
  const double h = f.spacing();
  std::vector<cplx> sum(s, 0.0);
  for (int j = 0; j < n; ++j) {
    const auto e = f.edge(j);
    for (std::size_t m = 0; m < s; ++m) sum[m] += e[m];
  }
  const bool forward = kind == TransformKind::forward || kind == TransformKind::co_forward;
  const bool co = kind == TransformKind::co_forward || kind == TransformKind::co_inverse;
  // J term uses F^+ for the forward maps and F^- for the inverse maps.
  const auto j_term = half_line_transform(forward ? HalfLineSign::plus : HalfLineSign::minus, sum, h);
  const double j_coef = (co ? -2.0 : 2.0) / n;

  Field<dual(D)> out(f.graph());
  for (int j = 0; j < n; ++j) {
    const auto fm = half_line_transform(HalfLineSign::minus, f.edge(j), h);
    const auto fp = half_line_transform(HalfLineSign::plus, f.edge(j), h);
    auto o = out.edge(j);
    for (std::size_t k = 0; k < s; ++k) {
      cplx diag;
      switch (kind) {
        case TransformKind::forward: diag = fm[k] - fp[k]; break;
        case TransformKind::inverse: diag = fp[k] - fm[k]; break;
        default: diag = fm[k] + fp[k]; break;
      }
      o[k] = diag + j_coef * j_term[k];
    }
  }
  return out;
}

template <Domain D>
Field<D> apply_M(double t, const Field<D>& f, Direction direction) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("apply_M requires t > 0");
  const double sign = direction == Direction::forward ? 1.0 : -1.0;
  std::vector<double> phase(f.samples());
  for (std::size_t m = 0; m < phase.size(); ++m) {
    const double y = f.coordinate(m);
    phase[m] = sign * y * y / (4.0 * t);
  }
  Field<D> out = f;
  for (int j = 0; j < out.edges(); ++j) simd::rotate(out.edge(j), phase);
  return out;
}

namespace {

// Band-limited refinement of one field onto refine_factor * N intervals.
template <Domain D>
std::vector<std::vector<cplx>> refine(const TransformPlan& plan, const Field<D>& g) {
  const int p = plan.refine_factor();
  const std::size_t s = g.samples();
  const std::size_t n = s - 1;
  std::vector<std::vector<cplx>> out(static_cast<std::size_t>(g.edges()));
  if (p == 1) {
    for (int j = 0; j < g.edges(); ++j) out[j].assign(g.edge(j).begin(), g.edge(j).end());
    return out;
  }
  const double h = g.spacing();
  const double dual_spacing = kPi / (static_cast<double>(n) * h);
  const std::size_t sr = static_cast<std::size_t>(p) * n + 1;
  const auto parts = symmetric_decompose(g);

  std::vector<cplx> coef(s), padded(sr), avg_r(sr);
  plan.cosine(parts.average, coef, h);
  std::fill(padded.begin(), padded.end(), cplx(0.0));
  std::copy(coef.begin(), coef.end(), padded.begin());
  // The k = N coefficient carried weight 1/2 on the coarse grid but is interior now.
  padded[n] *= 0.5;
  plan.cosine_refined(padded, avg_r, dual_spacing);

  for (int j = 0; j < g.edges(); ++j) {
    plan.sine(parts.perp.edge(j), coef, h);
    std::fill(padded.begin(), padded.end(), cplx(0.0));
    std::copy(coef.begin(), coef.end(), padded.begin());
    out[j].resize(sr);
    plan.sine_refined(padded, out[j], dual_spacing);
    for (std::size_t m = 0; m < sr; ++m) out[j][m] += avg_r[m];
  }
  return out;
}

cplx cubic_read(const std::vector<cplx>& v, double q) {
  const auto last = static_cast<long>(v.size()) - 1;
  long i0 = static_cast<long>(std::floor(q)) - 1;
  i0 = std::clamp(i0, 0L, last - 3);
  const double x = q - static_cast<double>(i0);
  const double l0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
  const double l1 = x * (x - 2.0) * (x - 3.0) / 2.0;
  const double l2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
  const double l3 = x * (x - 1.0) * (x - 2.0) / 6.0;
  return l0 * v[i0] + l1 * v[i0 + 1] + l2 * v[i0 + 2] + l3 * v[i0 + 3];
}

}  // namespace

template <Domain Out, Domain In>
Field<Out> dilate(const TransformPlan& plan, double t, const Field<In>& g, Direction direction) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("apply_D requires t > 0");
  plan.require(g.graph());
  const auto fine = refine(plan, g);
  const double fine_spacing = g.spacing() / plan.refine_factor();
  const double extent = g.graph().extent(In);
  const bool fwd = direction == Direction::forward;
  const double scale = fwd ? 1.0 / (2.0 * t) : 2.0 * t;
  const cplx factor = fwd ? std::polar(1.0 / std::sqrt(2.0 * t), -kPi / 4.0) : std::polar(std::sqrt(2.0 * t), kPi / 4.0);

  Field<Out> out(g.graph());
  std::size_t outside = 0;
  for (int j = 0; j < out.edges(); ++j) {
    auto o = out.edge(j);
    for (std::size_t m = 0; m < o.size(); ++m) {
      const double q = out.coordinate(m) * scale;
      if (q > extent * (1.0 + 1e-12)) {
        o[m] = 0.0;
        ++outside;
        continue;
      }
      o[m] = factor * cubic_read(fine[j], q / fine_spacing);
    }
  }
  if (outside > 0 && tail_fraction(g) > kSupportTolerance) {
    std::ostringstream msg;
    msg << "dilation at t=" << t << " read " << outside
        << " samples beyond the grid of a field that is not negligible there";
    warn(msg.str());
  }
  return out;
}

template <Domain D>
Field<D> apply_X(const Field<D>& f, double power) {
  if (!(power >= 0.0 && power <= 1.0)) throw DomainError("apply_X power must lie in [0, 1]");
  Field<D> out = f;
  std::vector<double> w(f.samples());
  for (std::size_t m = 0; m < w.size(); ++m) w[m] = std::pow(f.coordinate(m), power);
  for (int j = 0; j < out.edges(); ++j) {
    auto e = out.edge(j);
    for (std::size_t m = 0; m < e.size(); ++m) e[m] *= w[m];
  }
  return out;
}

namespace {

struct Coefficients {
  std::vector<cplx> average;             // cosine coefficients of avg
  std::vector<std::vector<cplx>> perp;   // sine coefficients of perp_j
};

template <Domain D>
Coefficients coefficients(const TransformPlan& plan, const Field<D>& f) {
  const auto parts = symmetric_decompose(f);
  Coefficients c;
  c.average.resize(f.samples());
  plan.cosine(parts.average, c.average, f.spacing());
  for (int j = 0; j < f.edges(); ++j) {
    c.perp.emplace_back(f.samples());
    plan.sine(parts.perp.edge(j), c.perp.back(), f.spacing());
  }
  return c;
}

bool resolved(const Coefficients& c, double tol) {
  const std::size_t s = c.average.size();
  const std::size_t top = (3 * (s - 1)) / 4;
  double peak = 0.0, tail = 0.0;
  auto scan = [&](const std::vector<cplx>& v) {
    for (std::size_t k = 0; k < s; ++k) {
      const double a = std::abs(v[k]);
      peak = std::max(peak, a);
      if (k >= top) tail = std::max(tail, a);
    }
  };
  scan(c.average);
  for (const auto& p : c.perp) scan(p);
  return peak == 0.0 || tail <= tol * peak;
}

template <Domain D>
Field<D> spectral_from(const TransformPlan& plan, const Field<D>& f, Coefficients c) {
  const std::size_t s = f.samples();
  const double dual_spacing = f.graph().spacing(dual(D));
  // avg = C^-1[a]  =>  avg' = S^-1[-k a];   perp = S^-1[b]  =>  perp' = C^-1[k b].
  for (std::size_t k = 0; k < s; ++k) {
    const double kk = static_cast<double>(k) * dual_spacing;
    c.average[k] *= -kk;
    for (auto& p : c.perp) p[k] *= kk;
  }
  std::vector<cplx> avg_d(s), tmp(s);
  plan.sine(c.average, avg_d, dual_spacing);
  Field<D> out(f.graph());
  for (int j = 0; j < f.edges(); ++j) {
    plan.cosine(c.perp[j], tmp, dual_spacing);
    auto o = out.edge(j);
    for (std::size_t m = 0; m < s; ++m) o[m] = tmp[m] + avg_d[m];
  }
  return out;
}

template <Domain D>
Field<D> finite_difference(const Field<D>& f) {
  Field<D> out(f.graph());
  const double inv = 1.0 / (12.0 * f.spacing());
  const std::size_t n = f.samples() - 1;
  for (int j = 0; j < f.edges(); ++j) {
    const auto e = f.edge(j);
    auto o = out.edge(j);
    o[0] = (-25.0 * e[0] + 48.0 * e[1] - 36.0 * e[2] + 16.0 * e[3] - 3.0 * e[4]) * inv;
    o[1] = (-3.0 * e[0] - 10.0 * e[1] + 18.0 * e[2] - 6.0 * e[3] + e[4]) * inv;
    for (std::size_t m = 2; m + 2 <= n; ++m) o[m] = (e[m - 2] - 8.0 * e[m - 1] + 8.0 * e[m + 1] - e[m + 2]) * inv;
    o[n - 1] = -(-3.0 * e[n] - 10.0 * e[n - 1] + 18.0 * e[n - 2] - 6.0 * e[n - 3] + e[n - 4]) * inv;
    o[n] = -(-25.0 * e[n] + 48.0 * e[n - 1] - 36.0 * e[n - 2] + 16.0 * e[n - 3] - 3.0 * e[n - 4]) * inv;
  }
  return out;
}

}  // namespace

template <Domain D>
bool spectrally_resolved(const TransformPlan& plan, const Field<D>& f, double tol) {
  plan.require(f.graph());
  return resolved(coefficients(plan, f), tol);
}

template <Domain D>
Field<D> derivative(const TransformPlan& plan, const Field<D>& f, DerivativeMethod method) {
  plan.require(f.graph());
  if (method == DerivativeMethod::finite_difference) return finite_difference(f);
  auto c = coefficients(plan, f);
  if (method == DerivativeMethod::automatic && !resolved(c, 1e-10)) return finite_difference(f);
  return spectral_from(plan, f, std::move(c));
}

WeightedNorms weighted_norms(const TransformPlan& plan, const GraphFunction& f) {
  return weighted_norms(f, derivative(plan, f));
}

CommutationResiduals check_commutation_identities(const TransformPlan& plan, const GraphFunction& f,
                                                  DerivativeMethod method) {
  CommutationResiduals r;
  const double norm = weighted_norms(f, derivative(plan, f, method)).sigma;
  if (norm == 0.0) return r;
  const cplx i(0.0, 1.0);
  const GraphFunction df = derivative(plan, f, method);

  // X F^-1 f = i F_c^-1 f'  (f read as a function of the variable dual to the output).
  r.x_inverse = l2_norm(apply_X(inverse_F(plan, f)) - i * inverse_Fc(plan, df)) / norm;
  // F_c f' = i X F f
  const SpectralFunction ff = forward_F(plan, f);
  r.co_derivative = l2_norm(forward_Fc(plan, df) - i * apply_X(ff)) / norm;
  // d/dk (F f) = -i F_c (X f)
  r.derivative_of_F = l2_norm(derivative(plan, ff, method) + i * forward_Fc(plan, apply_X(f))) / norm;
  return r;
}

#define GNLS_INSTANTIATE(D)                                                                            \
  template Field<dual(D)> transform<D>(const TransformPlan&, TransformKind, const Field<D>&);         \
  template Field<dual(D)> transform_reference<D>(TransformKind, const Field<D>&);                     \
  template Field<D> apply_M<D>(double, const Field<D>&, Direction);                                  \
  template Field<D> apply_X<D>(const Field<D>&, double);                                             \
  template bool spectrally_resolved<D>(const TransformPlan&, const Field<D>&, double);               \
  template Field<D> derivative<D>(const TransformPlan&, const Field<D>&, DerivativeMethod);          \
  template Field<Domain::space> dilate<Domain::space, D>(const TransformPlan&, double, const Field<D>&, \
                                                         Direction);                                   \
  template Field<Domain::frequency> dilate<Domain::frequency, D>(const TransformPlan&, double,          \
                                                                 const Field<D>&, Direction);

GNLS_INSTANTIATE(Domain::space)
GNLS_INSTANTIATE(Domain::frequency)
#undef GNLS_INSTANTIATE

}  // namespace gnls
