#include "gnls/graph.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "gnls/simd/kernels.hpp"

namespace gnls {

StarGraph::StarGraph(int n_edges, double edge_length, int grid_points)
    : n_edges_(n_edges), length_(edge_length), n_(grid_points) {
  if (n_edges < 2) throw DomainError("star graph needs at least 2 edges");
  if (grid_points < 8) throw DomainError("star graph needs at least 8 grid intervals per edge");
  if (!(edge_length > 0.0) || !std::isfinite(edge_length)) throw DomainError("edge length must be positive");
  auto w = std::make_shared<std::vector<double>>(samples(), 1.0);
  w->front() = 0.5;
  w->back() = 0.5;
  weights_ = std::move(w);
}

double StarGraph::spacing(Domain d) const {
  return d == Domain::space ? length_ / n_ : std::numbers::pi / length_;
}

template <Domain D>
cplx inner_product(const Field<D>& f, const Field<D>& g) {
  f.require_same(g);
  const auto w = f.graph().trapezoid_weights();
  cplx acc = 0.0;
  for (int j = 0; j < f.edges(); ++j) acc += simd::weighted_dot(f.edge(j), g.edge(j), w);
  return acc * f.spacing();
}

template <Domain D>
double lp_norm(const Field<D>& f, double p) {
  if (std::isnan(p) || p < 1.0) throw DomainError("lp_norm requires p >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (int j = 0; j < f.edges(); ++j) m = std::max(m, simd::max_abs(f.edge(j)));
    return m;
  }
  const auto w = f.graph().trapezoid_weights();
  if (p == 2.0) {
    double acc = 0.0;
    for (int j = 0; j < f.edges(); ++j) acc += simd::weighted_norm2(f.edge(j), w);
    return std::sqrt(acc * f.spacing());
  }
  double acc = 0.0;
  for (int j = 0; j < f.edges(); ++j) {
    const auto e = f.edge(j);
    for (std::size_t m = 0; m < e.size(); ++m) acc += w[m] * std::pow(std::abs(e[m]), p);
  }
  return std::pow(acc * f.spacing(), 1.0 / p);
}

template <Domain D>
VertexTrace vertex_trace(const Field<D>& f) {
  VertexTrace tr;
  const double inv = 1.0 / (12.0 * f.spacing());
  for (int j = 0; j < f.edges(); ++j) {
    const auto e = f.edge(j);
    tr.edge_values.push_back(e[0]);
    tr.edge_derivatives.push_back((-25.0 * e[0] + 48.0 * e[1] - 36.0 * e[2] + 16.0 * e[3] - 3.0 * e[4]) * inv);
  }
  return tr;
}

template <Domain D>
KirchhoffResidual kirchhoff_residual(const Field<D>& f) {
  const VertexTrace tr = vertex_trace(f);
  KirchhoffResidual r;
  for (std::size_t j = 0; j < tr.edge_values.size(); ++j) {
    for (std::size_t k = j + 1; k < tr.edge_values.size(); ++k) {
      r.continuity_defect = std::max(r.continuity_defect, std::abs(tr.edge_values[j] - tr.edge_values[k]));
    }
  }
  cplx flux = 0.0;
  for (const auto& d : tr.edge_derivatives) flux += d;
  r.flux_defect = std::abs(flux);
  return r;
}

template <Domain D>
SymmetricParts<D> symmetric_decompose(const Field<D>& f) {
  const int n = f.edges();
  const std::size_t s = f.samples();
  SymmetricParts<D> out{std::vector<cplx>(s, 0.0), Field<D>(f.graph())};
  for (int j = 0; j < n; ++j) {
    const auto e = f.edge(j);
    for (std::size_t m = 0; m < s; ++m) out.average[m] += e[m];
  }
  for (auto& a : out.average) a /= static_cast<double>(n);
  for (int j = 0; j < n; ++j) {
    const auto e = f.edge(j);
    auto p = out.perp.edge(j);
    for (std::size_t m = 0; m < s; ++m) p[m] = e[m] - out.average[m];
  }
  // Remove the rounding residue so the perpendicular part sums to zero exactly
  // enough for the sine transform to see no edge-average component.
  for (std::size_t m = 0; m < s; ++m) {
    cplx sum = 0.0;
    for (int j = 0; j < n; ++j) sum += out.perp(j, m);
    const cplx corr = sum / static_cast<double>(n);
    for (int j = 0; j < n; ++j) out.perp(j, m) -= corr;
  }
  return out;
}

template <Domain D>
double tail_fraction(const Field<D>& f, double band) {
  const auto w = f.graph().trapezoid_weights();
  const std::size_t s = f.samples();
  const auto first = static_cast<std::size_t>(std::floor((1.0 - band) * static_cast<double>(s - 1)));
  double total = 0.0, tail = 0.0;
  for (int j = 0; j < f.edges(); ++j) {
    const auto e = f.edge(j);
    total += simd::weighted_norm2(e, w);
    tail += simd::weighted_norm2(e.subspan(first), w.subspan(first));
  }
  return total > 0.0 ? tail / total : 0.0;
}

WeightedNorms weighted_norms(const GraphFunction& f, const GraphFunction& derivative) {
  f.require_same(derivative);
  WeightedNorms n;
  const double l2sq = std::pow(l2_norm(f), 2);
  const double dsq = std::pow(l2_norm(derivative), 2);
  GraphFunction xf = f;
  for (int j = 0; j < xf.edges(); ++j) {
    auto e = xf.edge(j);
    for (std::size_t m = 0; m < e.size(); ++m) e[m] *= xf.coordinate(m);
  }
  const double xsq = std::pow(l2_norm(xf), 2);
  n.l2 = std::sqrt(l2sq);
  n.h1 = std::sqrt(l2sq + dsq);
  n.h01 = std::sqrt(l2sq + xsq);
  n.sigma = n.h1 + n.h01;
  return n;
}

#define GNLS_INSTANTIATE(D)                                             \
  template cplx inner_product<D>(const Field<D>&, const Field<D>&);     \
  template double lp_norm<D>(const Field<D>&, double);                 \
  template VertexTrace vertex_trace<D>(const Field<D>&);                \
  template KirchhoffResidual kirchhoff_residual<D>(const Field<D>&);    \
  template SymmetricParts<D> symmetric_decompose<D>(const Field<D>&);   \
  template double tail_fraction<D>(const Field<D>&, double);

GNLS_INSTANTIATE(Domain::space)
GNLS_INSTANTIATE(Domain::frequency)
#undef GNLS_INSTANTIATE

}  // namespace gnls
