#pragma once

// Star-graph geometry and sampled functions on its edges.
//
// Each half-line edge is truncated to [0, L] and sampled on the closed grid
// y_m = m * s, m = 0..N. A field lives either on the spatial grid (s = L/N) or
// on the frequency grid (s = pi/L); the two grids are dual under the
// sine/cosine quadrature used by the graph Fourier transform, so every field has
// N + 1 samples per edge regardless of domain.

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "gnls/errors.hpp"

namespace gnls {

using cplx = std::complex<double>;

enum class Domain { space, frequency };

constexpr Domain dual(Domain d) { return d == Domain::space ? Domain::frequency : Domain::space; }

class StarGraph {
 public:
  /// Throws DomainError unless n_edges >= 2, grid_points >= 8 and edge_length > 0.
  StarGraph(int n_edges, double edge_length, int grid_points);

  int edges() const { return n_edges_; }
  double length() const { return length_; }
  /// N: number of grid intervals per edge.
  int intervals() const { return n_; }
  /// N + 1 closed-grid samples per edge.
  std::size_t samples() const { return static_cast<std::size_t>(n_) + 1; }

  double spacing(Domain d) const;
  double coordinate(Domain d, std::size_t m) const { return static_cast<double>(m) * spacing(d); }
  /// Largest grid coordinate, N * spacing.
  double extent(Domain d) const { return n_ * spacing(d); }

  /// Composite trapezoid weights (1/2 at both ends, 1 inside), without the spacing factor.
  std::span<const double> trapezoid_weights() const { return *weights_; }

  friend bool operator==(const StarGraph& a, const StarGraph& b) {
    return a.n_edges_ == b.n_edges_ && a.length_ == b.length_ && a.n_ == b.n_;
  }

 private:
  int n_edges_;
  double length_;
  int n_;
  std::shared_ptr<const std::vector<double>> weights_;
};

/// n-component complex function sampled on one of the two grids of a StarGraph.
/// Storage is edge-major: edge j occupies [j*(N+1), (j+1)*(N+1)).
template <Domain D>
class Field {
 public:
  static constexpr Domain domain = D;

  explicit Field(StarGraph graph)
      : graph_(std::move(graph)), data_(graph_.samples() * graph_.edges()) {}

  /// Throws ShapeError on a size mismatch and DomainError on non-finite samples.
  Field(StarGraph graph, std::vector<cplx> values) : graph_(std::move(graph)), data_(std::move(values)) {
    if (data_.size() != graph_.samples() * graph_.edges()) throw ShapeError("field size does not match graph");
    for (const auto& v : data_) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw DomainError("field sample is not finite");
    }
  }

  /// Sample fn(edge, coordinate) on every grid point.
  template <class Fn>
  static Field sample(const StarGraph& graph, Fn&& fn) {
    Field f(graph);
    for (int j = 0; j < graph.edges(); ++j) {
      auto e = f.edge(j);
      for (std::size_t m = 0; m < e.size(); ++m) e[m] = cplx(fn(j, graph.coordinate(D, m)));
    }
    return f;
  }

  const StarGraph& graph() const { return graph_; }
  int edges() const { return graph_.edges(); }
  std::size_t samples() const { return graph_.samples(); }
  double spacing() const { return graph_.spacing(D); }
  double coordinate(std::size_t m) const { return graph_.coordinate(D, m); }

  std::span<cplx> edge(int j) { return {data_.data() + offset(j), samples()}; }
  std::span<const cplx> edge(int j) const { return {data_.data() + offset(j), samples()}; }
  cplx& operator()(int j, std::size_t m) { return data_[offset(j) + m]; }
  const cplx& operator()(int j, std::size_t m) const { return data_[offset(j) + m]; }

  std::span<cplx> values() { return data_; }
  std::span<const cplx> values() const { return data_; }

  bool all_finite() const {
    for (const auto& v : data_) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
  }

  Field& operator+=(const Field& o) {
    require_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    require_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Field& operator*=(cplx c) {
    for (auto& v : data_) v *= c;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(cplx c, Field a) { return a *= c; }
  friend Field operator*(Field a, cplx c) { return a *= c; }

  void require_same(const Field& o) const {
    if (!(graph_ == o.graph_)) throw ShapeError("fields live on different graphs");
  }

 private:
  std::size_t offset(int j) const { return static_cast<std::size_t>(j) * samples(); }

  StarGraph graph_;
  std::vector<cplx> data_;
};

using GraphFunction = Field<Domain::space>;
using SpectralFunction = Field<Domain::frequency>;

/// Values and one-sided derivatives at the vertex.
///
/// Derivatives use the fourth-order one-sided stencil
///   f'(0+) ~ (-25 f0 + 48 f1 - 36 f2 + 16 f3 - 3 f4) / (12 s),
/// applied identically to every edge.
struct VertexTrace {
  std::vector<cplx> edge_values;
  std::vector<cplx> edge_derivatives;
};

struct KirchhoffResidual {
  double continuity_defect = 0.0;  // max_{j,k} |f_j(0) - f_k(0)|
  double flux_defect = 0.0;        // |sum_j f_j'(0+)|
};

template <Domain D>
struct SymmetricParts {
  std::vector<cplx> average;  // (1/n) sum_j f_j
  Field<D> perp;              // f_j - average, with sum_j perp_j == 0
};

/// Sum_j integral f_j conj(g_j) by the composite trapezoid rule.
template <Domain D>
cplx inner_product(const Field<D>& f, const Field<D>& g);

/// p in [1, inf]; pass std::numeric_limits<double>::infinity() for the sup norm.
template <Domain D>
double lp_norm(const Field<D>& f, double p);

template <Domain D>
double l2_norm(const Field<D>& f) {
  return lp_norm(f, 2.0);
}

template <Domain D>
VertexTrace vertex_trace(const Field<D>& f);

template <Domain D>
KirchhoffResidual kirchhoff_residual(const Field<D>& f);

template <Domain D>
SymmetricParts<D> symmetric_decompose(const Field<D>& f);

/// Fraction of the squared L2 norm carried by [(1 - band) * extent, extent] on all edges.
template <Domain D>
double tail_fraction(const Field<D>& f, double band = 0.1);

/// Default support monitor threshold on tail_fraction.
inline constexpr double kSupportTolerance = 1e-8;

struct WeightedNorms {
  double l2 = 0.0;
  double h1 = 0.0;
  double h01 = 0.0;
  double sigma = 0.0;  // h1 + h01
};

/// Norms from precomputed derivative data; see transforms.hpp for the overload
/// that computes the derivative itself.
WeightedNorms weighted_norms(const GraphFunction& f, const GraphFunction& derivative);

}  // namespace gnls
