#pragma once

// Graph Fourier transform F for the Kirchhoff Laplacian, the co-transform F_c,
// their inverses, and the multiplier / dilation / position operators.
//
// With avg = (1/n) sum_j f_j and perp_j = f_j - avg, the defining matrix
// formulas reduce to half-line sine and cosine transforms:
//
//   (F f)_j      = -i S[perp_j] + C[avg]
//   (F^-1 g)_j   = +i S[perp_j] + C[avg]
//   (F_c f)_j    =    C[perp_j] - i S[avg]
//   (F_c^-1 g)_j =    C[perp_j] + i S[avg]
//
// where S, C are sqrt(2/pi) * integral_0^L {sin, cos}(y k) f(y) dy evaluated by
// the trapezoid rule. On the closed grid the kernels are sin(pi k m / N) and
// cos(pi k m / N), i.e. DST-I on the interior and DCT-I on all N + 1 points,
// so every transform maps a field on one grid to its dual grid. The discrete
// maps are exactly unitary for the trapezoid inner product on fields whose
// perpendicular part vanishes at both ends of the edge (vertex continuity plus
// negligible mass at y = L).

#include <memory>
#include <span>
#include <vector>

#include "gnls/graph.hpp"

namespace gnls {

class TransformPlan {
 public:
  /// Builds the FFTW plans for N and for the refined size refine_factor * N used
  /// by the dilation operator. Construction takes a global planner lock.
  explicit TransformPlan(const StarGraph& graph, int refine_factor = 4);

  const StarGraph& graph() const { return graph_; }
  int refine_factor() const { return refine_; }

  /// out_k = sqrt(2/pi) * spacing * sum_m w_m cos(pi k m / N) in_m, k = 0..N.
  void cosine(std::span<const cplx> in, std::span<cplx> out, double spacing) const;
  /// out_k = sqrt(2/pi) * spacing * sum_m sin(pi k m / N) in_m; out_0 = out_N = 0.
  void sine(std::span<const cplx> in, std::span<cplx> out, double spacing) const;
  /// Same transforms on refine_factor * N intervals.
  void cosine_refined(std::span<const cplx> in, std::span<cplx> out, double spacing) const;
  void sine_refined(std::span<const cplx> in, std::span<cplx> out, double spacing) const;

  /// Throws ShapeError if the field's graph differs from the plan's.
  void require(const StarGraph& g) const;

 private:
  struct Impl;
  StarGraph graph_;
  int refine_;
  std::shared_ptr<const Impl> impl_;
};

enum class TransformKind { forward, inverse, co_forward, co_inverse };

enum class HalfLineSign { plus, minus };

enum class Direction { forward, inverse };

/// Slow reference: (2 pi)^{-1/2} * trapezoid sum of exp(+-i k y) f(y) on the
/// given grid, evaluated on the dual grid k = pi q / (N spacing), q = 0..N.
std::vector<cplx> half_line_transform(HalfLineSign sign, std::span<const cplx> profile, double spacing);

/// Fast path through the sine/cosine transforms.
template <Domain D>
Field<dual(D)> transform(const TransformPlan& plan, TransformKind kind, const Field<D>& f);

/// Literal matrix formula built from half_line_transform; O(N^2).
template <Domain D>
Field<dual(D)> transform_reference(TransformKind kind, const Field<D>& f);

template <Domain D>
Field<dual(D)> forward_F(const TransformPlan& plan, const Field<D>& f) {
  return transform(plan, TransformKind::forward, f);
}
template <Domain D>
Field<dual(D)> inverse_F(const TransformPlan& plan, const Field<D>& g) {
  return transform(plan, TransformKind::inverse, g);
}
template <Domain D>
Field<dual(D)> forward_Fc(const TransformPlan& plan, const Field<D>& f) {
  return transform(plan, TransformKind::co_forward, f);
}
template <Domain D>
Field<dual(D)> inverse_Fc(const TransformPlan& plan, const Field<D>& g) {
  return transform(plan, TransformKind::co_inverse, g);
}

/// Pointwise exp(+-i y^2 / 4t) on the field's own grid (forward: +).
/// Throws DomainError for t <= 0.
template <Domain D>
Field<D> apply_M(double t, const Field<D>& f, Direction direction = Direction::forward);

/// Dilation between grids. Forward: out(y) = (2it)^{-1/2} g(y / 2t);
/// inverse: out(y) = (2it)^{1/2} g(2t y), principal branch i^{1/2} = e^{i pi/4}.
/// g is read on its own grid by band-limited refinement plus cubic interpolation;
/// points beyond the grid read as zero (with a warning if g is not negligible there).
template <Domain Out, Domain In>
Field<Out> dilate(const TransformPlan& plan, double t, const Field<In>& g, Direction direction);

template <Domain In>
GraphFunction apply_D(const TransformPlan& plan, double t, const Field<In>& g) {
  return dilate<Domain::space>(plan, t, g, Direction::forward);
}
template <Domain Out = Domain::frequency>
Field<Out> apply_D_inverse(const TransformPlan& plan, double t, const GraphFunction& u) {
  return dilate<Out>(plan, t, u, Direction::inverse);
}

/// Pointwise y^power, power in [0, 1]; apply_X(f, 1) is (y f_j)_j.
template <Domain D>
Field<D> apply_X(const Field<D>& f, double power = 1.0);

enum class DerivativeMethod { automatic, spectral, finite_difference };

/// True when the sine/cosine coefficients of f decay below tol (relative) over
/// the top quarter of the band, i.e. the spectral derivative is trustworthy.
template <Domain D>
bool spectrally_resolved(const TransformPlan& plan, const Field<D>& f, double tol = 1e-10);

/// d/dy on each edge. automatic: spectral (via the transform pair consistent with
/// F) when spectrally_resolved, otherwise fourth-order finite differences.
template <Domain D>
Field<D> derivative(const TransformPlan& plan, const Field<D>& f,
                    DerivativeMethod method = DerivativeMethod::automatic);

template <Domain D>
Field<D> spectral_derivative(const TransformPlan& plan, const Field<D>& f) {
  return derivative(plan, f, DerivativeMethod::automatic);
}

WeightedNorms weighted_norms(const TransformPlan& plan, const GraphFunction& f);

struct CommutationResiduals {
  double x_inverse = 0.0;     // |X F^-1 f - i F_c^-1 f'|
  double co_derivative = 0.0; // |F_c f' - i X F f|
  double derivative_of_F = 0.0;  // |d(F f) + i F_c(X f)|
};

/// Residuals of the three commutation identities, each divided by the Sigma norm
/// of f. The first two need vertex continuity; the third only decay.
CommutationResiduals check_commutation_identities(const TransformPlan& plan, const GraphFunction& f,
                                                  DerivativeMethod method = DerivativeMethod::automatic);

}  // namespace gnls
