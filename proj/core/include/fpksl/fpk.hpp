#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "fpksl/measure.hpp"
#include "fpksl/mollifier.hpp"

namespace fpksl {

/// Largest supported number of diffusion columns.
inline constexpr int kMaxRank = 4;

using DiffusionColumns = std::array<Point, kMaxRank>;

/// Drift b[mu](x, t) and diffusion columns sigma_l[mu](x, t), l = 1..rank, of a
/// (possibly nonlinear) Fokker-Planck equation
///   d/dt m - 1/2 sum_ij d_ij (a_ij m) + div(b m) = 0,  a = sum_l sigma_l sigma_l^T.
///
/// Evaluators receive the measure path the coefficients are frozen at. A
/// causal field reads only the part of the path up to time t, which is what
/// lets propagate() step a path that is still being built. Causality is
/// declared, not checked.
struct CoefficientField {
  using DriftFn = std::function<Point(const MeasurePath&, const Point&, double)>;
  using DiffusionFn = std::function<DiffusionColumns(const MeasurePath&, const Point&, double)>;
  /// Replaces x + h b(x, t) as the characteristic endpoint (rank 0 only).
  using FlowFn = std::function<Point(const MeasurePath&, const Point&, double t, double h)>;
  /// Called once per time step before any node is evaluated at t_k.
  using PrepareFn = std::function<void(const MeasurePath&, int k)>;

  int dim = 1;
  int rank = 0;
  bool causal = true;
  DriftFn drift;
  DiffusionFn diffusion;
  FlowFn flow;
  PrepareFn prepare;
  /// Declared C in |b| + |sigma| <= C (1 + |x|); infinity when not claimed.
  double growth_bound = std::numeric_limits<double>::infinity();
};

/// Samples the field on random in-box points of `path`'s lattice and throws if
/// |b| + sum_l |sigma_l| > C (1 + |x|) anywhere.
void verify_linear_growth(const CoefficientField& field, const MeasurePath& path, int samples = 256,
                          unsigned seed = 7);

/// Builds a measure-independent field from plain functions of (x, t).
CoefficientField make_linear_field(int dim, int rank, std::function<Point(const Point&, double)> drift,
                                   std::function<DiffusionColumns(const Point&, double)> diffusion,
                                   double growth_bound = std::numeric_limits<double>::infinity());

struct TransitionRow {
  std::size_t source = 0;
  std::vector<NodeWeight> targets;  // ascending node order, probabilities p_ji

  double total() const;
};

/// Endpoints x + h b +- sqrt(r h) sigma_l (l = 1..r), or the single point
/// x + h b (or the field's flow override) when r = 0. Under Reflect every
/// endpoint is folded into the box. `node` and `k` only label error messages.
std::vector<Point> characteristics(const CoefficientField& coeffs, const MeasurePath& path, const Point& x,
                                   int k, double h, std::size_t node = 0);

/// p_ji = 1/(2r) sum_l [beta_i(Phi_l+) + beta_i(Phi_l-)].
TransitionRow transition_row(const CoefficientField& coeffs, const MeasurePath& path, std::size_t j, int k);

/// One step of the scheme: scatters every source weight through its
/// transition row. Sources are visited in ascending order, so the result is
/// bit-reproducible. Calls coeffs.prepare(path, k) first when set.
GridMeasure step(const GridMeasure& current, const CoefficientField& coeffs, const MeasurePath& path, int k);

/// Runs the scheme for `steps` steps of size h starting at m0. A causal field
/// may pass no frozen path: coefficients then read the path under
/// construction. A non-causal field must be given the frozen path, and the
/// result is one application of the fixed-point map to it.
MeasurePath propagate(const GridMeasure& m0, const CoefficientField& coeffs, double h, int steps,
                      const MeasurePath* frozen_path = nullptr);

/// Convolution of drift and diffusion with the discrete kernel, summed over
/// the (unbounded) lattice nodes around x.
CoefficientField mollify_coefficients(const CoefficientField& coeffs, const MollifierSpec& spec,
                                      const Lattice& lattice);

/// A C^2 test function with analytic gradient and Hessian (row-major d x d in
/// the leading block of a kMaxDim x kMaxDim array).
struct TestFunction {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
  std::function<std::array<double, kMaxDim * kMaxDim>(const Point&)> hessian;
};

/// 1/2 sum_ij a_ij d_ij phi + b . grad phi at (x, t).
double generator_apply(const CoefficientField& coeffs, const MeasurePath& path, const TestFunction& phi,
                       const Point& x, double t);

/// | int phi dm(t) - int phi dm(0) - int_0^t int L phi dm(s) ds |, the time
/// integral by the trapezoid rule over slices. t must be a grid time.
double weak_residual(const MeasurePath& path, const CoefficientField& coeffs, const TestFunction& phi, double t);

}  // namespace fpksl
