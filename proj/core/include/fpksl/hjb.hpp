#pragma once

#include <functional>
#include <limits>
#include <variant>
#include <vector>

#include "fpksl/measure.hpp"
#include "fpksl/mollifier.hpp"

namespace fpksl {

/// Candidate controls: a symmetric tensor grid of `points_per_axis` values in
/// [-a_max, a_max] per axis (always containing 0), optionally refined by
/// `refine_passes` local searches at half the previous spacing around the
/// current argmin.
struct ControlGrid {
  double a_max = 2.0;
  int points_per_axis = 21;
  int refine_passes = 1;

  void validate() const;
  double spacing() const { return 2.0 * a_max / (points_per_axis - 1); }
};

/// Running cost F(x, m) and terminal cost G(x, m). Binding a cost to a
/// measure returns a pointwise evaluator, so that per-measure work (e.g. a
/// convolution of the density) is done once per slice.
struct CostPair {
  using Pointwise = std::function<double(const Point&)>;
  using Binder = std::function<Pointwise(const GridMeasure&)>;

  Binder running;
  Binder terminal;
  /// Declared c with |F|, |G| <= c; infinity when not claimed.
  double bound = std::numeric_limits<double>::infinity();
};

/// Value samples v_{i,k} for k = first_step..N; slices before first_step
/// were not computed (Hughes mode starts mid-horizon).
class ValueGrid {
 public:
  ValueGrid(LatticePtr lattice, double h, double sigma, int steps, int first_step);

  const Lattice& lattice() const { return *lattice_; }
  const LatticePtr& lattice_ptr() const { return lattice_; }
  double h() const { return h_; }
  double sigma() const { return sigma_; }
  int steps() const { return steps_; }
  int first_step() const { return first_; }

  std::span<const double> slice(int k) const;
  std::span<double> slice(int k);
  double at(std::size_t node, int k) const { return slice(k)[node]; }
  double max_abs() const;

 private:
  LatticePtr lattice_;
  double h_;
  double sigma_;
  int steps_;
  int first_;
  std::vector<std::vector<double>> slices_;
};

/// Measure the costs are evaluated against: a full path (MFG: F at mu(t_k),
/// G at mu(T)) or one frozen slice (Hughes: F and G both at that measure).
using MeasureSource = std::variant<const MeasurePath*, const GridMeasure*>;

/// Backward Semi-Lagrangian recursion for
///   -d_t v - sigma^2/2 Lap v + |grad v|^2 / 2 = F,  v(T) = G,
/// from v_N = G down to v_{first_step}:
///   v_{i,k} = min_a { h|a|^2/2 + 1/(2d) sum_l [I v_{k+1}(x_i + h a + sigma sqrt(hd) e_l)
///                                            + I v_{k+1}(x_i + h a - sigma sqrt(hd) e_l)] }
///             + h F(x_i, mu(t_k)).
/// Queries outside the box are clamped. Ties in the min go to the smallest
/// |a|, then to the lexicographically smallest a.
ValueGrid solve_hjb(const CostPair& costs, MeasureSource source, double sigma, LatticePtr lattice, double h,
                    int steps, int first_step = 0, const ControlGrid& control = {});

/// Per-slice discrete convolution with the renormalized kernel.
ValueGrid mollify_value(const ValueGrid& v, const MollifierSpec& spec);

/// Centered differences of nodal values, one-sided on box faces; indexed
/// [k - first_step][node].
using GradientField = std::vector<std::vector<Point>>;
GradientField gradient_field(const ValueGrid& v);
std::vector<Point> gradient_slice(const Lattice& lattice, std::span<const double> values);

}  // namespace fpksl
