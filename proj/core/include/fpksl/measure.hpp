#pragma once

#include <functional>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "fpksl/lattice.hpp"

namespace fpksl {

using LatticePtr = std::shared_ptr<const Lattice>;

/// Non-negative weights on the nodes of a lattice: one time slice of the
/// discrete solution, sum_i m_i delta_{x_i}.
class GridMeasure {
 public:
  /// Validates weights (finite, non-negative, total mass <= 1 + 1e-12).
  GridMeasure(LatticePtr lattice, std::vector<double> weights);

  static GridMeasure zero(LatticePtr lattice);
  static GridMeasure dirac(LatticePtr lattice, std::size_t node);

  const Lattice& lattice() const { return *lattice_; }
  const LatticePtr& lattice_ptr() const { return lattice_; }
  std::span<const double> weights() const { return weights_; }
  double weight(std::size_t node) const { return weights_[node]; }
  double mass() const { return mass_; }
  std::size_t size() const { return weights_.size(); }

  /// weight / rho^d per node.
  std::vector<double> density() const;

 private:
  LatticePtr lattice_;
  std::vector<double> weights_;
  double mass_ = 0.0;
};

/// Slices m_0..m_N at t_k = k h, extended to [0, T] by linear interpolation in
/// time. A path may be shorter than N+1 slices while it is being built.
class MeasurePath {
 public:
  MeasurePath(LatticePtr lattice, double h, int steps);
  MeasurePath(LatticePtr lattice, double h, std::vector<GridMeasure> slices);

  const Lattice& lattice() const { return *lattice_; }
  const LatticePtr& lattice_ptr() const { return lattice_; }
  double h() const { return h_; }
  int steps() const { return steps_; }
  double horizon() const { return h_ * steps_; }
  double time(int k) const { return h_ * k; }

  std::size_t size() const { return slices_.size(); }
  bool complete() const { return static_cast<int>(slices_.size()) == steps_ + 1; }
  const GridMeasure& slice(int k) const;
  const std::vector<GridMeasure>& slices() const { return slices_; }
  void append(GridMeasure m);

  /// ((t - t_k)/h) m_{k+1} + ((t_{k+1} - t)/h) m_k for t in [t_k, t_{k+1});
  /// m_N at t = T.
  GridMeasure eval_at_time(double t) const;

 private:
  LatticePtr lattice_;
  double h_;
  int steps_;
  std::vector<GridMeasure> slices_;
};

struct DiracDatum {
  Point location{};
};

struct DensityDatum {
  std::function<double(const Point&)> density;
  int subsamples = 4;  // midpoint samples per axis per cell
};

struct WeightTable {
  std::vector<double> weights;
};

using InitialDatum = std::variant<DiracDatum, DensityDatum, WeightTable>;

/// m_{i,0} = m0(E_i). Densities are integrated over each cell (clipped to the
/// box) by midpoint quadrature and renormalized to unit mass.
GridMeasure project_initial(const InitialDatum& init, LatticePtr lattice);

/// sum_i |x_i|^2 m_i
double moment2(const GridMeasure& m);

/// Expected value of f under m: sum_i f(x_i) m_i.
double integrate(const GridMeasure& m, const std::function<double(const Point&)>& f);

double sup_norm_diff(const GridMeasure& a, const GridMeasure& b);
/// Max over slices and nodes. Paths must have the same slice count.
double sup_norm_diff(const MeasurePath& a, const MeasurePath& b);

/// Exact optimal transport distances between measures on the same lattice.
/// d = 1 uses the quantile coupling; d >= 2 solves the transport linear program
/// over active nodes and refuses instances with more than kTransportNodeCap
/// active nodes on either side.
inline constexpr std::size_t kTransportNodeCap = 2000;
double wasserstein1(const GridMeasure& a, const GridMeasure& b);
double wasserstein2(const GridMeasure& a, const GridMeasure& b);

/// Minimum-cost transport between supplies and demands of equal total. cost is
/// row-major supply x demand. Exposed for testing the solver directly.
double transport_cost(std::span<const double> supply, std::span<const double> demand,
                      std::span<const double> cost);

}  // namespace fpksl
