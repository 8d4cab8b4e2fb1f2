#pragma once

#include <functional>
#include <vector>

#include "fpksl/fpk.hpp"
#include "fpksl/hjb.hpp"

namespace fpksl {

/// Drift -grad v taken from a precomputed gradient table (Q1-interpolated in
/// space, slice k = t / h in time) with diffusion columns sigma e_l, l = 1..d.
CoefficientField gradient_drift_field(LatticePtr lattice, GradientField gradients, double h, double sigma,
                                      int first_step = 0);

/// Pure diffusion sigma e_l with zero drift.
CoefficientField diffusion_only_field(int dim, double sigma);

/// Hughes-type causal field: before step k the HJB is solved on [t_k, T] with
/// both costs frozen at the current slice m_k; the drift at t_k is minus the
/// gradient of the mollified value at t_k.
CoefficientField hughes_field(CostPair costs, double sigma, LatticePtr lattice, double h, int steps,
                              MollifierSpec mollifier, ControlGrid control);

/// Single forward sweep for causal coefficients. Identical to propagate()
/// with no frozen path.
MeasurePath solve_explicit(const GridMeasure& m0, const CoefficientField& coeffs, double h, int steps);

struct FictitiousPlayConfig {
  double tol = 0.01;
  int max_iters = 200;
  MollifierSpec mollifier{};
  ControlGrid control{};

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double gap = 0.0;
  double seconds = 0.0;  // wall time since the solve started
};

struct CouplingReport {
  int iterations = 0;
  double final_gap = 0.0;
  bool converged = false;
  std::vector<double> gap_history;
  std::vector<IterationRecord> records;
  double wall_seconds = 0.0;
  /// max over iterates and slices of |mass(slice) - mass(m0)|
  double max_mass_defect = 0.0;
};

struct FictitiousPlayResult {
  MeasurePath path;
  ValueGrid value;
  CouplingReport report;
};

using ProgressCallback = std::function<void(const IterationRecord&)>;

/// Fictitious play for the MFG fixed point. m^0 is the zero-drift diffusion
/// of m0; v^p solves the HJB against the running average of m^0..m^p, and
/// m^{p+1} is propagated with drift -grad (v^p)^eps. Stops once
/// sup |m^{p+1} - m^p| < tol. Running out of iterations is reported through
/// converged = false; the iterate with the smallest gap is returned.
FictitiousPlayResult solve_fictitious_play(const GridMeasure& m0, const CostPair& costs, double sigma, double h,
                                           int steps, const FictitiousPlayConfig& config,
                                           const ProgressCallback& progress = {});

/// sup-norm distance between `path` and the path obtained by solving the HJB
/// against it and propagating its initial slice with the resulting drift.
double equilibrium_residual(const MeasurePath& path, const CostPair& costs, double sigma,
                            const MollifierSpec& mollifier, const ControlGrid& control);

}  // namespace fpksl
