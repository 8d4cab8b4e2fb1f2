#pragma once

#include <utility>
#include <vector>

#include "fpksl/fpk.hpp"
#include "fpksl/hjb.hpp"

namespace fpksl {

// ---- damped oscillator -----------------------------------------------------

struct OscillatorParams {
  double gamma = 2.1;  // damping, must exceed 2
  double sigma = 0.8;  // noise column is sqrt(2 sigma)
  Point x0{1.0, 1.0, 0.0};

  void validate() const;
};

/// b(x) = (x2, -x1 - gamma x2), single column (0, sqrt(2 sigma)).
CoefficientField oscillator_coefficients(const OscillatorParams& p);

/// (mu1, mu2) = -gamma/2 +- sqrt(gamma^2/4 - 1).
std::pair<double, double> oscillator_roots(double gamma);

/// Unnormalized closed-form density nu(x, t) for a Dirac start at x0.
double oscillator_nu(const OscillatorParams& p, const Point& x, double t);

/// Integral of nu(., t) over the lattice box, by tensor midpoint quadrature on
/// the lattice spacing divided by `refine`.
double oscillator_normalizer(const OscillatorParams& p, double t, const Lattice& box, int refine = 4);

/// nu(x, t) / normalizer.
double oscillator_exact_density(const OscillatorParams& p, const Point& x, double t, const Lattice& box,
                                int refine = 4);

/// Exact density at every lattice node (one normalizer shared by all nodes).
std::vector<double> oscillator_exact_grid(const OscillatorParams& p, double t, const Lattice& box, int refine = 4);

// ---- Lotka-Volterra (log variables) ----------------------------------------

struct LotkaVolterraParams {
  double lambda = 0.05;  // seasonality
  double gamma = 0.05;   // self-limitation
  int substeps = 16;     // P
  /// Substep delta; 0 means h / P. When set, h must equal P * delta.
  double delta = 0.0;

  void validate() const;
};

/// b(x, t) = (-1 + e^{x2}, 1 + lambda sin t - e^{x1} - gamma e^{x2}).
Point lotka_volterra_drift(const LotkaVolterraParams& p, const Point& x, double t);

/// First-order field whose characteristic endpoint is the P-fold Euler
/// substep z^P with step delta = h / P.
CoefficientField lotka_volterra_coefficients(const LotkaVolterraParams& p);

// ---- meeting-area costs ----------------------------------------------------

struct Box {
  Point lo{0.0, 0.0, 0.0};
  Point hi{0.0, 0.0, 0.0};
};

/// Union of axis-aligned boxes (intervals in 1D).
using Region = std::vector<Box>;

bool region_contains(const Region& r, const Point& x, int dim);
/// Euclidean distance to the union; 0 inside.
double region_distance(const Region& r, const Point& x, int dim);
/// Every box grown by `pad` on each side.
Region dilate(const Region& r, double pad, int dim);

struct MeetingCostParams {
  Region meeting_set;
  double delta = 0.05;  // Gaussian width of V_delta

  void validate(const Lattice& domain) const;
};

/// V_delta = phi_delta * (phi_delta * density) at the nodes, with the Gaussian
/// kernel sampled on the lattice and renormalized.
std::vector<double> meeting_potential(const GridMeasure& m, double delta);

/// F(x, m) = dist(x, P)^2 V_delta(x, m), G = F. V_delta is built once per bound
/// measure and Q1-interpolated off the nodes.
CostPair meeting_costs(const MeetingCostParams& p);

// ---- path utilities --------------------------------------------------------

/// (1/(tb - ta)) sum over t_k in [ta, tb) of h * density(m_k).
std::vector<double> time_averaged_density(const MeasurePath& path, double ta, double tb);

}  // namespace fpksl
