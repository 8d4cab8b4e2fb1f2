#include "fpksl/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fpksl {

void OscillatorParams::validate() const {
  if (!(gamma > 2.0)) throw InvalidArgument("oscillator: gamma must exceed 2 (real characteristic roots)");
  if (!(sigma > 0.0)) throw InvalidArgument("oscillator: sigma must be positive");
  if (!std::isfinite(x0[0]) || !std::isfinite(x0[1])) throw InvalidArgument("oscillator: x0 must be finite");
}

CoefficientField oscillator_coefficients(const OscillatorParams& p) {
  p.validate();
  const double g = p.gamma;
  const double col = std::sqrt(2.0 * p.sigma);
  const double bound = std::sqrt(2.0 + g * g) + col;
  return make_linear_field(
      2, 1, [g](const Point& x, double) { return Point{x[1], -x[0] - g * x[1], 0.0}; },
      [col](const Point&, double) {
        DiffusionColumns c{};
        c[0][1] = col;
        return c;
      },
      bound);
}

std::pair<double, double> oscillator_roots(double gamma) {
  if (!(gamma > 2.0)) throw InvalidArgument("oscillator: gamma must exceed 2 (real characteristic roots)");
  const double r = std::sqrt(gamma * gamma / 4.0 - 1.0);
  return {-gamma / 2.0 + r, -gamma / 2.0 - r};
}

double oscillator_nu(const OscillatorParams& p, const Point& x, double t) {
  if (!(t > 0.0)) throw InvalidArgument("oscillator density: t must be positive");
  const auto [m1, m2] = oscillator_roots(p.gamma);
  const double s = p.sigma;
  auto psi = [&](const Point& y, double tt) { return (y[0] * m1 - y[1]) * std::exp(-m2 * tt); };
  auto eta = [&](const Point& y, double tt) { return (y[0] * m2 - y[1]) * std::exp(-m1 * tt); };
  const double H = -2.0 * s / (m1 + m2) * (1.0 - std::exp(-(m1 + m2) * t));
  const double a = s / m1 * (1.0 - std::exp(-2.0 * m1 * t));
  const double b = s / m2 * (1.0 - std::exp(-2.0 * m2 * t));
  const double delta = a * b - H * H;
  if (!(delta > 0.0)) {
    std::ostringstream msg;
    msg << "oscillator density: Delta(t) = " << delta << " is not positive at t = " << t;
    throw SolverError(msg.str());
  }
  const double dp = psi(x, t) - psi(p.x0, 0.0);
  const double de = eta(x, t) - eta(p.x0, 0.0);
  const double sx = a * dp * dp + 2.0 * H * dp * de + b * de * de;
  return std::exp(p.gamma * t - sx / (2.0 * delta)) / (2.0 * M_PI * std::sqrt(delta));
}

double oscillator_normalizer(const OscillatorParams& p, double t, const Lattice& box, int refine) {
  if (box.dim() != 2) throw InvalidArgument("oscillator density: lattice must be 2-dimensional");
  if (refine < 1) throw InvalidArgument("oscillator density: refine must be >= 1");
  const double q = box.rho() / refine;
  const int n0 = (box.nodes_per_axis(0) - 1) * refine;
  const int n1 = (box.nodes_per_axis(1) - 1) * refine;
  double sum = 0.0;
  for (int i = 0; i < n0; ++i) {
    const double x1 = box.lo()[0] + (i + 0.5) * q;
    for (int j = 0; j < n1; ++j) sum += oscillator_nu(p, Point{x1, box.lo()[1] + (j + 0.5) * q, 0.0}, t);
  }
  return sum * q * q;
}

double oscillator_exact_density(const OscillatorParams& p, const Point& x, double t, const Lattice& box,
                                int refine) {
  return oscillator_nu(p, x, t) / oscillator_normalizer(p, t, box, refine);
}

std::vector<double> oscillator_exact_grid(const OscillatorParams& p, double t, const Lattice& box, int refine) {
  const double z = oscillator_normalizer(p, t, box, refine);
  std::vector<double> out(box.node_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = oscillator_nu(p, box.node(i), t) / z;
  return out;
}

void LotkaVolterraParams::validate() const {
  if (!(lambda >= 0.0)) throw InvalidArgument("lotka_volterra: lambda must be >= 0");
  if (!(gamma > 0.0)) throw InvalidArgument("lotka_volterra: gamma must be positive");
  if (substeps < 1) throw InvalidArgument("lotka_volterra: substeps must be >= 1");
  if (delta < 0.0 || !std::isfinite(delta)) throw InvalidArgument("lotka_volterra: delta must be >= 0");
}

Point lotka_volterra_drift(const LotkaVolterraParams& p, const Point& x, double t) {
  const double e1 = std::exp(x[0]);
  const double e2 = std::exp(x[1]);
  return Point{-1.0 + e2, 1.0 + p.lambda * std::sin(t) - e1 - p.gamma * e2, 0.0};
}

CoefficientField lotka_volterra_coefficients(const LotkaVolterraParams& p) {
  p.validate();
  CoefficientField f = make_linear_field(
      2, 0, [p](const Point& x, double t) { return lotka_volterra_drift(p, x, t); }, {});
  f.flow = [p](const MeasurePath&, const Point& x, double t, double h) {
    double d = h / p.substeps;
    if (p.delta > 0.0) {
      if (std::abs(p.delta * p.substeps - h) > 1e-12 * h) {
        throw InvalidArgument("lotka_volterra: h must equal substeps * delta");
      }
      d = p.delta;
    }
    Point z = x;
    for (int s = 0; s < p.substeps; ++s) {
      const Point b = lotka_volterra_drift(p, z, t + s * d);
      z[0] += d * b[0];
      z[1] += d * b[1];
    }
    return z;
  };
  return f;
}

bool region_contains(const Region& r, const Point& x, int dim) {
  for (const auto& b : r) {
    bool in = true;
    for (int a = 0; a < dim && in; ++a) in = x[a] >= b.lo[a] && x[a] <= b.hi[a];
    if (in) return true;
  }
  return false;
}

double region_distance(const Region& r, const Point& x, int dim) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : r) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double g = std::max({b.lo[a] - x[a], 0.0, x[a] - b.hi[a]});
      s += g * g;
    }
    best = std::min(best, s);
  }
  return std::sqrt(best);
}

Region dilate(const Region& r, double pad, int dim) {
  Region out = r;
  for (auto& b : out) {
    for (int a = 0; a < dim; ++a) {
      b.lo[a] -= pad;
      b.hi[a] += pad;
    }
  }
  return out;
}

void MeetingCostParams::validate(const Lattice& domain) const {
  if (meeting_set.empty()) throw InvalidArgument("meeting costs: meeting set is empty");
  if (!(delta > 0.0)) throw InvalidArgument("meeting costs: delta must be positive");
  for (const auto& b : meeting_set) {
    for (int a = 0; a < domain.dim(); ++a) {
      if (!(b.lo[a] <= b.hi[a])) throw InvalidArgument("meeting costs: box with lo > hi");
      if (b.lo[a] < domain.lo()[a] || b.hi[a] > domain.hi()[a]) {
        throw InvalidArgument("meeting costs: meeting set leaves the domain");
      }
    }
  }
}

std::vector<double> meeting_potential(const GridMeasure& m, double delta) {
  const Lattice& lat = m.lattice();
  const DiscreteKernel kernel(MollifierSpec{delta, KernelShape::TruncatedGaussian, 4.0}, lat.dim(), lat.rho());
  const auto once = convolve_nodal(m.density(), lat, kernel);
  return convolve_nodal(once, lat, kernel);
}

CostPair meeting_costs(const MeetingCostParams& p) {
  if (p.meeting_set.empty()) throw InvalidArgument("meeting costs: meeting set is empty");
  if (!(p.delta > 0.0)) throw InvalidArgument("meeting costs: delta must be positive");
  CostPair c;
  c.running = [p](const GridMeasure& m) -> CostPair::Pointwise {
    p.validate(m.lattice());
    auto v = std::make_shared<const std::vector<double>>(meeting_potential(m, p.delta));
    LatticePtr lat = m.lattice_ptr();
    return [p, v, lat](const Point& x) {
      const double d = region_distance(p.meeting_set, x, lat->dim());
      if (d == 0.0) return 0.0;
      return d * d * lat->interpolate(*v, x).value;
    };
  };
  c.terminal = c.running;
  return c;
}

std::vector<double> time_averaged_density(const MeasurePath& path, double ta, double tb) {
  if (!(tb > ta)) throw InvalidArgument("time average: window must have tb > ta");
  if (ta < -1e-12 || tb > path.horizon() + path.h() * (1.0 + 1e-9)) {
    throw InvalidArgument("time average: window outside [0, T + h]");
  }
  const double h = path.h();
  const double eps = 1e-9 * h;
  std::vector<double> out(path.lattice().node_count(), 0.0);
  for (int k = 0; k < static_cast<int>(path.size()); ++k) {
    const double t = path.time(k);
    if (t < ta - eps || t >= tb - eps) continue;
    const auto dens = path.slice(k).density();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += h * dens[i];
  }
  for (double& v : out) v /= (tb - ta);
  return out;
}

}  // namespace fpksl
