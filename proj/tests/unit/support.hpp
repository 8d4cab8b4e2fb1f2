#pragma once

#include <memory>
#include <random>

#include "fpksl/fpk.hpp"

namespace fpksl::test {

inline LatticePtr line(double rho, double lo, double hi, Boundary b = Boundary::Truncate) {
  return std::make_shared<const Lattice>(1, rho, Point{lo, 0, 0}, Point{hi, 0, 0}, b);
}

inline LatticePtr square(double rho, double lo, double hi, Boundary b = Boundary::Truncate) {
  return std::make_shared<const Lattice>(2, rho, Point{lo, lo, 0}, Point{hi, hi, 0}, b);
}

/// Path holding a single slice; enough context for measure-independent fields.
inline MeasurePath context(const GridMeasure& m, double h, int steps = 1) {
  MeasurePath p(m.lattice_ptr(), h, steps);
  p.append(m);
  return p;
}

inline CoefficientField constant_field(int dim, Point b, std::vector<Point> cols) {
  DiffusionColumns c{};
  for (std::size_t l = 0; l < cols.size(); ++l) c[l] = cols[l];
  return make_linear_field(
      dim, static_cast<int>(cols.size()), [b](const Point&, double) { return b; },
      [c](const Point&, double) { return c; });
}

inline Point random_point(std::mt19937_64& rng, const Lattice& lat) {
  Point x{0, 0, 0};
  for (int a = 0; a < lat.dim(); ++a) {
    std::uniform_real_distribution<double> u(lat.lo()[a], lat.hi()[a]);
    x[a] = u(rng);
  }
  return x;
}

inline GridMeasure random_measure(std::mt19937_64& rng, LatticePtr lat, double active_fraction = 1.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(lat->node_count(), 0.0);
  double s = 0.0;
  for (auto& x : w) {
    if (u(rng) < active_fraction) x = u(rng);
    s += x;
  }
  if (s == 0.0) w[0] = s = 1.0;
  for (auto& x : w) x /= s;
  return GridMeasure(lat, std::move(w));
}

}  // namespace fpksl::test
