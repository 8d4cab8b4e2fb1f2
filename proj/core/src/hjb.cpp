#include "fpksl/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fpksl {

void ControlGrid::validate() const {
  if (!(a_max > 0.0) || !std::isfinite(a_max)) throw InvalidArgument("control grid: a_max must be positive");
  if (points_per_axis < 3 || points_per_axis % 2 == 0) {
    throw InvalidArgument("control grid: points_per_axis must be odd and >= 3");
  }
  if (refine_passes < 0) throw InvalidArgument("control grid: refine_passes must be >= 0");
}

ValueGrid::ValueGrid(LatticePtr lattice, double h, double sigma, int steps, int first_step)
    : lattice_(std::move(lattice)), h_(h), sigma_(sigma), steps_(steps), first_(first_step) {
  if (first_step < 0 || first_step > steps) throw InvalidArgument("ValueGrid: first step outside [0, N]");
  slices_.assign(static_cast<std::size_t>(steps - first_step + 1), std::vector<double>(lattice_->node_count(), 0.0));
}

std::span<const double> ValueGrid::slice(int k) const {
  if (k < first_ || k > steps_) throw InvalidArgument("ValueGrid: slice " + std::to_string(k) + " not computed");
  return slices_[static_cast<std::size_t>(k - first_)];
}

std::span<double> ValueGrid::slice(int k) {
  if (k < first_ || k > steps_) throw InvalidArgument("ValueGrid: slice " + std::to_string(k) + " not computed");
  return slices_[static_cast<std::size_t>(k - first_)];
}

double ValueGrid::max_abs() const {
  double m = 0.0;
  for (const auto& s : slices_) {
    for (double v : s) m = std::max(m, std::abs(v));
  }
  return m;
}

namespace {

struct Candidate {
  Point alpha{0.0, 0.0, 0.0};
  double value = std::numeric_limits<double>::infinity();
};

bool better(const Candidate& a, const Candidate& b, int d) {
  if (a.value != b.value) return a.value < b.value;
  const double na = norm2(a.alpha), nb = norm2(b.alpha);
  if (na != nb) return na < nb;
  for (int k = 0; k < d; ++k) {
    if (a.alpha[k] != b.alpha[k]) return a.alpha[k] < b.alpha[k];
  }
  return false;
}

std::vector<double> nodal_cost(const CostPair::Pointwise& f, const Lattice& lat, double bound, int k,
                               const char* which) {
  std::vector<double> out(lat.node_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = f(lat.node(i));
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "non-finite " << which << " cost at node " << i << ", step " << k;
      throw SolverError(msg.str());
    }
    if (std::abs(v) > bound) {
      std::ostringstream msg;
      msg << which << " cost " << v << " at node " << i << ", step " << k << " exceeds the declared bound " << bound;
      throw InvalidArgument(msg.str());
    }
    out[i] = v;
  }
  return out;
}

}  // namespace

ValueGrid solve_hjb(const CostPair& costs, MeasureSource source, double sigma, LatticePtr lattice, double h,
                    int steps, int first_step, const ControlGrid& control) {
  if (!(sigma >= 0.0)) throw InvalidArgument("solve_hjb: sigma must be non-negative");
  if (!(h > 0.0)) throw InvalidArgument("solve_hjb: h must be positive");
  if (!costs.running || !costs.terminal) throw InvalidArgument("solve_hjb: missing cost evaluator");
  control.validate();
  const Lattice& lat = *lattice;
  const int d = lat.dim();

  const MeasurePath* path = nullptr;
  const GridMeasure* frozen = nullptr;
  if (std::holds_alternative<const MeasurePath*>(source)) {
    path = std::get<const MeasurePath*>(source);
    if (path == nullptr || static_cast<int>(path->size()) < steps + 1) {
      throw InvalidArgument("solve_hjb: measure path must provide slices 0..N");
    }
    if (!(path->lattice() == lat)) throw InvalidArgument("solve_hjb: measure path on another lattice");
  } else {
    frozen = std::get<const GridMeasure*>(source);
    if (frozen == nullptr) throw InvalidArgument("solve_hjb: null measure");
    if (!(frozen->lattice() == lat)) throw InvalidArgument("solve_hjb: measure on another lattice");
  }
  auto measure_at = [&](int k) -> const GridMeasure& { return path != nullptr ? path->slice(k) : *frozen; };

  ValueGrid v(lattice, h, sigma, steps, first_step);
  {
    const auto g = nodal_cost(costs.terminal(measure_at(steps)), lat, costs.bound, steps, "terminal");
    std::copy(g.begin(), g.end(), v.slice(steps).begin());
  }

  // Control grid enumerated once; refinement happens per node.
  std::vector<Point> grid;
  {
    const int m = control.points_per_axis;
    const double da = control.spacing();
    int total = 1;
    for (int a = 0; a < d; ++a) total *= m;
    grid.reserve(static_cast<std::size_t>(total));
    for (int c = 0; c < total; ++c) {
      Point alpha{0.0, 0.0, 0.0};
      int rem = c;
      for (int a = 0; a < d; ++a) {
        alpha[a] = (rem % m - (m - 1) / 2) * da;
        rem /= m;
      }
      grid.push_back(alpha);
    }
  }
  int refine_total = 1;
  for (int a = 0; a < d; ++a) refine_total *= 3;

  const double spread = sigma * std::sqrt(h * d);
  const double inv2d = 1.0 / (2.0 * d);

  for (int k = steps - 1; k >= first_step; --k) {
    const auto next = v.slice(k + 1);
    const auto running = nodal_cost(costs.running(measure_at(k)), lat, costs.bound, k, "running");
    auto cur = v.slice(k);

    auto interp = [&](const Point& q) {
      double s = 0.0;
      for (const auto& e : lat.stencil(lat.clamp(q)).view()) s += e.weight * next[e.node];
      return s;
    };

    for (std::size_t i = 0; i < lat.node_count(); ++i) {
      const Point x = lat.node(i);
      auto evaluate = [&](const Point& alpha) {
        Point base = x;
        for (int a = 0; a < d; ++a) base[a] += h * alpha[a];
        double acc = 0.0;
        for (int l = 0; l < d; ++l) {
          Point up = base, down = base;
          up[l] += spread;
          down[l] -= spread;
          acc += interp(up) + interp(down);
        }
        return 0.5 * h * norm2(alpha) + inv2d * acc;
      };
      Candidate best;
      for (const auto& alpha : grid) {
        Candidate c{alpha, evaluate(alpha)};
        if (better(c, best, d)) best = c;
      }
      double da = control.spacing();
      for (int pass = 0; pass < control.refine_passes; ++pass) {
        da *= 0.5;
        const Point centre = best.alpha;
        for (int c = 0; c < refine_total; ++c) {
          Point alpha = centre;
          int rem = c;
          bool is_centre = true;
          for (int a = 0; a < d; ++a) {
            const int off = rem % 3 - 1;
            rem /= 3;
            alpha[a] += off * da;
            is_centre = is_centre && off == 0;
          }
          if (is_centre) continue;
          Candidate cand{alpha, evaluate(alpha)};
          if (better(cand, best, d)) best = cand;
        }
      }
      cur[i] = best.value + h * running[i];
    }
  }
  return v;
}

ValueGrid mollify_value(const ValueGrid& v, const MollifierSpec& spec) {
  const Lattice& lat = v.lattice();
  const DiscreteKernel kernel(spec, lat.dim(), lat.rho());
  ValueGrid out(v.lattice_ptr(), v.h(), v.sigma(), v.steps(), v.first_step());
  for (int k = v.first_step(); k <= v.steps(); ++k) {
    const auto smooth = convolve_nodal(v.slice(k), lat, kernel);
    std::copy(smooth.begin(), smooth.end(), out.slice(k).begin());
  }
  return out;
}

std::vector<Point> gradient_slice(const Lattice& lat, std::span<const double> values) {
  if (values.size() != lat.node_count()) throw InvalidArgument("gradient: value array does not match lattice");
  const int d = lat.dim();
  const double rho = lat.rho();
  std::vector<Point> grad(values.size(), Point{0.0, 0.0, 0.0});
  for (std::size_t n = 0; n < values.size(); ++n) {
    const MultiIndex i = lat.multi_index(n);
    for (int a = 0; a < d; ++a) {
      MultiIndex lo = i, hi = i;
      lo[a] = std::max(i[a] - 1, 0);
      hi[a] = std::min(i[a] + 1, lat.nodes_per_axis(a) - 1);
      grad[n][a] = (values[lat.flat_index(hi)] - values[lat.flat_index(lo)]) / ((hi[a] - lo[a]) * rho);
    }
  }
  return grad;
}

GradientField gradient_field(const ValueGrid& v) {
  GradientField out;
  out.reserve(static_cast<std::size_t>(v.steps() - v.first_step() + 1));
  for (int k = v.first_step(); k <= v.steps(); ++k) out.push_back(gradient_slice(v.lattice(), v.slice(k)));
  return out;
}

}  // namespace fpksl
