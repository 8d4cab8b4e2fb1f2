#include "fpksl/fpk.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace fpksl {

namespace {

bool finite_point(const Point& p, int d) {
  for (int k = 0; k < d; ++k) {
    if (!std::isfinite(p[k])) return false;
  }
  return true;
}

[[noreturn]] void non_finite(const char* what, std::size_t node, int k) {
  std::ostringstream msg;
  msg << "non-finite " << what << " at node " << node << ", step " << k;
  throw SolverError(msg.str());
}

double frobenius(const DiffusionColumns& cols, int rank, int d) {
  double s = 0.0;
  for (int l = 0; l < rank; ++l) {
    for (int k = 0; k < d; ++k) s += cols[l][k] * cols[l][k];
  }
  return std::sqrt(s);
}

}  // namespace

double TransitionRow::total() const {
  double s = 0.0;
  for (const auto& t : targets) s += t.weight;
  return s;
}

CoefficientField make_linear_field(int dim, int rank, std::function<Point(const Point&, double)> drift,
                                   std::function<DiffusionColumns(const Point&, double)> diffusion,
                                   double growth_bound) {
  if (dim < 1 || dim > kMaxDim) throw InvalidArgument("coefficient field: bad dimension");
  if (rank < 0 || rank > kMaxRank) throw InvalidArgument("coefficient field: bad rank");
  if (rank > 0 && !diffusion) throw InvalidArgument("coefficient field: rank > 0 needs diffusion columns");
  CoefficientField f;
  f.dim = dim;
  f.rank = rank;
  f.causal = true;
  f.growth_bound = growth_bound;
  f.drift = [drift = std::move(drift)](const MeasurePath&, const Point& x, double t) { return drift(x, t); };
  if (diffusion) {
    f.diffusion = [diffusion = std::move(diffusion)](const MeasurePath&, const Point& x, double t) {
      return diffusion(x, t);
    };
  }
  return f;
}

void verify_linear_growth(const CoefficientField& field, const MeasurePath& path, int samples, unsigned seed) {
  if (!std::isfinite(field.growth_bound)) return;
  const Lattice& lat = path.lattice();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int s = 0; s < samples; ++s) {
    Point x{0.0, 0.0, 0.0};
    for (int k = 0; k < lat.dim(); ++k) x[k] = lat.lo()[k] + u(rng) * (lat.hi()[k] - lat.lo()[k]);
    const double t = u(rng) * path.horizon();
    const Point b = field.drift(path, x, t);
    double size = std::sqrt(norm2(b));
    if (field.rank > 0) size += frobenius(field.diffusion(path, x, t), field.rank, lat.dim());
    const double allowed = field.growth_bound * (1.0 + std::sqrt(norm2(x)));
    if (!(size <= allowed * (1.0 + 1e-12))) {
      std::ostringstream msg;
      msg << "coefficient field violates the declared growth bound C = " << field.growth_bound << " at x = ("
          << x[0] << ", " << x[1] << ", " << x[2] << "), t = " << t << ": |b| + |sigma| = " << size;
      throw InvalidArgument(msg.str());
    }
  }
}

std::vector<Point> characteristics(const CoefficientField& coeffs, const MeasurePath& path, const Point& x, int k,
                                   double h, std::size_t node) {
  if (!(h > 0.0)) throw InvalidArgument("characteristics: h must be positive");
  const Lattice& lat = path.lattice();
  const int d = lat.dim();
  const double t = k * h;
  std::vector<Point> out;
  if (coeffs.rank == 0) {
    Point end{0.0, 0.0, 0.0};
    if (coeffs.flow) {
      end = coeffs.flow(path, x, t, h);
      if (!finite_point(end, d)) non_finite("characteristic endpoint", node, k);
    } else {
      const Point b = coeffs.drift(path, x, t);
      if (!finite_point(b, d)) non_finite("drift", node, k);
      for (int a = 0; a < d; ++a) end[a] = x[a] + h * b[a];
    }
    out.push_back(end);
  } else {
    const Point b = coeffs.drift(path, x, t);
    if (!finite_point(b, d)) non_finite("drift", node, k);
    const DiffusionColumns cols = coeffs.diffusion(path, x, t);
    const double scale = std::sqrt(coeffs.rank * h);
    out.reserve(2 * static_cast<std::size_t>(coeffs.rank));
    for (int l = 0; l < coeffs.rank; ++l) {
      if (!finite_point(cols[l], d)) non_finite("diffusion column", node, k);
      Point plus{0.0, 0.0, 0.0}, minus{0.0, 0.0, 0.0};
      for (int a = 0; a < d; ++a) {
        const double base = x[a] + h * b[a];
        plus[a] = base + scale * cols[l][a];
        minus[a] = base - scale * cols[l][a];
      }
      out.push_back(plus);
      out.push_back(minus);
    }
  }
  if (lat.boundary() == Boundary::Reflect) {
    for (auto& p : out) p = lat.reflect(p);
  }
  return out;
}

TransitionRow transition_row(const CoefficientField& coeffs, const MeasurePath& path, std::size_t j, int k) {
  const Lattice& lat = path.lattice();
  if (j >= lat.node_count()) throw InvalidArgument("transition_row: source node out of range");
  const auto ends = characteristics(coeffs, path, lat.node(j), k, path.h(), j);
  const double share = 1.0 / static_cast<double>(ends.size());
  TransitionRow row;
  row.source = j;
  for (const auto& p : ends) {
    for (const auto& e : lat.stencil(p).view()) row.targets.push_back({e.node, share * e.weight});
  }
  std::sort(row.targets.begin(), row.targets.end(),
            [](const NodeWeight& a, const NodeWeight& b) { return a.node < b.node; });
  std::vector<NodeWeight> merged;
  for (const auto& t : row.targets) {
    if (!merged.empty() && merged.back().node == t.node) {
      merged.back().weight += t.weight;
    } else {
      merged.push_back(t);
    }
  }
  row.targets = std::move(merged);
  return row;
}

GridMeasure step(const GridMeasure& current, const CoefficientField& coeffs, const MeasurePath& path, int k) {
  const Lattice& lat = current.lattice();
  if (!(lat == path.lattice())) throw InvalidArgument("step: measure and path lattices differ");
  if (coeffs.dim != lat.dim()) throw InvalidArgument("step: coefficient dimension does not match the lattice");
  if (coeffs.prepare) coeffs.prepare(path, k);
  const double h = path.h();
  std::vector<double> next(lat.node_count(), 0.0);
  for (std::size_t j = 0; j < lat.node_count(); ++j) {
    const double w = current.weight(j);
    if (w == 0.0) continue;
    const auto ends = characteristics(coeffs, path, lat.node(j), k, h, j);
    const double share = w / static_cast<double>(ends.size());
    for (const auto& p : ends) {
      for (const auto& e : lat.stencil(p).view()) next[e.node] += share * e.weight;
    }
  }
  return GridMeasure(current.lattice_ptr(), std::move(next));
}

MeasurePath propagate(const GridMeasure& m0, const CoefficientField& coeffs, double h, int steps,
                      const MeasurePath* frozen_path) {
  if (steps < 0) throw InvalidArgument("propagate: negative step count");
  if (!coeffs.causal && frozen_path == nullptr) {
    throw InvalidArgument("propagate: a non-causal coefficient field needs a frozen measure path");
  }
  if (frozen_path != nullptr) {
    if (!(frozen_path->lattice() == m0.lattice())) throw InvalidArgument("propagate: frozen path on another lattice");
    if (std::abs(frozen_path->h() - h) > 1e-12 * h) throw InvalidArgument("propagate: frozen path has another step");
    if (frozen_path->steps() < steps) throw InvalidArgument("propagate: frozen path is too short");
  }
  MeasurePath result(m0.lattice_ptr(), h, steps);
  result.append(m0);
  for (int k = 0; k < steps; ++k) {
    const MeasurePath& context = frozen_path != nullptr ? *frozen_path : result;
    GridMeasure next = step(result.slice(k), coeffs, context, k);
    result.append(std::move(next));
  }
  return result;
}

CoefficientField mollify_coefficients(const CoefficientField& coeffs, const MollifierSpec& spec,
                                      const Lattice& lattice) {
  spec.validate(lattice.rho());
  if (coeffs.flow) throw InvalidArgument("mollify_coefficients: fields with a flow override cannot be mollified");
  const double rho = lattice.rho();
  const int d = lattice.dim();
  const double support = kernel_support(spec);
  const int reach = static_cast<int>(std::floor(support / rho + 1e-9)) + 1;
  const Point lo = lattice.lo();

  // Nodes lo + j rho (j unbounded) within the kernel support around x, with
  // renormalized weights.
  auto stencil = [=](const Point& x) {
    std::vector<std::pair<Point, double>> taps;
    std::array<int, kMaxDim> centre{0, 0, 0};
    for (int a = 0; a < d; ++a) centre[a] = static_cast<int>(std::lround((x[a] - lo[a]) / rho));
    const int span = 2 * reach + 1;
    int total = 1;
    for (int a = 0; a < d; ++a) total *= span;
    double sum = 0.0;
    for (int c = 0; c < total; ++c) {
      Point y{0.0, 0.0, 0.0};
      int rem = c;
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        y[a] = lo[a] + (centre[a] + rem % span - reach) * rho;
        rem /= span;
        r2 += (x[a] - y[a]) * (x[a] - y[a]);
      }
      const double w = kernel_profile(spec, std::sqrt(r2) / spec.epsilon);
      if (w > 0.0) {
        taps.emplace_back(y, w);
        sum += w;
      }
    }
    for (auto& t : taps) t.second /= sum;
    return taps;
  };

  CoefficientField out = coeffs;
  out.growth_bound = coeffs.growth_bound * (1.0 + support);
  out.drift = [inner = coeffs.drift, stencil, d](const MeasurePath& path, const Point& x, double t) {
    Point acc{0.0, 0.0, 0.0};
    for (const auto& [y, w] : stencil(x)) {
      const Point b = inner(path, y, t);
      for (int a = 0; a < d; ++a) acc[a] += w * b[a];
    }
    return acc;
  };
  if (coeffs.diffusion) {
    out.diffusion = [inner = coeffs.diffusion, stencil, d, rank = coeffs.rank](const MeasurePath& path,
                                                                               const Point& x, double t) {
      DiffusionColumns acc{};
      for (const auto& [y, w] : stencil(x)) {
        const DiffusionColumns s = inner(path, y, t);
        for (int l = 0; l < rank; ++l) {
          for (int a = 0; a < d; ++a) acc[l][a] += w * s[l][a];
        }
      }
      return acc;
    };
  }
  return out;
}

double generator_apply(const CoefficientField& coeffs, const MeasurePath& path, const TestFunction& phi,
                       const Point& x, double t) {
  const int d = path.lattice().dim();
  const Point b = coeffs.drift(path, x, t);
  const Point g = phi.gradient(x);
  double value = 0.0;
  for (int a = 0; a < d; ++a) value += b[a] * g[a];
  if (coeffs.rank > 0) {
    const DiffusionColumns cols = coeffs.diffusion(path, x, t);
    const auto hess = phi.hessian(x);
    double second = 0.0;
    for (int l = 0; l < coeffs.rank; ++l) {
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) second += cols[l][i] * cols[l][j] * hess[i * kMaxDim + j];
      }
    }
    value += 0.5 * second;
  }
  return value;
}

double weak_residual(const MeasurePath& path, const CoefficientField& coeffs, const TestFunction& phi, double t) {
  const double h = path.h();
  const long K = std::lround(t / h);
  if (std::abs(t - K * h) > 1e-9 * h || K < 0 || K >= static_cast<long>(path.size())) {
    std::ostringstream msg;
    msg << "weak_residual: t = " << t << " is not an available grid time";
    throw InvalidArgument(msg.str());
  }
  const Lattice& lat = path.lattice();
  auto generator_mean = [&](int k) {
    if (coeffs.prepare) coeffs.prepare(path, k);
    const GridMeasure& m = path.slice(k);
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m.weight(i) != 0.0) s += generator_apply(coeffs, path, phi, lat.node(i), k * h) * m.weight(i);
    }
    return s;
  };
  double time_integral = 0.0;
  double prev = generator_mean(0);
  for (int k = 1; k <= K; ++k) {
    const double cur = generator_mean(k);
    time_integral += 0.5 * h * (prev + cur);
    prev = cur;
  }
  const double lhs = integrate(path.slice(static_cast<int>(K)), phi.value) - integrate(path.slice(0), phi.value);
  return std::abs(lhs - time_integral);
}

}  // namespace fpksl
