#include "fpksl/coupling.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <mutex>
#include <sstream>

namespace fpksl {

namespace {

int step_index(double t, double h) {
  const double s = t / h;
  const double r = std::round(s);
  return static_cast<int>(std::abs(s - r) < 1e-9 ? r : std::floor(s));
}

/// Gradient table split by component so each can be Q1-interpolated.
struct GradientTable {
  int first = 0;
  std::vector<std::array<std::vector<double>, kMaxDim>> slices;

  GradientTable(const Lattice& lat, const GradientField& g, int first_step) : first(first_step) {
    slices.resize(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      for (int a = 0; a < lat.dim(); ++a) {
        auto& comp = slices[k][a];
        comp.resize(g[k].size());
        for (std::size_t n = 0; n < comp.size(); ++n) comp[n] = g[k][n][a];
      }
    }
  }

  Point minus_gradient(const Lattice& lat, int k, const Point& x) const {
    const int idx = std::clamp(k - first, 0, static_cast<int>(slices.size()) - 1);
    Point b{0.0, 0.0, 0.0};
    for (int a = 0; a < lat.dim(); ++a) b[a] = -lat.interpolate(slices[idx][a], x).value;
    return b;
  }
};

DiffusionColumns identity_columns(int dim, double sigma) {
  DiffusionColumns cols{};
  for (int l = 0; l < dim; ++l) cols[l][l] = sigma;
  return cols;
}

}  // namespace

CoefficientField diffusion_only_field(int dim, double sigma) {
  const DiffusionColumns cols = identity_columns(dim, sigma);
  return make_linear_field(
      dim, dim, [](const Point&, double) { return Point{0.0, 0.0, 0.0}; },
      [cols](const Point&, double) { return cols; }, std::abs(sigma) * std::sqrt(static_cast<double>(dim)));
}

CoefficientField gradient_drift_field(LatticePtr lattice, GradientField gradients, double h, double sigma,
                                      int first_step) {
  if (gradients.empty()) throw InvalidArgument("gradient_drift_field: empty gradient table");
  auto table = std::make_shared<const GradientTable>(*lattice, gradients, first_step);
  const int d = lattice->dim();
  const DiffusionColumns cols = identity_columns(d, sigma);
  CoefficientField f;
  f.dim = d;
  f.rank = d;
  f.causal = true;
  f.drift = [table, lattice, h](const MeasurePath&, const Point& x, double t) {
    return table->minus_gradient(*lattice, step_index(t, h), x);
  };
  f.diffusion = [cols](const MeasurePath&, const Point&, double) { return cols; };
  return f;
}

CoefficientField hughes_field(CostPair costs, double sigma, LatticePtr lattice, double h, int steps,
                              MollifierSpec mollifier, ControlGrid control) {
  mollifier.validate(lattice->rho());
  control.validate();
  struct State {
    std::mutex mutex;
    int k = -1;
    const MeasurePath* path = nullptr;
    std::unique_ptr<GradientTable> table;
  };
  auto state = std::make_shared<State>();
  const int d = lattice->dim();

  auto compute = [=](const MeasurePath& path, int k) {
    const GridMeasure& frozen = path.slice(k);
    const ValueGrid v = solve_hjb(costs, &frozen, sigma, lattice, h, steps, k, control);
    const ValueGrid smooth = mollify_value(v, mollifier);
    GradientField g{gradient_slice(*lattice, smooth.slice(k))};
    state->table = std::make_unique<GradientTable>(*lattice, g, k);
    state->k = k;
    state->path = &path;
  };

  CoefficientField f;
  f.dim = d;
  f.rank = d;
  f.causal = true;
  f.prepare = [=](const MeasurePath& path, int k) {
    std::lock_guard<std::mutex> lock(state->mutex);
    compute(path, k);
  };
  f.drift = [=](const MeasurePath& path, const Point& x, double t) {
    const int k = std::min(step_index(t, h), steps);
    std::lock_guard<std::mutex> lock(state->mutex);
    if (state->k != k || state->path != &path) compute(path, k);
    return state->table->minus_gradient(*lattice, k, x);
  };
  const DiffusionColumns cols = identity_columns(d, sigma);
  f.diffusion = [cols](const MeasurePath&, const Point&, double) { return cols; };
  return f;
}

MeasurePath solve_explicit(const GridMeasure& m0, const CoefficientField& coeffs, double h, int steps) {
  if (!coeffs.causal) throw InvalidArgument("solve_explicit: coefficient field is not causal");
  return propagate(m0, coeffs, h, steps, nullptr);
}

void FictitiousPlayConfig::validate() const {
  if (!(tol > 0.0)) throw InvalidArgument("fictitious play: tol must be positive");
  if (max_iters < 1) throw InvalidArgument("fictitious play: max_iters must be >= 1");
  control.validate();
}

namespace {

double mass_defect(const MeasurePath& path, double reference) {
  double worst = 0.0;
  for (const auto& s : path.slices()) worst = std::max(worst, std::abs(s.mass() - reference));
  return worst;
}

MeasurePath best_response(const GridMeasure& m0, const ValueGrid& v, const MollifierSpec& mollifier, double sigma,
                          double h, int steps) {
  const ValueGrid smooth = mollify_value(v, mollifier);
  const CoefficientField field = gradient_drift_field(v.lattice_ptr(), gradient_field(smooth), h, sigma);
  return propagate(m0, field, h, steps);
}

}  // namespace

FictitiousPlayResult solve_fictitious_play(const GridMeasure& m0, const CostPair& costs, double sigma, double h,
                                           int steps, const FictitiousPlayConfig& config,
                                           const ProgressCallback& progress) {
  config.validate();
  config.mollifier.validate(m0.lattice().rho());
  const auto start = std::chrono::steady_clock::now();
  const LatticePtr lattice = m0.lattice_ptr();
  const std::size_t nodes = lattice->node_count();

  MeasurePath current = propagate(m0, diffusion_only_field(lattice->dim(), sigma), h, steps);
  CouplingReport report;
  report.max_mass_defect = mass_defect(current, m0.mass());

  // Running sum of m^0..m^p, slice by slice.
  std::vector<std::vector<double>> sum(static_cast<std::size_t>(steps) + 1, std::vector<double>(nodes, 0.0));
  auto accumulate = [&](const MeasurePath& p) {
    for (int k = 0; k <= steps; ++k) {
      const auto w = p.slice(k).weights();
      for (std::size_t i = 0; i < nodes; ++i) sum[k][i] += w[i];
    }
  };
  accumulate(current);

  std::optional<FictitiousPlayResult> best;
  for (int p = 0; p < config.max_iters; ++p) {
    std::vector<GridMeasure> avg_slices;
    avg_slices.reserve(sum.size());
    const double inv = 1.0 / (p + 1);
    for (const auto& s : sum) {
      std::vector<double> w(nodes);
      for (std::size_t i = 0; i < nodes; ++i) w[i] = s[i] * inv;
      avg_slices.emplace_back(lattice, std::move(w));
    }
    const MeasurePath average(lattice, h, std::move(avg_slices));

    ValueGrid v = solve_hjb(costs, &average, sigma, lattice, h, steps, 0, config.control);
    MeasurePath next = best_response(m0, v, config.mollifier, sigma, h, steps);
    const double gap = sup_norm_diff(current, next);

    report.iterations = p + 1;
    report.final_gap = gap;
    report.gap_history.push_back(gap);
    report.max_mass_defect = std::max(report.max_mass_defect, mass_defect(next, m0.mass()));
    const IterationRecord rec{p + 1, gap,
                              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
    report.records.push_back(rec);
    if (progress) progress(rec);

    const bool done = gap < config.tol;
    if (done || !best || gap < best->report.final_gap) {
      best.emplace(FictitiousPlayResult{next, std::move(v), {}});
      best->report.final_gap = gap;
    }
    if (done) {
      report.converged = true;
      break;
    }
    accumulate(next);
    current = std::move(next);
  }

  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!report.converged) report.final_gap = best->report.final_gap;
  best->report = std::move(report);
  return std::move(*best);
}

double equilibrium_residual(const MeasurePath& path, const CostPair& costs, double sigma,
                            const MollifierSpec& mollifier, const ControlGrid& control) {
  if (!path.complete()) throw InvalidArgument("equilibrium_residual: path is incomplete");
  const ValueGrid v = solve_hjb(costs, &path, sigma, path.lattice_ptr(), path.h(), path.steps(), 0, control);
  const MeasurePath out = best_response(path.slice(0), v, mollifier, sigma, path.h(), path.steps());
  return sup_norm_diff(path, out);
}

}  // namespace fpksl
