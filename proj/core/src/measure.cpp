#include "fpksl/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fpksl {

namespace {

constexpr double kMassSlack = 1e-12;

void require_same_lattice(const GridMeasure& a, const GridMeasure& b, const char* what) {
  if (a.lattice_ptr() != b.lattice_ptr() && !(a.lattice() == b.lattice())) {
    throw InvalidArgument(std::string(what) + ": measures live on different lattices");
  }
}

}  // namespace

GridMeasure::GridMeasure(LatticePtr lattice, std::vector<double> weights)
    : lattice_(std::move(lattice)), weights_(std::move(weights)) {
  if (!lattice_) throw InvalidArgument("GridMeasure: null lattice");
  if (weights_.size() != lattice_->node_count()) {
    std::ostringstream msg;
    msg << "GridMeasure: " << weights_.size() << " weights for a lattice of " << lattice_->node_count()
        << " nodes";
    throw InvalidArgument(msg.str());
  }
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double w = weights_[i];
    if (!std::isfinite(w) || w < 0.0) {
      std::ostringstream msg;
      msg << "GridMeasure: weight at node " << i << " is " << w;
      throw InvalidArgument(msg.str());
    }
    mass_ += w;
  }
  if (mass_ > 1.0 + kMassSlack) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "GridMeasure: total mass " << mass_ << " exceeds 1";
    throw InvalidArgument(msg.str());
  }
}

GridMeasure GridMeasure::zero(LatticePtr lattice) {
  const auto n = lattice->node_count();
  return GridMeasure(std::move(lattice), std::vector<double>(n, 0.0));
}

GridMeasure GridMeasure::dirac(LatticePtr lattice, std::size_t node) {
  std::vector<double> w(lattice->node_count(), 0.0);
  if (node >= w.size()) throw InvalidArgument("GridMeasure::dirac: node out of range");
  w[node] = 1.0;
  return GridMeasure(std::move(lattice), std::move(w));
}

std::vector<double> GridMeasure::density() const {
  std::vector<double> d(weights_.size());
  const double inv = 1.0 / lattice_->cell_volume();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = weights_[i] * inv;
  return d;
}

MeasurePath::MeasurePath(LatticePtr lattice, double h, int steps)
    : lattice_(std::move(lattice)), h_(h), steps_(steps) {
  if (!(h > 0.0)) throw InvalidArgument("MeasurePath: time step must be positive");
  if (steps < 0) throw InvalidArgument("MeasurePath: negative step count");
  slices_.reserve(static_cast<std::size_t>(steps) + 1);
}

MeasurePath::MeasurePath(LatticePtr lattice, double h, std::vector<GridMeasure> slices)
    : MeasurePath(std::move(lattice), h, static_cast<int>(slices.size()) - 1) {
  for (auto& s : slices) append(std::move(s));
}

const GridMeasure& MeasurePath::slice(int k) const {
  if (k < 0 || k >= static_cast<int>(slices_.size())) {
    std::ostringstream msg;
    msg << "MeasurePath: slice " << k << " not available (have " << slices_.size() << ")";
    throw InvalidArgument(msg.str());
  }
  return slices_[static_cast<std::size_t>(k)];
}

void MeasurePath::append(GridMeasure m) {
  if (static_cast<int>(slices_.size()) > steps_) throw InvalidArgument("MeasurePath: path already complete");
  if (m.lattice_ptr() != lattice_ && !(m.lattice() == *lattice_)) {
    throw InvalidArgument("MeasurePath: slice on a different lattice");
  }
  slices_.push_back(std::move(m));
}

GridMeasure MeasurePath::eval_at_time(double t) const {
  const double T = horizon();
  const double slack = 1e-12 * std::max(1.0, T);
  if (!(t >= -slack && t <= T + slack)) {
    std::ostringstream msg;
    msg << "eval_at_time: t = " << t << " outside [0, " << T << "]";
    throw InvalidArgument(msg.str());
  }
  t = std::clamp(t, 0.0, T);
  int k = static_cast<int>(std::floor(t / h_));
  if (k >= steps_) return slice(steps_);
  const double theta = (t - time(k)) / h_;
  if (theta <= 1e-12) return slice(k);
  if (theta >= 1.0 - 1e-12) return slice(k + 1);
  const auto& a = slice(k);
  const auto& b = slice(k + 1);
  std::vector<double> w(a.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = theta * b.weight(i) + (1.0 - theta) * a.weight(i);
  return GridMeasure(lattice_, std::move(w));
}

GridMeasure project_initial(const InitialDatum& init, LatticePtr lattice) {
  const Lattice& lat = *lattice;
  if (const auto* dirac = std::get_if<DiracDatum>(&init)) {
    if (!lat.contains(dirac->location)) throw InvalidArgument("project_initial: Dirac location outside the box");
    return GridMeasure::dirac(lattice, *lat.cell_of(dirac->location));
  }
  if (const auto* table = std::get_if<WeightTable>(&init)) {
    return GridMeasure(std::move(lattice), table->weights);
  }
  const auto& dens = std::get<DensityDatum>(init);
  if (!dens.density) throw InvalidArgument("project_initial: empty density function");
  if (dens.subsamples < 1) throw InvalidArgument("project_initial: subsamples must be >= 1");
  const int d = lat.dim();
  const int q = dens.subsamples;
  const double rho = lat.rho();
  std::vector<double> w(lat.node_count(), 0.0);
  int samples_per_cell = 1;
  for (int k = 0; k < d; ++k) samples_per_cell *= q;
  for (std::size_t n = 0; n < w.size(); ++n) {
    const Point xn = lat.node(n);
    Point a{}, step{};
    double sub_volume = 1.0;
    for (int k = 0; k < d; ++k) {
      a[k] = std::max(xn[k] - 0.5 * rho, lat.lo()[k]);
      const double b = std::min(xn[k] + 0.5 * rho, lat.hi()[k]);
      step[k] = (b - a[k]) / q;
      sub_volume *= step[k];
    }
    double acc = 0.0;
    for (int s = 0; s < samples_per_cell; ++s) {
      Point y{0.0, 0.0, 0.0};
      int rem = s;
      for (int k = 0; k < d; ++k) {
        y[k] = a[k] + (rem % q + 0.5) * step[k];
        rem /= q;
      }
      const double f = dens.density(y);
      if (!std::isfinite(f) || f < 0.0) {
        std::ostringstream msg;
        msg << "project_initial: density sample " << f << " is negative or non-finite";
        throw InvalidArgument(msg.str());
      }
      acc += f;
    }
    w[n] = acc * sub_volume;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) throw InvalidArgument("project_initial: density integrates to zero on the box");
  for (auto& x : w) x /= total;
  return GridMeasure(std::move(lattice), std::move(w));
}

double moment2(const GridMeasure& m) {
  return integrate(m, [](const Point& x) { return norm2(x); });
}

double integrate(const GridMeasure& m, const std::function<double(const Point&)>& f) {
  const Lattice& lat = m.lattice();
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.weight(i) != 0.0) s += f(lat.node(i)) * m.weight(i);
  }
  return s;
}

double sup_norm_diff(const GridMeasure& a, const GridMeasure& b) {
  require_same_lattice(a, b, "sup_norm_diff");
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) best = std::max(best, std::abs(a.weight(i) - b.weight(i)));
  return best;
}

double sup_norm_diff(const MeasurePath& a, const MeasurePath& b) {
  if (a.size() != b.size()) throw InvalidArgument("sup_norm_diff: paths have different slice counts");
  double best = 0.0;
  for (int k = 0; k < static_cast<int>(a.size()); ++k) best = std::max(best, sup_norm_diff(a.slice(k), b.slice(k)));
  return best;
}

}  // namespace fpksl
