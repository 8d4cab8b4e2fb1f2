// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fpksl/coupling.hpp"
#include "fpksl/models.hpp"
#include "fpksl_cli/config.hpp"
#include "fpksl_cli/driver.hpp"

using namespace fpksl;
using namespace fpksl::cli;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double g_min_weight = std::numeric_limits<double>::infinity();
std::size_t g_slices_seen = 0;

void observe(const MeasurePath& p) {
  for (const auto& s : p.slices()) {
    for (double w : s.weights()) g_min_weight = std::min(g_min_weight, w);
    ++g_slices_seen;
  }
}

double max_mass_change(const MeasurePath& p, double reference) {
  double d = 0.0;
  for (const auto& s : p.slices()) d = std::max(d, std::abs(s.mass() - reference));
  return d;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

LatticePtr box(int dim, double rho, double lo, double hi, Boundary b) {
  return std::make_shared<const Lattice>(dim, rho, Point{lo, dim > 1 ? lo : 0, 0}, Point{hi, dim > 1 ? hi : 0, 0}, b);
}

GridMeasure gaussian_start(LatticePtr lat, Point c, double width) {
  const int d = lat->dim();
  return project_initial(DensityDatum{[=](const Point& x) {
                           double r2 = 0.0;
                           for (int a = 0; a < d; ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
                           return std::exp(-r2 / width);
                         }},
                         lat);
}

// Smooth bounded 2D field with two noise columns; C is a valid linear-growth
// constant because every component is bounded by the sum of its amplitudes.
struct RandomModel {
  double a1, a2, a3, s1, s2;
  double bound() const {
    return std::abs(a1) + std::abs(a2) + std::abs(a3) + std::abs(s1) + 0.3 + 0.1 + std::abs(s2);
  }
  CoefficientField field() const {
    const RandomModel m = *this;
    return make_linear_field(
        2, 2,
        [m](const Point& x, double t) { return Point{m.a1 * std::sin(x[1] + t) + m.a2, m.a3 * std::cos(x[0]), 0}; },
        [m](const Point& x, double) {
          DiffusionColumns c{};
          c[0] = {m.s1 + 0.2 * std::sin(x[0]), 0.1, 0};
          c[1] = {0.1 * std::cos(x[1]), m.s2, 0};
          return c;
        },
        bound());
  }
};

RandomModel random_model(unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1), s(0.3, 0.7);
  return {0.5 * u(rng), 0.5 * u(rng), 0.5 * u(rng), s(rng), s(rng)};
}

// ---------------------------------------------------------------------------

Outcome oscillator_ladder() {
  const auto c = defaults_for(Experiment::Oscillator);
  const auto t0 = std::chrono::steady_clock::now();
  const ErrorTable t = convergence_study(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double reference[3] = {1.02e-2, 5.37e-3, 2.45e-3};
  bool ok = t.size() == 3;
  std::ostringstream d;
  for (std::size_t i = 0; i < t.size() && i < 3; ++i) {
    const double rel = t[i].error / reference[i] - 1.0;
    ok = ok && std::abs(rel) <= 0.30;
    d << "E" << i << "=" << fmt(t[i].error) << " (" << fmt(100 * rel) << "%) ";
    if (t[i].rate) {
      ok = ok && *t[i].rate >= 0.7 && *t[i].rate <= 1.4;
      d << "rate=" << fmt(*t[i].rate) << " ";
    }
  }
  ok = ok && secs < 300.0;
  d << "time=" << fmt(secs) << "s";
  return {ok, d.str()};
}

Outcome mass_conservation(std::vector<std::pair<std::string, double>>& reflect_runs) {
  const auto c = defaults_for(Experiment::LotkaVolterra);
  const auto out = execute(c);
  observe(out.path);
  reflect_runs.emplace_back("lotka_volterra", max_mass_change(out.path, 1.0));

  // random model under Reflect
  const auto lat = box(2, 0.05, -2, 2, Boundary::Reflect);
  const auto p = propagate(gaussian_start(lat, {0.3, -0.2, 0}, 0.1), random_model(5).field(), 0.05, 20);
  observe(p);
  reflect_runs.emplace_back("random_linear", max_mass_change(p, 1.0));

  bool ok = true;
  std::ostringstream d;
  for (const auto& [name, defect] : reflect_runs) {
    ok = ok && defect <= 1e-10;
    d << name << "=" << fmt(defect) << " ";
  }
  d << "(lotka_volterra N=" << c.steps << ", h=" << fmt(c.h) << ")";
  return {ok, d.str()};
}

Outcome markov_consistency() {
  const RandomModel model = random_model(11);
  const auto f = model.field();
  const double h = 0.01;
  double drift_err = 0.0;
  auto variance_ratio = [&](double rho) {
    const auto lat = box(2, rho, -2, 2, Boundary::Truncate);
    // every node whose characteristics and their stencils stay off the faces
    const double margin = h * model.bound() + std::sqrt(2 * h) * model.bound() + rho;
    const int times = 8;
    MeasurePath path(lat, h, times);
    for (int k = 0; k <= times; ++k) path.append(GridMeasure::dirac(lat, 0));
    double worst = 0.0;
    for (int k = 0; k < times; ++k) {
    for (std::size_t j = 0; j < lat->node_count(); ++j) {
      const Point xj = lat->node(j);
      if (std::max(std::abs(xj[0]), std::abs(xj[1])) > 2.0 - margin) continue;
      const auto row = transition_row(f, path, j, k);
      const Point b = f.drift(path, xj, k * h);
      const auto cols = f.diffusion(path, xj, k * h);
      double mean[2] = {0, 0}, mom[2][2] = {{0, 0}, {0, 0}};
      for (const auto& t : row.targets) {
        const Point xi = lat->node(t.node);
        const double dx[2] = {xi[0] - xj[0], xi[1] - xj[1]};
        for (int a = 0; a < 2; ++a) {
          mean[a] += dx[a] * t.weight;
          for (int c = 0; c < 2; ++c) mom[a][c] += dx[a] * dx[c] * t.weight;
        }
      }
      for (int a = 0; a < 2; ++a) {
        drift_err = std::max(drift_err, std::abs(mean[a] - h * b[a]));
        for (int c = 0; c < 2; ++c) {
          double acc = h * h * b[a] * b[c];
          for (int l = 0; l < 2; ++l) acc += h * cols[l][a] * cols[l][c];
          worst = std::max(worst, std::abs(mom[a][c] - acc));
        }
      }
    }
    }
    return worst / (rho * rho);
  };
  const double kappa = variance_ratio(0.01);
  const double r2 = variance_ratio(0.02), r4 = variance_ratio(0.04);
  const bool ok = drift_err <= 1e-12 && r2 <= kappa && r4 <= kappa;
  return {ok, "drift err=" + fmt(drift_err) + " kappa(0.01)=" + fmt(kappa) + " ratio(0.02)=" + fmt(r2) +
                  " ratio(0.04)=" + fmt(r4)};
}

Outcome second_moment() {
  const RandomModel model = random_model(11);
  const auto f = model.field();
  const double rho = 0.05, h = 0.05;
  const int steps = 20;
  const double T = h * steps, C = model.bound();
  const auto lat = box(2, rho, -3, 3, Boundary::Reflect);
  const auto m0 = gaussian_start(lat, {0.3, -0.2, 0}, 0.1);
  const auto p = propagate(m0, f, h, steps);
  verify_linear_growth(f, p);
  observe(p);
  const double bound = std::exp(C * T) * (moment2(m0) + C * T + rho * rho * T / h) * 1.01;
  double worst = 0.0;
  for (const auto& s : p.slices()) worst = std::max(worst, moment2(s));
  return {worst <= bound, "max moment2=" + fmt(worst) + " bound=" + fmt(bound) + " C=" + fmt(C)};
}

Outcome holder_half() {
  // A Dirac start: from smooth data consecutive laws are O(h) apart and the
  // sqrt(h) scaling is never exercised.
  auto c = defaults_for(Experiment::CustomLinear);
  c.rho = 0.01;
  c.boundary = Boundary::Reflect;
  c.initial.type = "dirac";
  const double h0 = 0.1;
  std::vector<double> max_ratio;
  for (double h : {h0, h0 / 2, h0 / 4}) {
    const auto ci = c.at_resolution(c.rho, h);
    const auto out = execute(ci);
    observe(out.path);
    double r = 0.0;
    for (int k = 0; k < ci.steps; ++k) {
      r = std::max(r, wasserstein2(out.path.slice(k + 1), out.path.slice(k)) / std::sqrt(h));
    }
    max_ratio.push_back(r);
  }
  const double L = 1.1 * max_ratio.back();
  bool ok = true;
  for (double r : max_ratio) ok = ok && r <= L;
  return {ok, "max W2/sqrt(h) at h0,h0/2,h0/4 = " + fmt(max_ratio[0]) + ", " + fmt(max_ratio[1]) + ", " +
                  fmt(max_ratio[2]) + "; L=" + fmt(L)};
}

Outcome hjb_closed_form() {
  const Point cvec{0.6, -0.4, 0};
  const ControlGrid grid{2.0, 21, 1};  // spacing 0.2, so -c is a grid point
  const auto lat = box(2, 0.1, -5, 5, Boundary::Truncate);
  const auto m = GridMeasure::dirac(lat, 0);
  const double h = 0.05;
  const int steps = 8;
  CostPair costs{[](const GridMeasure&) { return [](const Point&) { return 0.0; }; },
                 [cvec](const GridMeasure&) { return [cvec](const Point& x) { return cvec[0] * x[0] + cvec[1] * x[1]; }; }};
  double worst = 0.0;
  long checked = 0;
  for (double sigma : {0.0, 0.5, 1.0}) {
    const auto v = solve_hjb(costs, &m, sigma, lat, h, steps, 0, grid);
    for (int k = 0; k <= steps; ++k) {
      // nodes whose value at t_k cannot see the clamped faces
      const double reach = (steps - k) * (h * grid.a_max * std::sqrt(2.0) + sigma * std::sqrt(2 * h));
      for (std::size_t n = 0; n < lat->node_count(); ++n) {
        const Point x = lat->node(n);
        if (std::max(std::abs(x[0]), std::abs(x[1])) > 5.0 - reach - 1e-9) continue;
        const double exact = cvec[0] * x[0] + cvec[1] * x[1] - (steps - k) * h * norm2(cvec) / 2;
        worst = std::max(worst, std::abs(v.at(n, k) - exact));
        ++checked;
      }
    }
  }
  return {worst <= 1e-10, "max interior error=" + fmt(worst) + " over sigma in {0, 0.5, 1}, " +
                              std::to_string(checked) + " node values"};
}

Outcome weak_residual_ladder() {
  const OscillatorParams p{2.1, 0.8, {1, 1, 0}};
  const auto f = oscillator_coefficients(p);
  // exp(-1/(1-s)), s = |x-c|^2/R^2
  const Point c{0.4, 0.2, 0};
  const double R2 = 1.5 * 1.5;
  auto psi = [](double s, int order) {
    if (s >= 1.0) return 0.0;
    const double u = 1.0 / (1.0 - s), v = std::exp(-u);
    if (order == 0) return v;
    if (order == 1) return -v * u * u;
    return v * (std::pow(u, 4) - 2 * std::pow(u, 3));
  };
  auto sval = [=](const Point& x) { return ((x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1])) / R2; };
  TestFunction phi{[=](const Point& x) { return psi(sval(x), 0); },
                   [=](const Point& x) {
                     const double d1 = psi(sval(x), 1);
                     return Point{d1 * 2 * (x[0] - c[0]) / R2, d1 * 2 * (x[1] - c[1]) / R2, 0};
                   },
                   [=](const Point& x) {
                     const double s = sval(x), d1 = psi(s, 1), d2 = psi(s, 2);
                     std::array<double, kMaxDim * kMaxDim> hs{};
                     for (int a = 0; a < 2; ++a) {
                       for (int b = 0; b < 2; ++b) {
                         hs[a * kMaxDim + b] = d2 * 4 * (x[a] - c[a]) * (x[b] - c[b]) / (R2 * R2) +
                                               (a == b ? d1 * 2 / R2 : 0.0);
                       }
                     }
                     return hs;
                   }};
  std::vector<double> res;
  std::ostringstream d;
  for (auto [rho, h] : {std::pair{0.2, 0.1}, std::pair{0.1, 0.05}, std::pair{0.05, 0.025}}) {
    const auto lat = box(2, rho, -4, 4, Boundary::Truncate);
    const int steps = static_cast<int>(std::lround(2.0 / h));
    const auto path = propagate(project_initial(DiracDatum{p.x0}, lat), f, h, steps);
    observe(path);
    res.push_back(weak_residual(path, f, phi, 2.0));
    d << "(" << rho << "," << h << "): " << fmt(res.back()) << " ";
  }
  const bool ok = res[1] < res[0] && res[2] < res[1];
  return {ok, d.str()};
}

Outcome mfg(std::vector<std::pair<std::string, double>>& reflect_runs, double& residual_out) {
  const auto c = defaults_for(Experiment::Mfg);
  const auto out = execute(c);
  observe(out.path);
  const auto& r = *out.coupling;
  const double defect = std::max(r.max_mass_defect, max_mass_change(out.path, 1.0));
  reflect_runs.emplace_back("mfg", defect);
  const double residual = equilibrium_residual(out.path, meeting_costs({c.crowd.meeting, c.crowd.delta}), c.crowd.sigma,
                                               c.crowd.mollifier, c.crowd.control);
  residual_out = residual;
  const Region region = dilate(c.crowd.meeting, 0.1 * c.rho, c.dim);
  const double m_start = mass_in_region(out.path.slice(0), region);
  const double m_end = mass_in_region(out.path.slice(c.steps), region);
  const bool ok = r.converged && r.final_gap < 0.01 && r.iterations <= 200 && defect <= 1e-10 && residual <= 0.03 &&
                  m_end > m_start;
  return {ok, "iterations=" + std::to_string(r.iterations) + " gap=" + fmt(r.final_gap) + " mass defect=" +
                  fmt(defect) + " equilibrium residual=" + fmt(residual) + " meeting mass " + fmt(m_start) +
                  " -> " + fmt(m_end)};
}

Outcome hughes(std::vector<std::pair<std::string, double>>& reflect_runs) {
  const auto c = defaults_for(Experiment::Hughes);
  const auto out = execute(c);
  observe(out.path);
  const double defect = max_mass_change(out.path, 1.0);
  reflect_runs.emplace_back("hughes", defect);
  const Region region = dilate(c.crowd.meeting, 0.1 * c.rho, c.dim);
  const double m_start = mass_in_region(out.path.slice(0), region);
  const double m_end = mass_in_region(out.path.slice(c.steps), region);
  const bool ok = out.path.complete() && defect <= 1e-10 && m_end > m_start;
  return {ok, "slices=" + std::to_string(out.path.size()) + " mass defect=" + fmt(defect) + " meeting mass " +
                  fmt(m_start) + " -> " + fmt(m_end)};
}

Outcome lotka_volterra_substeps() {
  LotkaVolterraParams p;
  p.substeps = 1;
  const auto lat = box(2, 0.06, -1.5, 1.5, Boundary::Reflect);
  const double h = 0.48;
  const auto sub = lotka_volterra_coefficients(p);
  const auto euler = make_linear_field(2, 0, [p](const Point& x, double t) { return lotka_volterra_drift(p, x, t); }, {});
  const auto m0 = gaussian_start(lat, {0.4, 0.4, 0}, 0.05);
  const auto a = propagate(m0, sub, h, 10);
  const auto b = propagate(m0, euler, h, 10);
  observe(a);
  const double diff = sup_norm_diff(a, b);
  LotkaVolterraParams q;
  q.lambda = 0.0;
  const Point eq{std::log(0.95), 0.0, 0};
  const Point drift = lotka_volterra_drift(q, eq, 0.0);
  const double dn = std::hypot(drift[0], drift[1]);
  return {diff == 0.0 && dn <= 1e-14, "P=1 vs Euler sup diff=" + fmt(diff) + " |b(equilibrium)|=" + fmt(dn)};
}

Outcome monte_carlo_oracle() {
  const auto c = defaults_for(Experiment::CustomLinear);  // b = -x, sigma = 0.5, Gaussian start
  const auto t0 = std::chrono::steady_clock::now();
  const auto out = execute(c);
  observe(out.path);
  const LatticePtr lat = out.path.lattice_ptr();

  std::mt19937_64 rng(1234);
  std::normal_distribution<double> z(0.0, 1.0);
  const int paths = 1000000;
  const double sd0 = std::sqrt(c.initial.width / 2.0), sq = std::sqrt(c.h);
  std::vector<double> hist(lat->node_count(), 0.0);
  for (int s = 0; s < paths; ++s) {
    double x = c.initial.center[0] + sd0 * z(rng);
    for (int k = 0; k < c.steps; ++k) x += -x * c.h + 0.5 * sq * z(rng);
    if (const auto cell = lat->cell_of({x, 0, 0})) hist[*cell] += 1.0;
  }
  double total = 0.0;
  for (double v : hist) total += v;
  for (double& v : hist) v /= total;
  std::vector<double> scheme(out.path.slice(c.steps).weights().begin(), out.path.slice(c.steps).weights().end());
  double sm = 0.0;
  for (double v : scheme) sm += v;
  for (double& v : scheme) v /= sm;
  const double w1 = wasserstein1(GridMeasure(lat, scheme), GridMeasure(lat, hist));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {w1 <= 3 * c.rho && secs < 120.0,
          "W1=" + fmt(w1) + " (limit " + fmt(3 * c.rho) + ") time=" + fmt(secs) + "s"};
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, double>> reflect_runs;
  double residual = 0.0;
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& body) {
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %2d %-30s %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };

  // Runs feeding the mass and sign checks go first.
  Outcome c9, c10;
  try {
    c9 = mfg(reflect_runs, residual);
  } catch (const std::exception& e) {
    c9 = {false, std::string("exception: ") + e.what()};
  }
  try {
    c10 = hughes(reflect_runs);
  } catch (const std::exception& e) {
    c10 = {false, std::string("exception: ") + e.what()};
  }

  report(1, "oscillator error ladder", oscillator_ladder);
  report(2, "mass conservation (reflect)", [&] { return mass_conservation(reflect_runs); });
  report(4, "markov chain consistency", markov_consistency);
  report(5, "second moment bound", second_moment);
  report(6, "holder-1/2 in time", holder_half);
  report(7, "hjb affine closed form", hjb_closed_form);
  report(8, "weak residual ladder", weak_residual_ladder);
  report(9, "mfg fictitious play", [&] { return c9; });
  report(10, "hughes explicit coupling", [&] { return c10; });
  report(11, "lotka-volterra substeps", lotka_volterra_substeps);
  report(12, "monte carlo oracle", monte_carlo_oracle);
  report(3, "non-negativity", [] {
    return Outcome{g_min_weight >= 0.0,
                   "min weight=" + fmt(g_min_weight) + " over " + std::to_string(g_slices_seen) + " slices"};
  });
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
