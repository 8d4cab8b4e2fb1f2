#include "fpksl_cli/driver.hpp"

#include <Eigen/Dense>

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fpksl::cli {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

double error_metric(const GridMeasure& numeric, std::span<const double> exact) {
  if (exact.size() != numeric.size()) throw InvalidArgument("error_metric: exact density does not match the lattice");
  const double vol = numeric.lattice().cell_volume();
  double s = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double e = numeric.weight(i) / vol - exact[i];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(exact.size()));
}

double mass_in_region(const GridMeasure& m, const Region& region) {
  const Lattice& lat = m.lattice();
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.weight(i) > 0.0 && region_contains(region, lat.node(i), lat.dim())) s += m.weight(i);
  }
  return s;
}

GridMeasure initial_measure(const RunConfig& c, LatticePtr lattice) {
  if (c.initial.type == "dirac") return project_initial(DiracDatum{c.initial.center}, lattice);
  const Point centre = c.initial.center;
  const double w = c.initial.width;
  const int d = c.dim;
  return project_initial(DensityDatum{[centre, w, d](const Point& x) {
                                        double r2 = 0.0;
                                        for (int a = 0; a < d; ++a) r2 += (x[a] - centre[a]) * (x[a] - centre[a]);
                                        return std::exp(-r2 / w);
                                      },
                                      4},
                         lattice);
}

CoefficientField linear_coefficients(const LinearSpec& spec, int dim) {
  double frob = 0.0, off = 0.0, cols = 0.0;
  for (double a : spec.drift) frob += a * a;
  for (double c : spec.offset) off += c * c;
  for (const auto& s : spec.diffusion) cols += std::sqrt(norm2(s));
  const double bound = std::sqrt(frob) + std::sqrt(off) + cols;
  DiffusionColumns columns{};
  for (std::size_t l = 0; l < spec.diffusion.size(); ++l) columns[l] = spec.diffusion[l];
  const auto A = spec.drift;
  const auto c = spec.offset;
  return make_linear_field(
      dim, static_cast<int>(spec.diffusion.size()),
      [A, c, dim](const Point& x, double) {
        Point b{0.0, 0.0, 0.0};
        for (int i = 0; i < dim; ++i) {
          b[i] = c[i];
          for (int j = 0; j < dim; ++j) b[i] += A[i * dim + j] * x[j];
        }
        return b;
      },
      [columns](const Point&, double) { return columns; }, bound);
}

namespace {

/// Integral of f over the box by tensor midpoint quadrature at spacing rho / refine.
double box_integral(const Lattice& lat, int refine, const std::function<double(const Point&)>& f) {
  const int d = lat.dim();
  const double q = lat.rho() / refine;
  std::array<int, kMaxDim> n{1, 1, 1};
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) {
    n[a] = (lat.nodes_per_axis(a) - 1) * refine;
    total *= static_cast<std::size_t>(n[a]);
  }
  double s = 0.0;
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t rem = c;
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) {
      x[a] = lat.lo()[a] + (static_cast<double>(rem % n[a]) + 0.5) * q;
      rem /= n[a];
    }
    s += f(x);
  }
  return s * std::pow(q, d);
}

}  // namespace

std::vector<double> linear_reference_density(const RunConfig& c, const Lattice& lattice, double t) {
  using Mat = Eigen::MatrixXd;
  using Vec = Eigen::VectorXd;
  const int d = c.dim;
  Mat A(d, d), S = Mat::Zero(d, d), C = Mat::Zero(d, d);
  Vec off(d), m(d);
  for (int i = 0; i < d; ++i) {
    off[i] = c.linear.offset[i];
    m[i] = c.initial.center[i];
    for (int j = 0; j < d; ++j) A(i, j) = c.linear.drift[i * d + j];
  }
  for (const auto& s : c.linear.diffusion) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = s[i];
    S += v * v.transpose();
  }
  if (c.initial.type == "gaussian") C = Mat::Identity(d, d) * (c.initial.width / 2.0);

  // RK4 on m' = A m + off, C' = A C + C A^T + S.
  const int steps = std::max(1000, static_cast<int>(std::ceil(t * 1000.0)));
  const double dt = t / steps;
  auto fm = [&](const Vec& x) -> Vec { return A * x + off; };
  auto fc = [&](const Mat& x) -> Mat { return A * x + x * A.transpose() + S; };
  for (int s = 0; s < steps; ++s) {
    const Vec k1 = fm(m), k2 = fm(m + 0.5 * dt * k1), k3 = fm(m + 0.5 * dt * k2), k4 = fm(m + dt * k3);
    m += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const Mat l1 = fc(C), l2 = fc(C + 0.5 * dt * l1), l3 = fc(C + 0.5 * dt * l2), l4 = fc(C + dt * l3);
    C += dt / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
  }
  Eigen::LLT<Mat> llt(C);
  if (llt.info() != Eigen::Success) {
    throw InvalidArgument("linear reference: covariance is degenerate at the final time");
  }
  const Mat P = llt.solve(Mat::Identity(d, d));
  auto pdf = [&](const Point& x) {
    Vec y(d);
    for (int i = 0; i < d; ++i) y[i] = x[i] - m[i];
    return std::exp(-0.5 * y.dot(P * y));
  };
  const double z = box_integral(lattice, 4, pdf);
  std::vector<double> out(lattice.node_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pdf(lattice.node(i)) / z;
  return out;
}

std::vector<double> reference_density(const RunConfig& c, const Lattice& lattice) {
  switch (c.experiment) {
    case Experiment::Oscillator: return oscillator_exact_grid(c.oscillator, c.horizon, lattice, 4);
    case Experiment::CustomLinear: return linear_reference_density(c, lattice, c.horizon);
    default:
      throw ConfigError("study: experiment " + to_string(c.experiment) + " has no reference solution");
  }
}

RunOutcome execute(const RunConfig& c) {
  const LatticePtr lattice = c.make_lattice();
  const GridMeasure m0 = initial_measure(c, lattice);
  switch (c.experiment) {
    case Experiment::Oscillator:
      return {solve_explicit(m0, oscillator_coefficients(c.oscillator), c.h, c.steps), std::nullopt};
    case Experiment::LotkaVolterra:
      return {solve_explicit(m0, lotka_volterra_coefficients(c.lotka_volterra), c.h, c.steps), std::nullopt};
    case Experiment::CustomLinear:
      return {solve_explicit(m0, linear_coefficients(c.linear, c.dim), c.h, c.steps), std::nullopt};
    case Experiment::Mfg: {
      const auto& s = c.crowd;
      FictitiousPlayConfig fp;
      fp.tol = s.tol;
      fp.max_iters = s.max_iters;
      fp.mollifier = s.mollifier;
      fp.control = s.control;
      auto res = solve_fictitious_play(m0, meeting_costs({s.meeting, s.delta}), s.sigma, c.h, c.steps, fp);
      return {std::move(res.path), std::move(res.report)};
    }
    case Experiment::Hughes: {
      const auto& s = c.crowd;
      const auto field =
          hughes_field(meeting_costs({s.meeting, s.delta}), s.sigma, lattice, c.h, c.steps, s.mollifier, s.control);
      return {solve_explicit(m0, field, c.h, c.steps), std::nullopt};
    }
  }
  throw ConfigError("run.experiment: unsupported");
}

ErrorTable convergence_study(const RunConfig& c) {
  if (c.ladder.empty()) throw ConfigError("study.ladder: no resolutions given");
  for (std::size_t i = 1; i < c.ladder.size(); ++i) {
    if (!(c.ladder[i].first < c.ladder[i - 1].first)) {
      throw ConfigError("study.ladder: rho must strictly decrease along the ladder");
    }
  }
  ErrorTable table;
  for (const auto& [rho, h] : c.ladder) {
    const RunConfig level = c.at_resolution(rho, h);
    const LatticePtr lattice = level.make_lattice();
    const auto exact = reference_density(level, *lattice);
    const RunOutcome out = execute(level);
    ErrorRow row{rho, level.h, error_metric(out.path.slice(level.steps), exact), std::nullopt};
    if (!table.empty()) {
      const ErrorRow& prev = table.back();
      row.rate = std::log(prev.error / row.error) / std::log(prev.rho / row.rho);
    }
    table.push_back(row);
  }
  return table;
}

void write_snapshots(std::ostream& out, const MeasurePath& path, int stride) {
  const Lattice& lat = path.lattice();
  const int d = lat.dim();
  const double vol = lat.cell_volume();
  out << "k,t";
  for (int a = 0; a < d; ++a) out << ",i" << a;
  for (int a = 0; a < d; ++a) out << ",x" << a;
  out << ",weight,density\n";
  const int last = static_cast<int>(path.size()) - 1;
  for (int k = 0; k <= last; ++k) {
    if (k % stride != 0 && k != last) continue;
    const auto& m = path.slice(k);
    const std::string t = fmt(path.time(k));
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double w = m.weight(i);
      if (w <= 0.0) continue;
      const MultiIndex idx = lat.multi_index(i);
      const Point x = lat.node(i);
      out << k << ',' << t;
      for (int a = 0; a < d; ++a) out << ',' << idx[a];
      for (int a = 0; a < d; ++a) out << ',' << fmt(x[a]);
      out << ',' << fmt(w) << ',' << fmt(w / vol) << '\n';
    }
  }
}

void write_error_table(std::ostream& out, const ErrorTable& table) {
  out << "rho,h,error,rate\n";
  for (const auto& r : table) {
    out << fmt(r.rho) << ',' << fmt(r.h) << ',' << fmt(r.error) << ',';
    if (r.rate) out << fmt(*r.rate);
    out << '\n';
  }
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw SolverError("cannot write " + p.string());
  f << content;
  if (!f) throw SolverError("failed writing " + p.string());
}

std::filesystem::path prepare_output(const RunConfig& c) {
  const auto dir = output_directory(c);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw SolverError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << '\n';
    return kExitSolver;
  }
}

std::string series_csv(const MeasurePath& path, const Region& region) {
  std::ostringstream o;
  o << "k,t,mass\n";
  for (int k = 0; k < static_cast<int>(path.size()); ++k) {
    o << k << ',' << fmt(path.time(k)) << ',' << fmt(mass_in_region(path.slice(k), region)) << '\n';
  }
  return o.str();
}

}  // namespace

int command_run(const std::string& config_path, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig c = load_config(config_path);
    const auto dir = prepare_output(c);
    write_file(dir / "manifest.ini", to_ini(c));
    log << "running " << to_string(c.experiment) << ": N = " << c.steps << ", h = " << fmt(c.h)
        << ", rho = " << fmt(c.rho) << '\n';

    const RunOutcome out = execute(c);
    {
      std::ostringstream s;
      write_snapshots(s, out.path, c.resolved_stride());
      write_file(dir / "snapshots.csv", s.str());
    }
    double max_defect = 0.0;
    for (const auto& s : out.path.slices()) max_defect = std::max(max_defect, std::abs(s.mass() - out.path.slice(0).mass()));
    log << "terminal mass " << fmt(out.path.slice(c.steps).mass()) << ", max mass change " << fmt(max_defect) << '\n';

    switch (c.experiment) {
      case Experiment::Oscillator: {
        const LatticePtr lattice = c.make_lattice();
        const auto exact = reference_density(c, *lattice);
        ErrorTable t{{c.rho, c.h, error_metric(out.path.slice(c.steps), exact), std::nullopt}};
        std::ostringstream s;
        write_error_table(s, t);
        write_file(dir / "error_table.csv", s.str());
        log << "E = " << fmt(t[0].error) << '\n';
        break;
      }
      case Experiment::LotkaVolterra: {
        const auto avg = time_averaged_density(out.path, c.averaging_window().first, c.averaging_window().second);
        const Lattice& lat = out.path.lattice();
        std::ostringstream s;
        s << "i0,i1,x0,x1,density\n";
        for (std::size_t i = 0; i < avg.size(); ++i) {
          const auto idx = lat.multi_index(i);
          const Point x = lat.node(i);
          s << idx[0] << ',' << idx[1] << ',' << fmt(x[0]) << ',' << fmt(x[1]) << ',' << fmt(avg[i]) << '\n';
        }
        write_file(dir / "time_averaged_density.csv", s.str());
        break;
      }
      case Experiment::Mfg:
      case Experiment::Hughes: {
        const Region region = dilate(c.crowd.meeting, 0.1 * c.rho, c.dim);
        write_file(dir / "mass_in_region.csv", series_csv(out.path, region));
        if (out.coupling) {
          const auto& r = *out.coupling;
          std::ostringstream s, timing;
          s << "iteration,gap\n";
          timing << "iteration wall_seconds\n";
          for (const auto& rec : r.records) {
            s << rec.iteration << ',' << fmt(rec.gap) << '\n';
            timing << rec.iteration << ' ' << rec.seconds << '\n';
          }
          write_file(dir / "coupling_report.csv", s.str());
          write_file(dir / "coupling_timing.txt", timing.str());
          log << "fictitious play: " << r.iterations << " iterations, gap " << fmt(r.final_gap)
              << (r.converged ? ", converged" : ", NOT converged") << '\n';
          if (!r.converged) {
            err << "solver error: fictitious play did not reach tol within max_iters\n";
            return kExitSolver;
          }
        }
        break;
      }
      case Experiment::CustomLinear:
        break;
    }
    log << "outputs in " << dir.string() << '\n';
    return kExitOk;
  });
}

int command_study(const std::string& config_path, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig c = load_config(config_path);
    const auto dir = prepare_output(c);
    write_file(dir / "manifest.ini", to_ini(c));
    const ErrorTable table = convergence_study(c);
    std::ostringstream s;
    write_error_table(s, table);
    write_file(dir / "error_table.csv", s.str());
    log << s.str();
    return kExitOk;
  });
}

int command_validate(const std::string& config_path, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig c = load_config(config_path);
    const LatticePtr lattice = c.make_lattice();
    const GridMeasure m0 = initial_measure(c, lattice);
    if (c.experiment == Experiment::Oscillator || c.experiment == Experiment::CustomLinear) {
      const auto field = c.experiment == Experiment::Oscillator ? oscillator_coefficients(c.oscillator)
                                                                : linear_coefficients(c.linear, c.dim);
      MeasurePath probe(lattice, c.h, std::vector<GridMeasure>{m0});
      verify_linear_growth(field, probe);
    }
    log << to_ini(c);
    return kExitOk;
  });
}

}  // namespace fpksl::cli
