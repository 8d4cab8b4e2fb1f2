#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpksl_cli/config.hpp"

namespace fpksl::cli {

struct ErrorRow {
  double rho = 0.0;
  double h = 0.0;
  double error = 0.0;
  std::optional<double> rate;  // empty on the first row
};

using ErrorTable = std::vector<ErrorRow>;

/// E = sqrt( (1/K^d) sum_i (weight_i / rho^d - exact_i)^2 ), K nodes per axis.
double error_metric(const GridMeasure& numeric, std::span<const double> exact);

/// Sum of the weights of nodes lying in the region.
double mass_in_region(const GridMeasure& m, const Region& region);

GridMeasure initial_measure(const RunConfig& c, LatticePtr lattice);

/// Coefficients of a custom_linear run.
CoefficientField linear_coefficients(const LinearSpec& spec, int dim);

/// Density at the nodes of the exact Gaussian law at time t of a custom_linear
/// run, normalized over the box. Needs a non-degenerate covariance.
std::vector<double> linear_reference_density(const RunConfig& c, const Lattice& lattice, double t);

/// Exact terminal density of the experiment at the nodes (oscillator and
/// custom_linear only).
std::vector<double> reference_density(const RunConfig& c, const Lattice& lattice);

struct RunOutcome {
  MeasurePath path;
  std::optional<CouplingReport> coupling;
};

/// Solves the configured experiment; writes nothing.
RunOutcome execute(const RunConfig& c);

/// Runs every ladder entry and computes E and the observed rates
/// log(E_prev / E_cur) / log(rho_prev / rho_cur). rho must strictly decrease.
ErrorTable convergence_study(const RunConfig& c);

void write_snapshots(std::ostream& out, const MeasurePath& path, int stride);
void write_error_table(std::ostream& out, const ErrorTable& table);

/// Exit codes of the command line driver.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;

/// `fpk-sl run|study|validate <config>`; returns the exit code. Diagnostics go
/// to `err`, progress to `log`.
int command_run(const std::string& config_path, std::ostream& log, std::ostream& err);
int command_study(const std::string& config_path, std::ostream& log, std::ostream& err);
int command_validate(const std::string& config_path, std::ostream& log, std::ostream& err);

}  // namespace fpksl::cli
