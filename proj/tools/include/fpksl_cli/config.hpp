#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fpksl/coupling.hpp"
#include "fpksl/models.hpp"

namespace fpksl::cli {

/// Invalid configuration; the message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { Oscillator, LotkaVolterra, Mfg, Hughes, CustomLinear };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);

/// Initial law: Dirac at `center`, or density exp(-|x - center|^2 / width)
/// restricted to the box and normalized.
struct InitialSpec {
  std::string type = "gaussian";
  Point center{0.0, 0.0, 0.0};
  double width = 0.2;
};

/// Shared by the mfg and hughes experiments.
struct CrowdSpec {
  double sigma = 0.01;
  MollifierSpec mollifier{0.2, KernelShape::TruncatedGaussian, 4.0};
  double delta = 0.05;
  Region meeting;
  ControlGrid control{4.0, 41, 2};
  double tol = 0.01;
  int max_iters = 200;
};

/// dX = (A X + c) dt + sum_l s_l dW_l with constant columns s_l.
struct LinearSpec {
  std::vector<double> drift;   // d x d, row-major
  std::vector<double> offset;  // d
  std::vector<Point> diffusion;
};

struct RunConfig {
  Experiment experiment = Experiment::Oscillator;

  int dim = 2;
  double rho = 0.1;
  Point lo{-4.0, -4.0, 0.0};
  Point hi{4.0, 4.0, 0.0};
  Boundary boundary = Boundary::Truncate;

  double horizon = 2.0;
  double h = 0.05;
  int steps = 40;

  std::string output = "out";
  /// 0 means max(1, N / 50).
  int stride = 0;

  OscillatorParams oscillator;
  LotkaVolterraParams lotka_volterra;
  /// Half-open averaging window [average_from, average_to); negative means default.
  double average_from = -1.0;
  double average_to = -1.0;
  CrowdSpec crowd;
  LinearSpec linear;
  InitialSpec initial;

  /// (rho, h) pairs for `study`.
  std::vector<std::pair<double, double>> ladder;

  int resolved_stride() const;
  /// [average_from, average_to) with defaults [h round(2N/3), T + h).
  std::pair<double, double> averaging_window() const;
  std::shared_ptr<const Lattice> make_lattice() const;
  /// Copy with a different (rho, h); steps are re-derived from the horizon.
  RunConfig at_resolution(double rho, double h) const;
};

/// The parameters an experiment runs with when the file does not override them.
RunConfig defaults_for(Experiment e);

/// Parses INI text. `source` only labels error messages.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// INI rendering of every resolved parameter; parse_config() reads it back.
std::string to_ini(const RunConfig& c);

/// Output directory: `output` resolved against $FPK_SL_OUTPUT_ROOT when that
/// is set and `output` is relative.
std::filesystem::path output_directory(const RunConfig& c);

inline constexpr const char* kOutputRootEnv = "FPK_SL_OUTPUT_ROOT";

}  // namespace fpksl::cli
