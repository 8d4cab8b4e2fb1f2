#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fpksl_cli/config.hpp"
#include "fpksl_cli/driver.hpp"
#include "support.hpp"

using namespace fpksl;
using namespace fpksl::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fpksl_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.ini";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kStill = R"(
[run]
experiment = custom_linear
output = still
[lattice]
dim = 1
rho = 0.1
lo = -1
hi = 1
[time]
T = 1
h = 0.1
[linear]
drift = 0
offset = 0
diffusion = 0
[initial]
type = gaussian
center = 0.2
width = 0.05
)";

const char* kCoarseMfg = R"(
[run]
experiment = mfg
output = mfg
[lattice]
dim = 1
rho = 0.1
lo = -3
hi = 3
boundary = reflect
[time]
T = 1
h = 0.1
[mfg]
sigma = 0.01
epsilon = 0.2
delta = 0.1
meeting = -2.5 -2; 1 1.5
tol = 1e-9
max_iters = 2
)";

}  // namespace

TEST_CASE("parse errors name the offending key or section") {
  CHECK(error_of("[run]\nexperiment = heat\n").find("experiment") != std::string::npos);
  CHECK(error_of("[run]\nexperiment = oscillator\n[lattice]\nrho = abc\n").find("rho") != std::string::npos);
  CHECK(error_of("[run]\nexperiment = oscillator\n[lattice]\ncolour = 3\n").find("colour") != std::string::npos);
  CHECK(error_of("[run]\nexperiment = oscillator\n[weather]\nrain = 1\n").find("weather") != std::string::npos);
  CHECK(error_of("[run]\nexperiment = oscillator\n[mfg]\nsigma = 1\n").find("mfg") != std::string::npos);
  CHECK(error_of("[run]\nexperiment = oscillator\n[initial]\ntype = dirac\n").find("initial") != std::string::npos);
  CHECK(error_of("[run]\nexperiment = oscillator\n[lattice]\nrho = -1\n").find("rho") != std::string::npos);
  CHECK(error_of("[run]\nexperiment = oscillator\n[oscillator]\ngamma = 1.5\n").find("gamma") != std::string::npos);
}

TEST_CASE("manifest round trips for every experiment") {
  for (auto e : {Experiment::Oscillator, Experiment::LotkaVolterra, Experiment::Mfg, Experiment::Hughes,
                 Experiment::CustomLinear}) {
    const auto c = defaults_for(e);
    const std::string once = to_ini(c);
    CHECK(to_ini(parse_config(once)) == once);
    CHECK(experiment_from_string(to_string(e)) == e);
  }
}

TEST_CASE("time section: N derived from T and h, mismatch rejected") {
  const auto c = parse_config("[run]\nexperiment = oscillator\n[time]\nT = 2\nh = 0.25\n");
  CHECK(c.steps == 8);
  CHECK(!error_of("[run]\nexperiment = oscillator\n[time]\nT = 2\nh = 0.3\n").empty());
}

TEST_CASE("output root from the environment") {
  auto c = defaults_for(Experiment::CustomLinear);
  c.output = "rel/dir";
  ::setenv(kOutputRootEnv, "/tmp/fpksl_root", 1);
  CHECK(output_directory(c) == fs::path("/tmp/fpksl_root/rel/dir"));
  c.output = "/abs/dir";
  CHECK(output_directory(c) == fs::path("/abs/dir"));
  ::unsetenv(kOutputRootEnv);
  c.output = "rel/dir";
  CHECK(output_directory(c) == fs::path("rel/dir"));
}

TEST_CASE("error metric and region mass examples") {
  const auto lat = fpksl::test::line(0.5, 0, 1);
  const GridMeasure m(lat, {0.25, 0.5, 0.25});
  CHECK(error_metric(m, std::vector<double>{0.5, 1.0, 0.5}) == 0.0);
  CHECK(error_metric(m, std::vector<double>{0.0, 1.0, 0.0}) == doctest::Approx(std::sqrt(0.5 / 3.0)));
  CHECK_THROWS_AS(error_metric(m, std::vector<double>{1.0}), InvalidArgument);
  CHECK(mass_in_region(m, Region{Box{{0.4, 0, 0}, {1.0, 0, 0}}}) == doctest::Approx(0.75));
  CHECK(mass_in_region(m, Region{Box{{0.1, 0, 0}, {0.2, 0, 0}}}) == 0.0);
}

TEST_CASE("zero drift and zero noise leave the initial law in place") {
  const auto c = parse_config(kStill);
  const auto out = execute(c);
  CHECK(sup_norm_diff(out.path.slice(c.steps), out.path.slice(0)) == 0.0);
}

TEST_CASE("convergence study rejects a ladder that does not refine") {
  auto c = defaults_for(Experiment::CustomLinear);
  c.ladder = {{0.1, 0.1}, {0.1, 0.05}};
  CHECK_THROWS_AS(convergence_study(c), ConfigError);
  c = defaults_for(Experiment::Mfg);
  c.ladder = {{0.1, 0.1}, {0.05, 0.05}};
  CHECK_THROWS_AS(convergence_study(c), ConfigError);
}

TEST_CASE("command exit codes and outputs") {
  const auto dir = scratch("exit");
  ::setenv(kOutputRootEnv, dir.c_str(), 1);
  std::ostringstream log, err;

  CHECK(command_run((dir / "missing.ini").string(), log, err) == kExitConfig);
  CHECK(command_run(write_config(dir, "[run]\nexperiment = nope\n").string(), log, err) == kExitConfig);
  CHECK(command_validate(write_config(dir, kStill).string(), log, err) == kExitOk);

  const auto cfg = write_config(dir, kStill);
  CHECK(command_run(cfg.string(), log, err) == kExitOk);
  CHECK(fs::exists(dir / "still" / "manifest.ini"));
  const std::string first = slurp(dir / "still" / "snapshots.csv");
  CHECK(first.rfind("k,t,i0,x0,weight,density\n", 0) == 0);
  CHECK(command_run(cfg.string(), log, err) == kExitOk);
  CHECK(slurp(dir / "still" / "snapshots.csv") == first);

  CHECK(command_run(write_config(dir, kCoarseMfg).string(), log, err) == kExitSolver);
  CHECK(fs::exists(dir / "mfg" / "coupling_report.csv"));
  CHECK(fs::exists(dir / "mfg" / "mass_in_region.csv"));
  ::unsetenv(kOutputRootEnv);
  fs::remove_all(dir);
}

TEST_CASE("custom linear terminal law matches an Euler-Maruyama histogram") {
  // dX = -X dt + 0.5 dW from N(0.5, 0.05)
  auto c = defaults_for(Experiment::CustomLinear);
  const auto lat = c.make_lattice();
  const auto exact = linear_reference_density(c, *lat, c.horizon);

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z(0.0, 1.0);
  const int samples = 1000000, substeps = 100;
  const double dt = c.horizon / substeps, sq = std::sqrt(dt);
  std::vector<double> hist(lat->node_count(), 0.0);
  for (int s = 0; s < samples; ++s) {
    double x = 0.5 + std::sqrt(0.05) * z(rng);
    for (int i = 0; i < substeps; ++i) x += -x * dt + 0.5 * sq * z(rng);
    const auto cell = lat->cell_of({x, 0, 0});
    if (cell) hist[*cell] += 1.0;
  }
  double peak = 0.0, worst = 0.0;
  for (std::size_t n = 1; n + 1 < hist.size(); ++n) {
    const double dens = hist[n] / samples / lat->rho();
    peak = std::max(peak, exact[n]);
    worst = std::max(worst, std::abs(dens - exact[n]));
  }
  CHECK(worst <= 0.03 * peak);

  // and the scheme itself is close to both on this lattice
  const auto out = execute(c);
  CHECK(error_metric(out.path.slice(c.steps), exact) <= 0.05 * peak);
}
