#include <iostream>

#include "CLI11.hpp"
#include "fpksl_cli/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Semi-Lagrangian Fokker-Planck experiments"};
  app.require_subcommand(1);
  std::string config;
  auto* run = app.add_subcommand("run", "solve the configured experiment and write its outputs");
  run->add_option("config", config, "config file")->required();
  auto* study = app.add_subcommand("study", "run the convergence ladder and write error_table.csv");
  study->add_option("config", config, "config file")->required();
  auto* validate = app.add_subcommand("validate", "check a config and print the resolved parameters");
  validate->add_option("config", config, "config file")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fpksl::cli::kExitConfig;
  }
  if (*run) return fpksl::cli::command_run(config, std::cout, std::cerr);
  if (*study) return fpksl::cli::command_study(config, std::cout, std::cerr);
  return fpksl::cli::command_validate(config, std::cout, std::cerr);
}
