#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mmc/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mmc: min-max coupling bounds for random matrices"};
  app.require_subcommand(1);

  std::optional<std::string> config;
  mmc::Overrides ov;
  for (const char* name : {"bound", "verify", "simulate", "calibrate"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON config file");
    sub->add_option("--out", ov.out, "output directory");
    sub->add_option("--seed", ov.seed, "base seed (unsigned 64-bit)");
    sub->add_option("--workers", ov.workers, "worker threads (0: all cores)");
    sub->add_option("--C", ov.C, "universal constant C");
    sub->add_option("--samples", ov.samples, "Monte Carlo sample count");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mmc::kExitConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return mmc::run_command(command, config, ov, std::cout, std::cerr);
}
