#include "mts/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

enum Exit { ok = 0, numerical_failure = 1, config_error = 2 };

int guarded(const std::function<void()>& body) {
  try {
    body();
    return ok;
  } catch (const mts::ParseError& e) {
    std::cerr << "error: " << e.what();
    if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
    std::cerr << '\n';
    return config_error;
  } catch (const mts::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return config_error;
  } catch (const mts::NumericalError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return numerical_failure;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return numerical_failure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-time-step coupled transport solver"};
  app.require_subcommand(1);

  std::string config_path, out_dir, mesh_path;
  int snapshots = -1;
  int levels = 0;
  bool full_fixtures = false;

  auto* run = app.add_subcommand("run", "Integrate a configured problem and write time series, snapshots and a summary");
  run->add_option("config", config_path, "INI run configuration")->required();
  run->add_option("--out", out_dir, "Output directory (overrides [output] directory)");
  run->add_option("--snapshots", snapshots, "Write a field snapshot every N system steps")->check(CLI::NonNegativeNumber);
  run->add_flag("--full-fixtures", full_fixtures, "Use the full-size benchmark meshes");

  auto* analyze = app.add_subcommand("analyze", "Report critical time-steps, alpha_max and stability verdicts");
  analyze->add_option("config", config_path, "INI run configuration")->required();
  analyze->add_flag("--full-fixtures", full_fixtures, "Use the full-size benchmark meshes");

  auto* convergence = app.add_subcommand("convergence", "Halve the system time-step and report the observed order");
  convergence->add_option("config", config_path, "INI run configuration")->required();
  convergence->add_option("--levels", levels, "Number of time-step levels (at least 3)");
  convergence->add_option("--out", out_dir, "Output directory for convergence.csv");

  auto* mesh_info = app.add_subcommand("mesh-info", "Summarize a mesh file");
  mesh_info->add_option("mesh", mesh_path, "Native or msh2 mesh")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  auto load = [&] {
    mts::RunConfig c = mts::load_run_config(config_path);
    if (!out_dir.empty()) c.output.directory = out_dir;
    if (snapshots >= 0) c.output.snapshot_every = snapshots;
    if (full_fixtures) c.fixtures = mts::FixtureSize::full;
    if (levels > 0) c.convergence_levels = levels;
    return c;
  };

  if (*run) return guarded([&] { mts::cmd_run(load(), std::cout); });
  if (*analyze) return guarded([&] { mts::cmd_analyze(load(), std::cout); });
  if (*convergence) return guarded([&] { mts::cmd_convergence(load(), std::cout); });
  return guarded([&] { mts::cmd_mesh_info(mesh_path, std::cout); });
}
