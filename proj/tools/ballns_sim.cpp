// Command-line driver: run, resume, scales.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>

#include "ballns/errors.hpp"
#include "ballns/parallel.hpp"
#include "ballns/sim_io.hpp"

#ifndef BALLNS_VERSION
#define BALLNS_VERSION "unknown"
#endif

using namespace ballns;

namespace {

void print_scales(const SimConfig& config) {
  const ActiveScales s = active_scales(config.params());
  std::printf("Lambda = %.6g\ntau = %.6g\nkappa = %.6g\nkappa*Lambda = %.6g\n", s.lambda, s.tau, s.kappa,
              s.kappa_lambda);
}

int run(const SimConfig& config, FlowState start) {
  std::cerr << "n=" << config.n << " dt=" << config.dt << " steps=" << config.total_steps()
            << " threads=" << thread_count() << '\n';
  const RunResult r = run_simulation(config, std::move(start), std::cerr);
  if (r.status != 0) return r.status;
  std::printf("step %lld time %.17g kinetic_energy %.17g rigid_rotation_error %.6e\n",
              static_cast<long long>(r.final_state.step), r.final_state.time, kinetic_energy(r.final_state),
              rigid_rotation_error(r.final_state));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Navier-Stokes solver in the unit ball"};
  app.set_version_flag("--version", BALLNS_VERSION);
  app.require_subcommand(1);

  std::string config_path, checkpoint_path;
  auto* run_cmd = app.add_subcommand("run", "Run from the configured initial state");
  run_cmd->add_option("config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  auto* resume_cmd = app.add_subcommand("resume", "Continue from a checkpoint to t_final");
  resume_cmd->add_option("checkpoint", checkpoint_path, "Snapshot file")->required()->check(CLI::ExistingFile);
  resume_cmd->add_option("config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  auto* scales_cmd = app.add_subcommand("scales", "Print the active-fluid scales of a configuration");
  scales_cmd->add_option("config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    const SimConfig config = parse_config(config_path);
    if (*scales_cmd) {
      print_scales(config);
      return 0;
    }
    if (*resume_cmd) return run(config, read_snapshot(checkpoint_path, config.n));
    return run(config, initial_state(config));
  } catch (const LoadError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvalidParameter& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
