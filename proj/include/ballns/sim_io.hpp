#pragma once

// Batch-run plumbing: configuration files, boundary-potential files, binary
// snapshots and the run loop that writes energy, snapshot and grid output.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "ballns/ns_stepper.hpp"

namespace ballns {

enum class InitKind { Random, Zero, Rigid };

struct SimConfig {
  int n = 0;
  double dt = 0.0, t_final = 0.0;
  double gamma0 = 0.0, gamma2 = 0.0, gamma4 = 0.0;
  std::uint64_t seed = 0;
  bool normalize_init = true;
  InitKind init = InitKind::Random;
  double init_energy = 1.0;  // target kinetic energy of a normalized random state
  double init_scale = 0.0;   // spectral decay scale of the random state; 0 selects n/8
  std::filesystem::path bc_f_file, bc_g_file;  // empty: zero potential
  std::filesystem::path output_dir = ".";
  std::int64_t energy_every = 1, snapshot_every = 0, grid_dump_every = 0, checkpoint_every = 0;

  /// Throws InvalidParameter naming the offending key.
  void validate() const;
  /// ⌈t_final/dt⌉, ignoring a relative excess below 1e-9.
  std::int64_t total_steps() const;
  SimParams params() const;
};

/// `key = value` lines with `#` comments. Unknown, duplicate or malformed keys
/// raise LoadError; n, dt, t_final and gamma0 are required. Relative bc paths
/// are resolved against the config file's directory.
SimConfig parse_config(const std::filesystem::path& path);
SimConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = ".");

/// Lines `l m re im` with `#` comments. A missing (l, −m) entry is completed
/// from (l, m) by reality; |m| > l, l > L or a repeated entry is a LoadError
/// naming the line.
SurfaceHarmonicCoeffs read_potential_file(const std::filesystem::path& path, int L);
SurfaceHarmonicCoeffs parse_potentials(std::istream& in, int L, const std::string& source = "<stream>");

inline constexpr std::uint32_t kSnapshotVersion = 1;

/// Byte length of a snapshot of size n.
std::uint64_t snapshot_size(int n);

/// Writes atomically through a temporary file in the same directory.
void write_snapshot(const FlowState& state, const std::filesystem::path& path);

/// Throws LoadError on bad magic, version, length, or (when expected_n > 0) an
/// n other than expected_n.
FlowState read_snapshot(const std::filesystem::path& path, int expected_n = 0);

BoundaryPotentials load_potentials(const SimConfig& config);

/// Initial state selected by config.init.
FlowState initial_state(const SimConfig& config);

std::filesystem::path snapshot_path(const SimConfig& config, std::int64_t step);

/// Writes x,y,z,vx,vy,vz on the nodes with r >= 0 of the grid on which the
/// velocity is represented exactly.
void write_grid_dump(const FlowState& state, const std::filesystem::path& path);

struct RunResult {
  int status = 0;  // 0 on success
  FlowState final_state;
  std::string error;
};

/// Advances `start` to step total_steps(), writing energy.csv (appended when
/// resuming), snapshots, grid dumps and checkpoints into output_dir. The final
/// state is always checkpointed; on a solver error the last good state is
/// checkpointed and status is 2.
RunResult run_simulation(const SimConfig& config, FlowState start, std::ostream& log);

}  // namespace ballns
