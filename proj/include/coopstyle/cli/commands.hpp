#pragma once

// Subcommands of the coopstyle tool. Exit codes: 0 success, 1 runtime
// failure, 2 usage or configuration error.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "coopstyle/evalx/cross_eval.hpp"
#include "coopstyle/nn/checkpoint.hpp"
#include "coopstyle/styles/style_sampler.hpp"

namespace coopstyle::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv (argv[0] is the program name) and dispatches.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct ProbeRow {
  styles::LatentStyle z;
  bool corner = false;
  double final_head_offset = 0.0;
  double final_pitch = 0.0;
  double ret = 0.0;
};

/// One deterministic episode per z: a k x k grid over [-0.9, 0.9]^2 in
/// row-major order, then the corners (0.9, 0.9), (-0.9, 0.9), (0.9, -0.9),
/// (-0.9, -0.9). Throws InputError for a latent-free care-receiver.
std::vector<ProbeRow> probe_styles(const nn::Checkpoint& ckpt, int grid, const env::EnvConfig& env = {});
std::string probe_csv(const std::vector<ProbeRow>& rows);

/// Either the checkpoint files (*.txt) directly inside `dir`, or
/// <subdir>/final.txt for each subdirectory when there are none. Sorted by
/// label. Throws InputError when `dir` does not exist.
std::vector<evalx::LabeledCheckpoint> discover_checkpoints(const std::filesystem::path& dir);

}  // namespace coopstyle::cli
