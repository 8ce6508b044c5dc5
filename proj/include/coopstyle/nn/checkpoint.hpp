#pragma once

// Plain-text checkpoint document shared by the trainer, evaluator and CLI.
//
//   coopstyle_checkpoint
//   format_version 1
//   meta <key> <value>
//   network <role> layers <L> log_std <K>
//   layer <k> <out> <in>
//   w <in values>            (one line per output row)
//   b <out values>
//   log_std <K values>       (only when K > 0)
//   adam <role> step <t> lr <lr> beta1 <b1> beta2 <b2> eps <e>
//   moment first  + network body      moment second + network body
//   array <name> <rows> <cols>
//   r <cols values>          (one line per row)
//   end
//
// Reals are written with 17 significant digits, so save/load is bit-exact.

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coopstyle/nn/adam.hpp"
#include "coopstyle/nn/batch.hpp"
#include "coopstyle/nn/param_set.hpp"

namespace coopstyle::nn {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, ParamSet>> networks;
  std::vector<std::pair<std::string, AdamState>> optimizers;
  std::vector<std::pair<std::string, Matrix>> arrays;

  void set_meta(std::string key, std::string value);
  /// Throws InputError when absent.
  const std::string& meta_value(std::string_view key) const;
  bool has_meta(std::string_view key) const;

  const ParamSet& network(std::string_view role) const;
  bool has_network(std::string_view role) const;
  const AdamState& optimizer(std::string_view role) const;
  bool has_optimizer(std::string_view role) const;
  const Matrix& array(std::string_view name) const;
  bool has_array(std::string_view name) const;

  bool operator==(const Checkpoint&) const = default;
};

std::string format_real(double v);

std::string to_text(const Checkpoint& ckpt);
/// Throws InputError with the offending line number on malformed input.
Checkpoint from_text(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a over the text form of all networks; identifies a checkpoint's
/// policies independently of file name.
std::uint64_t content_id(const Checkpoint& ckpt);

}  // namespace coopstyle::nn
