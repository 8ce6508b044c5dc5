#pragma once

// Run configuration as plain text:
//
//   [run]
//   variant = PPO-LPPO-adv
//   seed = 0
//   [algo]
//   gamma = 0.99
//   ...
//
// '#' starts a comment. Every key has a default; unknown keys and sections
// are rejected with the line number.

#include <set>
#include <string>
#include <string_view>

#include "coopstyle/trainer/trainer.hpp"

namespace coopstyle::cli {

struct ParsedConfig {
  trainer::RunConfig cfg;
  std::set<std::string> explicit_keys;  // "section.key" for every key present in the text

  bool is_explicit(std::string_view qualified_key) const { return explicit_keys.count(std::string(qualified_key)) > 0; }
};

/// Throws ConfigError "line N: key 'k': ..." on any problem. Does not run
/// RunConfig::validate.
ParsedConfig parse_config(std::string_view text);
ParsedConfig load_config(const std::string& path);

/// Every key with its current value; parse_config(emit_config(c)).cfg == c
/// except for out_dir, which is not part of the file.
std::string emit_config(const trainer::RunConfig& cfg);

}  // namespace coopstyle::cli
