#pragma once

// Cross-play robustness evaluation: each caregiver is scored with the
// care-receiver it was trained with ("train") and with every care-receiver
// from an independent set of runs ("test").

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coopstyle/env/feeding_env.hpp"
#include "coopstyle/evalx/welch.hpp"
#include "coopstyle/nn/checkpoint.hpp"
#include "coopstyle/styles/style_sampler.hpp"

namespace coopstyle::evalx {

/// How a latent-conditioned care-receiver picks z during evaluation.
struct ZPolicy {
  std::optional<styles::LatentStyle> fixed;  // nullopt: draw from U(-1, 1)^2 per episode

  /// "prior" or "fixed:[a,b]"; throws ConfigError otherwise.
  static ZPolicy parse(std::string_view text);
  std::string to_string() const;
};

struct EvalOptions {
  int episodes = 10;
  ZPolicy z_policy;
  env::EnvConfig env;
  std::uint64_t seed = 0;
};

/// Undiscounted returns of `episodes` episodes with both agents acting at
/// their mean action. Episode e is seeded from (seed, caregiver content id,
/// receiver content id, e). Throws InputError on dimension mismatch.
std::vector<double> eval_pair(const nn::Checkpoint& caregiver_ckpt, const nn::Checkpoint& receiver_ckpt,
                              const EvalOptions& opts);

struct CellStats {
  std::vector<double> returns;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (0 for fewer than two returns)
};

CellStats summarize(std::vector<double> returns);

struct EvalReport {
  std::string variant;
  std::vector<std::string> caregiver_labels;
  std::vector<std::string> foreign_labels;
  std::vector<CellStats> train;              // per caregiver, with its co-trained receiver
  std::vector<std::vector<CellStats>> test;  // [caregiver][foreign receiver]
  CellStats train_all;                       // pooled per-episode returns
  CellStats test_all;
  double gap = 0.0;  // train_all.mean - test_all.mean
  TTestResult ttest;
  int episodes_per_cell = 0;

  std::size_t test_episode_count() const;
};

/// Pure aggregation from per-episode returns; cross_eval uses it and tests
/// may inject synthetic returns.
EvalReport assemble_report(std::string variant, std::vector<std::string> caregiver_labels,
                           std::vector<std::string> foreign_labels, std::vector<std::vector<double>> train_returns,
                           std::vector<std::vector<std::vector<double>>> test_returns);

struct LabeledCheckpoint {
  std::string label;
  nn::Checkpoint ckpt;
};

/// Requires exactly five variant and five foreign checkpoints.
EvalReport cross_eval(const std::vector<LabeledCheckpoint>& variant_ckpts,
                      const std::vector<LabeledCheckpoint>& foreign_receivers, const EvalOptions& opts);

std::string report_text(const EvalReport& r);
std::string report_json(const EvalReport& r);

inline constexpr std::size_t kCrossEvalSeeds = 5;

}  // namespace coopstyle::evalx
