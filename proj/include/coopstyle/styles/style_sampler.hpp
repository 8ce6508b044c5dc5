#pragma once

#include <array>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "coopstyle/algo/policy.hpp"
#include "coopstyle/nn/batch.hpp"

namespace coopstyle::styles {

inline constexpr std::size_t kLatentDim = 2;

/// Care-receiver behavior style, componentwise in [-1, 1]; fixed per episode.
struct LatentStyle {
  std::array<double, kLatentDim> z{0.0, 0.0};

  bool in_box() const;
  bool operator==(const LatentStyle&) const = default;
};

struct StyleSamplerConfig {
  double epsilon = 0.5;
  int candidates = 100;   // M
  int state_batch = 256;  // N

  void validate() const;
  bool operator==(const StyleSamplerConfig&) const = default;
};

/// Scores a set of candidate styles: value[j] = mean over the states of
/// V(s ++ z_j). Any latent-conditioned critic fits this shape.
using StyleScorer = std::function<std::vector<double>(const nn::Matrix& states, std::span<const LatentStyle>)>;

/// Scorer backed by a care-receiver critic.
StyleScorer critic_scorer(const algo::AgentPolicy& receiver);

LatentStyle sample_uniform(std::mt19937_64& rng);

struct AdversarialPick {
  LatentStyle style;
  std::size_t index = 0;            // position in the candidate list
  double mean_value = 0.0;          // mean value of the chosen candidate
  std::vector<LatentStyle> candidates;
  std::vector<double> values;
};

/// Argmin over an explicit candidate list; ties resolve to the lowest index.
AdversarialPick pick_min_value(const StyleScorer& scorer, const nn::Matrix& states,
                               std::vector<LatentStyle> candidates);

/// Draws M uniform candidates and returns the one with the lowest mean
/// value over `states`. Throws InputError when `states` is empty.
AdversarialPick sample_adversarial(const StyleScorer& scorer, const nn::Matrix& states, int candidates,
                                   std::mt19937_64& rng);

struct StyleChoice {
  LatentStyle style;
  bool adversarial = false;
  double mean_value = 0.0;  // only meaningful when adversarial
};

/// Epsilon-greedy mix: with probability epsilon and a non-empty pool, the
/// adversarial pick over N pool states (drawn without replacement, or with
/// replacement when the pool holds fewer than N rows); otherwise uniform.
StyleChoice sample_style(const StyleSamplerConfig& cfg, const StyleScorer& scorer, const nn::Matrix& state_pool,
                         std::mt19937_64& rng);

}  // namespace coopstyle::styles
