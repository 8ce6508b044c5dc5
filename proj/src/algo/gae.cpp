#include "coopstyle/algo/gae.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coopstyle/algo/config.hpp"
#include "coopstyle/error.hpp"

namespace coopstyle::algo {

void AlgoConfig::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(gamma)) throw ConfigError("algo.gamma must lie in [0, 1]");
  if (!in_unit(lambda)) throw ConfigError("algo.lambda must lie in [0, 1]");
  if (!(clip_ratio > 0.0 && clip_ratio < 1.0)) throw ConfigError("algo.clip_ratio must lie in (0, 1)");
  if (!(target_kl > 0.0)) throw ConfigError("algo.target_kl must be positive");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0) || !(disc_lr > 0.0)) {
    throw ConfigError("algo learning rates must be positive");
  }
  if (steps_per_epoch <= 0) throw ConfigError("algo.steps_per_epoch must be positive");
  if (!(alpha >= 0.0)) throw ConfigError("algo.alpha must be non-negative");
  if (actor_iters < 0 || critic_iters < 0 || disc_iters < 0) {
    throw ConfigError("algo iteration counts must be non-negative");
  }
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, double gamma,
                      double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n + 1) {
    throw InputError("compute_gae: expected " + std::to_string(n + 1) + " values, got " +
                     std::to_string(values.size()));
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double delta = rewards[t] + gamma * values[t + 1] - values[t];
    running = delta + gamma * lambda * running;
    out.advantages[t] = running;
    out.returns[t] = running + values[t];
  }
  return out;
}

double clip_surrogate(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

double approx_kl(std::span<const double> old_logp, std::span<const double> new_logp) {
  if (old_logp.size() != new_logp.size()) throw InputError("approx_kl: length mismatch");
  if (old_logp.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < old_logp.size(); ++i) sum += old_logp[i] - new_logp[i];
  return sum / static_cast<double>(old_logp.size());
}

void normalize_advantages(std::span<double> adv) {
  if (adv.empty()) return;
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= static_cast<double>(adv.size());
  const double inv = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& a : adv) a = (a - mean) * inv;
}

}  // namespace coopstyle::algo
