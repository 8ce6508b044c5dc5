#pragma once

namespace coopstyle::algo {

struct AlgoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip_ratio = 0.2;
  double target_kl = 0.01;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  int steps_per_epoch = 4000;
  double alpha = 0.2;
  int actor_iters = 80;
  int critic_iters = 80;
  double disc_lr = 1e-3;
  int disc_iters = 40;

  /// Throws ConfigError when a field is out of its valid domain.
  void validate() const;

  bool operator==(const AlgoConfig&) const = default;
};

}  // namespace coopstyle::algo
