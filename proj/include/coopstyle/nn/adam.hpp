#pragma once

#include <cstdint>

#include "coopstyle/nn/param_set.hpp"

namespace coopstyle::nn {

struct AdamState {
  ParamSet first_moment;
  ParamSet second_moment;
  std::int64_t step = 0;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(const ParamSet& like, double lr)
      : first_moment(like.zeros_like()), second_moment(like.zeros_like()), learning_rate(lr) {}

  bool operator==(const AdamState&) const = default;
};

/// Bias-corrected Adam descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
/// Throws NumericError (leaving params and state untouched) if any gradient is
/// non-finite, ConfigError on shape mismatch.
void adam_step(AdamState& state, ParamSet& params, const ParamSet& grads);

}  // namespace coopstyle::nn
