#pragma once

#include <span>
#include <vector>

namespace coopstyle::algo {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// values carries one trailing bootstrap entry (0 at a true episode end).
/// delta_t = r_t + gamma v_{t+1} - v_t, A_t = sum_l (gamma lambda)^l delta_{t+l},
/// returns_t = A_t + v_t.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, double gamma,
                      double lambda);

/// min(ratio * A, clip(ratio, 1 - c, 1 + c) * A).
double clip_surrogate(double ratio, double advantage, double clip);

/// Sample estimate of KL(old || new): mean(old_logp - new_logp).
double approx_kl(std::span<const double> old_logp, std::span<const double> new_logp);

/// In-place shift to zero mean and scale to unit (population) variance.
void normalize_advantages(std::span<double> adv);

}  // namespace coopstyle::algo
