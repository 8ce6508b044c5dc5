#pragma once

#include <span>
#include <vector>

namespace coopstyle::nn {

inline constexpr double kPolicyLogStdMin = -5.0;
inline constexpr double kPolicyLogStdMax = 2.0;
inline constexpr double kInitialLogStd = -0.5;

/// Sum over dimensions of the diagonal-Gaussian log density.
double gaussian_logprob(std::span<const double> mean, std::span<const double> log_std,
                        std::span<const double> action);

/// Partial derivatives of gaussian_logprob with respect to mean and log_std,
/// written into d_mean and d_log_std (overwritten).
void gaussian_logprob_grad(std::span<const double> mean, std::span<const double> log_std,
                           std::span<const double> action, std::span<double> d_mean,
                           std::span<double> d_log_std);

void clamp_log_std(std::span<double> log_std, double lo = kPolicyLogStdMin, double hi = kPolicyLogStdMax);

}  // namespace coopstyle::nn
