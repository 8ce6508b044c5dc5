#include "coopstyle/nn/adam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "coopstyle/error.hpp"
#include "coopstyle/nn/gaussian.hpp"

namespace coopstyle::nn {

double gaussian_logprob(std::span<const double> mean, std::span<const double> log_std,
                        std::span<const double> action) {
  if (mean.size() != log_std.size() || mean.size() != action.size()) {
    throw ConfigError("gaussian_logprob: length mismatch");
  }
  constexpr double half_log_2pi = 0.91893853320467274178;
  double sum = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double u = (action[i] - mean[i]) * std::exp(-log_std[i]);
    sum += -0.5 * u * u - log_std[i] - half_log_2pi;
  }
  return sum;
}

void gaussian_logprob_grad(std::span<const double> mean, std::span<const double> log_std,
                           std::span<const double> action, std::span<double> d_mean,
                           std::span<double> d_log_std) {
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double inv_sigma = std::exp(-log_std[i]);
    const double u = (action[i] - mean[i]) * inv_sigma;
    d_mean[i] = u * inv_sigma;
    d_log_std[i] = u * u - 1.0;
  }
}

void clamp_log_std(std::span<double> log_std, double lo, double hi) {
  for (double& v : log_std) v = std::clamp(v, lo, hi);
}

namespace {

void check_same_shape(const ParamSet& a, const ParamSet& b) {
  bool ok = a.layers.size() == b.layers.size() && a.log_std.size() == b.log_std.size();
  for (std::size_t k = 0; ok && k < a.layers.size(); ++k) {
    ok = a.layers[k].weight.size() == b.layers[k].weight.size() &&
         a.layers[k].bias.size() == b.layers[k].bias.size();
  }
  if (!ok) throw ConfigError("adam_step: parameter and gradient shapes differ");
}

}  // namespace

void adam_step(AdamState& state, ParamSet& params, const ParamSet& grads) {
  check_same_shape(params, grads);
  check_same_shape(params, state.first_moment);
  check_same_shape(params, state.second_moment);
  if (!grads.all_finite()) throw NumericError("adam_step: non-finite gradient at step " + std::to_string(state.step));

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);

  auto update = [&](std::span<double> p, std::span<const double> g, std::span<double> m,
                    std::span<double> v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  };
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    auto& l = params.layers[k];
    const auto& gl = grads.layers[k];
    update(l.weight, gl.weight, state.first_moment.layers[k].weight, state.second_moment.layers[k].weight);
    update(l.bias, gl.bias, state.first_moment.layers[k].bias, state.second_moment.layers[k].bias);
  }
  update(params.log_std, grads.log_std, state.first_moment.log_std, state.second_moment.log_std);
}

}  // namespace coopstyle::nn
