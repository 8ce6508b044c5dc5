#include "coopstyle/algo/policy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "coopstyle/error.hpp"
#include "coopstyle/nn/gaussian.hpp"

namespace coopstyle::algo {

AgentPolicy AgentPolicy::create(std::size_t obs_dim, std::size_t latent_dim, std::size_t action_dim,
                                const AlgoConfig& cfg, std::mt19937_64& rng) {
  AgentPolicy p;
  p.obs_dim = obs_dim;
  p.latent_dim = latent_dim;
  p.action_dim = action_dim;
  const std::size_t in = obs_dim + latent_dim;
  const std::size_t h1 = latent_dim == 0 ? 64 : 128;
  const std::array<std::size_t, 4> actor_sizes{in, h1, 64, action_dim};
  const std::array<std::size_t, 4> critic_sizes{in, h1, 64, 1};
  p.actor = nn::make_mlp(actor_sizes, rng);
  p.actor.log_std.assign(action_dim, nn::kInitialLogStd);
  p.critic = nn::make_mlp(critic_sizes, rng);
  p.actor_opt = nn::AdamState(p.actor, cfg.actor_lr);
  p.critic_opt = nn::AdamState(p.critic, cfg.critic_lr);
  return p;
}

void AgentPolicy::validate() const {
  actor.validate();
  critic.validate();
  if (actor.input_dim() != input_dim() || critic.input_dim() != input_dim()) {
    throw ConfigError("policy networks expect " + std::to_string(input_dim()) + " inputs");
  }
  if (actor.output_dim() != action_dim || actor.log_std.size() != action_dim) {
    throw ConfigError("actor output does not match the action dimension");
  }
  if (critic.output_dim() != 1) throw ConfigError("critic must have a single output");
}

std::vector<double> AgentPolicy::make_input(std::span<const double> obs, std::span<const double> z) const {
  if (obs.size() != obs_dim) {
    throw InputError("observation length " + std::to_string(obs.size()) + " != " + std::to_string(obs_dim));
  }
  if (z.size() != latent_dim) {
    throw InputError("latent length " + std::to_string(z.size()) + " != " + std::to_string(latent_dim));
  }
  std::vector<double> x(obs.begin(), obs.end());
  x.insert(x.end(), z.begin(), z.end());
  return x;
}

namespace {

nn::Matrix single_row(std::span<const double> v) {
  nn::Matrix m(1, v.size());
  std::copy(v.begin(), v.end(), m.data.begin());
  return m;
}

}  // namespace

std::vector<double> policy_mean(const AgentPolicy& policy, std::span<const double> input) {
  return nn::forward_batch(policy.actor, single_row(input)).data;
}

ActionSample policy_sample(const AgentPolicy& policy, std::span<const double> input, std::mt19937_64& rng) {
  const auto mean = policy_mean(policy, input);
  std::normal_distribution<double> normal(0.0, 1.0);
  ActionSample s;
  s.action.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) s.action[i] = mean[i] + std::exp(policy.actor.log_std[i]) * normal(rng);
  s.logp = nn::gaussian_logprob(mean, policy.actor.log_std, s.action);
  return s;
}

double critic_value(const AgentPolicy& policy, std::span<const double> input) {
  return nn::forward_batch(policy.critic, single_row(input)).data[0];
}

std::vector<double> policy_logp_batch(const AgentPolicy& policy, const nn::Matrix& inputs,
                                      const nn::Matrix& actions) {
  const nn::Matrix mean = nn::forward_batch(policy.actor, inputs);
  if (actions.rows != inputs.rows || actions.cols != mean.cols) throw InputError("action batch shape mismatch");
  std::vector<double> out(inputs.rows);
  for (std::size_t i = 0; i < inputs.rows; ++i) {
    out[i] = nn::gaussian_logprob(mean.row(i), policy.actor.log_std, actions.row(i));
  }
  return out;
}

std::vector<double> critic_values_batch(const AgentPolicy& policy, const nn::Matrix& inputs) {
  return nn::forward_batch(policy.critic, inputs).data;
}

Discriminator Discriminator::create(std::size_t state_action_dim, std::size_t latent_dim, double lr,
                                    std::mt19937_64& rng) {
  Discriminator d;
  d.latent_dim = latent_dim;
  const std::array<std::size_t, 4> sizes{state_action_dim, 64, 64, 2 * latent_dim};
  d.net = nn::make_mlp(sizes, rng);
  d.opt = nn::AdamState(d.net, lr);
  return d;
}

namespace {

double posterior_loglik(std::span<const double> out, std::span<const double> z, std::size_t k) {
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double ls = std::clamp(out[k + j], kDiscLogStdMin, kDiscLogStdMax);
    const double mean = out[j];
    sum += nn::gaussian_logprob(std::span<const double>(&mean, 1), std::span<const double>(&ls, 1), z.subspan(j, 1));
  }
  return sum;
}

}  // namespace

double disc_loglik(const Discriminator& disc, std::span<const double> state_action, std::span<const double> z) {
  if (z.size() != disc.latent_dim) throw InputError("latent length does not match discriminator");
  const auto out = nn::forward_batch(disc.net, single_row(state_action));
  return posterior_loglik(out.data, z, disc.latent_dim);
}

std::vector<double> disc_loglik_batch(const Discriminator& disc, const nn::Matrix& state_action,
                                      const nn::Matrix& z) {
  if (z.rows != state_action.rows || z.cols != disc.latent_dim) throw InputError("latent batch shape mismatch");
  const nn::Matrix out = nn::forward_batch(disc.net, state_action);
  std::vector<double> ll(z.rows);
  for (std::size_t i = 0; i < z.rows; ++i) ll[i] = posterior_loglik(out.row(i), z.row(i), disc.latent_dim);
  return ll;
}

double mi_bonus(const Discriminator& disc, std::span<const double> s_r, std::span<const double> a_r,
                std::span<const double> z_r, double alpha) {
  if (alpha == 0.0) return 0.0;
  std::vector<double> sa(s_r.begin(), s_r.end());
  sa.insert(sa.end(), a_r.begin(), a_r.end());
  return alpha * disc_loglik(disc, sa, z_r);
}

}  // namespace coopstyle::algo
