#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "coopstyle/algo/config.hpp"
#include "coopstyle/nn/adam.hpp"
#include "coopstyle/nn/batch.hpp"
#include "coopstyle/nn/param_set.hpp"

namespace coopstyle::algo {

/// Gaussian actor and state-value critic for one agent. When latent_dim > 0
/// both networks read the observation concatenated with the latent style.
struct AgentPolicy {
  nn::ParamSet actor;   // carries log_std
  nn::ParamSet critic;
  nn::AdamState actor_opt;
  nn::AdamState critic_opt;
  std::size_t obs_dim = 0;
  std::size_t latent_dim = 0;
  std::size_t action_dim = 0;

  /// Hidden sizes (64, 64) without a latent input, (128, 64) with one.
  static AgentPolicy create(std::size_t obs_dim, std::size_t latent_dim, std::size_t action_dim,
                            const AlgoConfig& cfg, std::mt19937_64& rng);

  std::size_t input_dim() const { return obs_dim + latent_dim; }

  /// obs ++ z, validating both lengths.
  std::vector<double> make_input(std::span<const double> obs, std::span<const double> z) const;

  /// Throws ConfigError unless both networks match obs_dim + latent_dim.
  void validate() const;

  bool operator==(const AgentPolicy&) const = default;
};

struct ActionSample {
  std::vector<double> action;  // unclamped Gaussian draw
  double logp = 0.0;
};

/// Mean action for a single input (batch path, one row).
std::vector<double> policy_mean(const AgentPolicy& policy, std::span<const double> input);
ActionSample policy_sample(const AgentPolicy& policy, std::span<const double> input, std::mt19937_64& rng);
double critic_value(const AgentPolicy& policy, std::span<const double> input);

/// log pi(a_i | x_i) for every row.
std::vector<double> policy_logp_batch(const AgentPolicy& policy, const nn::Matrix& inputs,
                                      const nn::Matrix& actions);
std::vector<double> critic_values_batch(const AgentPolicy& policy, const nn::Matrix& inputs);

inline constexpr double kDiscLogStdMin = -4.0;
inline constexpr double kDiscLogStdMax = 1.0;

/// Variational posterior q(z | s, a): a tanh MLP (64, 64) emitting the mean
/// and log standard deviation of a diagonal Gaussian over z.
struct Discriminator {
  nn::ParamSet net;
  nn::AdamState opt;
  std::size_t latent_dim = 0;

  static Discriminator create(std::size_t state_action_dim, std::size_t latent_dim, double lr,
                              std::mt19937_64& rng);

  std::size_t input_dim() const { return net.input_dim(); }

  bool operator==(const Discriminator&) const = default;
};

/// log q(z | s ++ a) for one sample.
double disc_loglik(const Discriminator& disc, std::span<const double> state_action, std::span<const double> z);
std::vector<double> disc_loglik_batch(const Discriminator& disc, const nn::Matrix& state_action,
                                      const nn::Matrix& z);

/// alpha * log q(z_r | s_r, a_r).
double mi_bonus(const Discriminator& disc, std::span<const double> s_r, std::span<const double> a_r,
                std::span<const double> z_r, double alpha);

}  // namespace coopstyle::algo
