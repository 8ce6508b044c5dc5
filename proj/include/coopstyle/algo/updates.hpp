#pragma once

#include <vector>

#include "coopstyle/algo/config.hpp"
#include "coopstyle/algo/policy.hpp"
#include "coopstyle/nn/batch.hpp"

namespace coopstyle::algo {

/// Rows per gradient partition. Partition sums are combined in partition
/// order, so gradients do not depend on how many workers evaluate them.
inline constexpr std::size_t kGradientChunkRows = 500;

struct ActorBatch {
  nn::Matrix inputs;    // obs (++ z)
  nn::Matrix actions;   // unclamped sampled actions
  std::vector<double> old_logp;
  std::vector<double> advantages;  // already normalized
};

struct ActorUpdateStats {
  int iterations = 0;      // gradient steps taken
  double first_kl = 0.0;   // KL measured before the first step
  double final_kl = 0.0;   // KL of the returned parameters
  double loss_before = 0.0;
  double loss_after = 0.0;
};

/// Full-batch Adam ascent on the mean clipped surrogate. Stops after
/// cfg.actor_iters steps or as soon as the measured KL exceeds
/// 1.5 * cfg.target_kl. Throws NumericError on a non-finite loss.
ActorUpdateStats update_actor(AgentPolicy& policy, const ActorBatch& batch, const AlgoConfig& cfg);

/// Gradient of the mean clipped surrogate with respect to actor parameters
/// (ascent direction). Exposed for tests.
nn::ParamSet surrogate_gradient(const AgentPolicy& policy, const ActorBatch& batch, double clip);

struct CriticBatch {
  nn::Matrix inputs;
  std::vector<double> returns;
};

struct CriticUpdateStats {
  double loss_before = 0.0;
  double loss_after = 0.0;
};

/// cfg.critic_iters full-batch Adam steps on the mean squared error.
/// Throws InputError on an empty batch.
CriticUpdateStats update_critic(AgentPolicy& policy, const CriticBatch& batch, const AlgoConfig& cfg);

double critic_loss(const AgentPolicy& policy, const CriticBatch& batch);

struct DiscBatch {
  nn::Matrix state_action;  // s_r ++ a_r
  nn::Matrix z;
};

struct DiscUpdateStats {
  double loglik_before = 0.0;
  double loglik_after = 0.0;  // mean log q(z | s, a) of the returned parameters
};

/// `iters` full-batch Adam ascent steps on the mean log-likelihood of z.
DiscUpdateStats update_discriminator(Discriminator& disc, const DiscBatch& batch, int iters);

double mean_loglik(const Discriminator& disc, const DiscBatch& batch);

}  // namespace coopstyle::algo
