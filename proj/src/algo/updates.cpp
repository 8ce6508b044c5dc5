#include "coopstyle/algo/updates.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "coopstyle/algo/gae.hpp"
#include "coopstyle/error.hpp"
#include "coopstyle/nn/gaussian.hpp"
#include "coopstyle/parallel.hpp"

namespace coopstyle::algo {
namespace {

struct Chunk {
  std::size_t begin = 0;
  std::size_t end = 0;
  nn::Matrix inputs;
  nn::ForwardCache cache;
};

std::vector<Chunk> make_chunks(const nn::Matrix& inputs) {
  std::vector<Chunk> chunks;
  for (std::size_t b = 0; b < inputs.rows; b += kGradientChunkRows) {
    Chunk c;
    c.begin = b;
    c.end = std::min(inputs.rows, b + kGradientChunkRows);
    c.inputs = nn::slice_rows(inputs, c.begin, c.end);
    chunks.push_back(std::move(c));
  }
  return chunks;
}

void forward_chunks(const nn::ParamSet& params, std::vector<Chunk>& chunks) {
  parallel_for(chunks.size(), [&](std::size_t i) { nn::forward_batch(params, chunks[i].inputs, chunks[i].cache); });
}

/// Network-parameter gradient of sum_rows <upstream_row, output_row>, summed
/// partition by partition in index order.
nn::ParamSet backward_chunks(const nn::ParamSet& params, const std::vector<Chunk>& chunks,
                             const nn::Matrix& upstream) {
  std::vector<nn::ParamSet> partial(chunks.size());
  parallel_for(chunks.size(), [&](std::size_t i) {
    partial[i] = params.zeros_like();
    const nn::Matrix up = nn::slice_rows(upstream, chunks[i].begin, chunks[i].end);
    nn::backward_batch(params, chunks[i].cache, up, partial[i]);
  });
  nn::ParamSet total = params.zeros_like();
  for (const auto& p : partial) nn::add_scaled(total, p);
  return total;
}

struct SurrogateEval {
  std::vector<double> logp;
  double kl = 0.0;
  double loss = 0.0;  // negative mean surrogate
};

SurrogateEval evaluate_surrogate(const AgentPolicy& policy, std::vector<Chunk>& chunks, const ActorBatch& batch,
                                 double clip) {
  forward_chunks(policy.actor, chunks);
  SurrogateEval ev;
  ev.logp.resize(batch.inputs.rows);
  for (const auto& c : chunks) {
    const nn::Matrix& mean = c.cache.output();
    for (std::size_t r = 0; r < mean.rows; ++r) {
      ev.logp[c.begin + r] = nn::gaussian_logprob(mean.row(r), policy.actor.log_std, batch.actions.row(c.begin + r));
    }
  }
  ev.kl = approx_kl(batch.old_logp, ev.logp);
  double sum = 0.0;
  for (std::size_t i = 0; i < ev.logp.size(); ++i) {
    sum += clip_surrogate(std::exp(ev.logp[i] - batch.old_logp[i]), batch.advantages[i], clip);
  }
  ev.loss = -sum / static_cast<double>(ev.logp.size());
  return ev;
}

/// Ascent gradient of the mean surrogate, given a completed forward pass.
nn::ParamSet surrogate_grad_from(const AgentPolicy& policy, const std::vector<Chunk>& chunks,
                                 const ActorBatch& batch, const SurrogateEval& ev, double clip) {
  const std::size_t n = batch.inputs.rows;
  const std::size_t k = policy.action_dim;
  const double inv_n = 1.0 / static_cast<double>(n);
  nn::Matrix upstream(n, k);
  std::vector<double> d_log_std(k, 0.0);
  std::vector<double> dm(k);
  std::vector<double> dls(k);
  for (const auto& c : chunks) {
    const nn::Matrix& mean = c.cache.output();
    for (std::size_t r = 0; r < mean.rows; ++r) {
      const std::size_t i = c.begin + r;
      const double ratio = std::exp(ev.logp[i] - batch.old_logp[i]);
      const double adv = batch.advantages[i];
      const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
      // The unclipped branch carries the gradient whenever it is the minimum.
      if (ratio * adv > clipped * adv) continue;
      const double w = ratio * adv * inv_n;  // d surrogate / d logp
      nn::gaussian_logprob_grad(mean.row(r), policy.actor.log_std, batch.actions.row(i), dm, dls);
      for (std::size_t j = 0; j < k; ++j) {
        upstream.at(i, j) = w * dm[j];
        d_log_std[j] += w * dls[j];
      }
    }
  }
  nn::ParamSet grad = backward_chunks(policy.actor, chunks, upstream);
  grad.log_std = std::move(d_log_std);
  return grad;
}

void negate(nn::ParamSet& g) {
  g.for_each_block([](std::span<double> b) {
    for (double& v : b) v = -v;
  });
}

void check_actor_batch(const AgentPolicy& policy, const ActorBatch& batch) {
  const std::size_t n = batch.inputs.rows;
  if (n == 0) throw InputError("update_actor: empty batch");
  if (batch.inputs.cols != policy.input_dim() || batch.actions.rows != n || batch.actions.cols != policy.action_dim ||
      batch.old_logp.size() != n || batch.advantages.size() != n) {
    throw InputError("update_actor: batch shapes do not match the policy");
  }
}

}  // namespace

nn::ParamSet surrogate_gradient(const AgentPolicy& policy, const ActorBatch& batch, double clip) {
  check_actor_batch(policy, batch);
  auto chunks = make_chunks(batch.inputs);
  const auto ev = evaluate_surrogate(policy, chunks, batch, clip);
  return surrogate_grad_from(policy, chunks, batch, ev, clip);
}

ActorUpdateStats update_actor(AgentPolicy& policy, const ActorBatch& batch, const AlgoConfig& cfg) {
  check_actor_batch(policy, batch);
  auto chunks = make_chunks(batch.inputs);
  ActorUpdateStats stats;
  SurrogateEval ev = evaluate_surrogate(policy, chunks, batch, cfg.clip_ratio);
  stats.first_kl = ev.kl;
  stats.loss_before = ev.loss;
  for (int it = 0; it < cfg.actor_iters; ++it) {
    if (!std::isfinite(ev.loss) || !std::isfinite(ev.kl)) {
      std::ostringstream msg;
      msg << "update_actor: non-finite loss " << ev.loss << " (kl " << ev.kl << ") at iteration " << it;
      throw NumericError(msg.str());
    }
    if (ev.kl > 1.5 * cfg.target_kl) break;
    nn::ParamSet grad = surrogate_grad_from(policy, chunks, batch, ev, cfg.clip_ratio);
    negate(grad);
    nn::adam_step(policy.actor_opt, policy.actor, grad);
    nn::clamp_log_std(policy.actor.log_std);
    ++stats.iterations;
    ev = evaluate_surrogate(policy, chunks, batch, cfg.clip_ratio);
  }
  if (!std::isfinite(ev.loss)) throw NumericError("update_actor: non-finite loss after the final step");
  stats.final_kl = ev.kl;
  stats.loss_after = ev.loss;
  return stats;
}

namespace {

void check_critic_batch(const AgentPolicy& policy, const CriticBatch& batch) {
  if (batch.inputs.rows == 0) throw InputError("update_critic: empty batch");
  if (batch.inputs.cols != policy.input_dim() || batch.returns.size() != batch.inputs.rows) {
    throw InputError("update_critic: batch shapes do not match the policy");
  }
  for (double r : batch.returns) {
    if (!std::isfinite(r)) throw InputError("update_critic: non-finite return");
  }
}

double mse_from(const std::vector<Chunk>& chunks, const CriticBatch& batch) {
  double sum = 0.0;
  for (const auto& c : chunks) {
    const auto& out = c.cache.output();
    for (std::size_t r = 0; r < out.rows; ++r) {
      const double e = out.data[r] - batch.returns[c.begin + r];
      sum += e * e;
    }
  }
  return sum / static_cast<double>(batch.returns.size());
}

}  // namespace

double critic_loss(const AgentPolicy& policy, const CriticBatch& batch) {
  check_critic_batch(policy, batch);
  auto chunks = make_chunks(batch.inputs);
  forward_chunks(policy.critic, chunks);
  return mse_from(chunks, batch);
}

CriticUpdateStats update_critic(AgentPolicy& policy, const CriticBatch& batch, const AlgoConfig& cfg) {
  check_critic_batch(policy, batch);
  auto chunks = make_chunks(batch.inputs);
  const std::size_t n = batch.inputs.rows;
  const double scale = 2.0 / static_cast<double>(n);
  CriticUpdateStats stats;
  forward_chunks(policy.critic, chunks);
  stats.loss_before = mse_from(chunks, batch);
  for (int it = 0; it < cfg.critic_iters; ++it) {
    nn::Matrix upstream(n, 1);
    for (const auto& c : chunks) {
      const auto& out = c.cache.output();
      for (std::size_t r = 0; r < out.rows; ++r) {
        upstream.data[c.begin + r] = scale * (out.data[r] - batch.returns[c.begin + r]);
      }
    }
    const nn::ParamSet grad = backward_chunks(policy.critic, chunks, upstream);
    nn::adam_step(policy.critic_opt, policy.critic, grad);
    forward_chunks(policy.critic, chunks);
  }
  stats.loss_after = mse_from(chunks, batch);
  if (!std::isfinite(stats.loss_after)) throw NumericError("update_critic: non-finite loss");
  return stats;
}

namespace {

void check_disc_batch(const Discriminator& disc, const DiscBatch& batch) {
  if (batch.state_action.rows == 0) throw InputError("update_discriminator: empty batch");
  if (batch.state_action.cols != disc.input_dim() || batch.z.rows != batch.state_action.rows ||
      batch.z.cols != disc.latent_dim) {
    throw InputError("update_discriminator: batch shapes do not match the discriminator");
  }
}

double loglik_from(const Discriminator& disc, const std::vector<Chunk>& chunks, const DiscBatch& batch) {
  double sum = 0.0;
  const std::size_t k = disc.latent_dim;
  for (const auto& c : chunks) {
    const auto& out = c.cache.output();
    for (std::size_t r = 0; r < out.rows; ++r) {
      const auto row = out.row(r);
      const auto z = batch.z.row(c.begin + r);
      for (std::size_t j = 0; j < k; ++j) {
        const double ls = std::clamp(row[k + j], kDiscLogStdMin, kDiscLogStdMax);
        const double u = (z[j] - row[j]) * std::exp(-ls);
        sum += -0.5 * u * u - ls - 0.91893853320467274178;
      }
    }
  }
  return sum / static_cast<double>(batch.z.rows);
}

}  // namespace

double mean_loglik(const Discriminator& disc, const DiscBatch& batch) {
  check_disc_batch(disc, batch);
  auto chunks = make_chunks(batch.state_action);
  forward_chunks(disc.net, chunks);
  return loglik_from(disc, chunks, batch);
}

DiscUpdateStats update_discriminator(Discriminator& disc, const DiscBatch& batch, int iters) {
  check_disc_batch(disc, batch);
  auto chunks = make_chunks(batch.state_action);
  const std::size_t n = batch.z.rows;
  const std::size_t k = disc.latent_dim;
  const double inv_n = 1.0 / static_cast<double>(n);
  DiscUpdateStats stats;
  forward_chunks(disc.net, chunks);
  stats.loglik_before = loglik_from(disc, chunks, batch);
  for (int it = 0; it < iters; ++it) {
    // Descent on the negative mean log-likelihood.
    nn::Matrix upstream(n, 2 * k);
    for (const auto& c : chunks) {
      const auto& out = c.cache.output();
      for (std::size_t r = 0; r < out.rows; ++r) {
        const auto row = out.row(r);
        const auto z = batch.z.row(c.begin + r);
        auto up = upstream.row(c.begin + r);
        for (std::size_t j = 0; j < k; ++j) {
          const double raw = row[k + j];
          const double ls = std::clamp(raw, kDiscLogStdMin, kDiscLogStdMax);
          const double inv_sigma = std::exp(-ls);
          const double u = (z[j] - row[j]) * inv_sigma;
          up[j] = -inv_n * u * inv_sigma;
          double g_ls = -inv_n * (u * u - 1.0);
          // The clamp only passes gradients that lead back into the band.
          if ((raw < kDiscLogStdMin && g_ls > 0.0) || (raw > kDiscLogStdMax && g_ls < 0.0)) g_ls = 0.0;
          up[k + j] = g_ls;
        }
      }
    }
    const nn::ParamSet grad = backward_chunks(disc.net, chunks, upstream);
    nn::adam_step(disc.opt, disc.net, grad);
    forward_chunks(disc.net, chunks);
  }
  stats.loglik_after = loglik_from(disc, chunks, batch);
  if (!std::isfinite(stats.loglik_after)) throw NumericError("update_discriminator: non-finite log-likelihood");
  return stats;
}

}  // namespace coopstyle::algo
