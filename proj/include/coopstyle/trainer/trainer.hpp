#pragma once

// Co-optimization loop: for every epoch, collect 20 full episodes with a
// per-episode care-receiver style, then update the care-receiver (LPPO or
// PPO) followed by the caregiver (PPO), and empty the buffers.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coopstyle/algo/config.hpp"
#include "coopstyle/algo/policy.hpp"
#include "coopstyle/algo/updates.hpp"
#include "coopstyle/env/feeding_env.hpp"
#include "coopstyle/nn/batch.hpp"
#include "coopstyle/nn/checkpoint.hpp"
#include "coopstyle/styles/style_sampler.hpp"

namespace coopstyle::trainer {

enum class Variant { PpoPpo, PpoLppo, PpoLppoAdv };

std::string_view variant_name(Variant v);
/// Accepts "PPO-PPO", "PPO-LPPO", "PPO-LPPO-adv"; throws ConfigError otherwise.
Variant parse_variant(std::string_view name);
std::size_t variant_latent_dim(Variant v);
double variant_default_epsilon(Variant v);

struct RunConfig {
  std::uint64_t seed = 0;
  int epochs = 150;
  int checkpoint_every = 25;
  Variant variant = Variant::PpoLppoAdv;
  algo::AlgoConfig algo;
  styles::StyleSamplerConfig styles;
  env::EnvConfig env;
  std::filesystem::path out_dir;

  /// Field domains plus the variant contract: epsilon must be 0 for PPO-PPO
  /// and PPO-LPPO, positive for PPO-LPPO-adv; steps_per_epoch must be a
  /// whole number of episodes.
  void validate() const;
  std::size_t latent_dim() const { return variant_latent_dim(variant); }
  int episodes_per_epoch() const { return algo.steps_per_epoch / env.episode_len; }

  bool operator==(const RunConfig&) const = default;
};

/// One agent's on-policy storage for an epoch.
struct AgentTrack {
  nn::Matrix obs;
  nn::Matrix next_obs;
  nn::Matrix act;  // unclamped sampled actions
  std::vector<double> logp;
  std::vector<double> rew;
  std::vector<double> val;

  std::size_t size() const { return rew.size(); }
};

struct EpochBuffer {
  AgentTrack caregiver;
  AgentTrack receiver;
  nn::Matrix receiver_z;  // rows x latent_dim; zero columns without a latent
  std::vector<std::size_t> episode_starts;

  std::size_t size() const { return caregiver.size(); }
  bool empty() const { return size() == 0; }
  void clear();
};

struct EpisodeStats {
  double ret = 0.0;  // undiscounted environment return
  styles::LatentStyle style;
  bool adversarial = false;
  double selected_value = 0.0;
};

struct EpochMetrics {
  int epoch = 0;  // 1-based index of the completed epoch
  long long env_steps = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double actor_kl_g = 0.0;
  int actor_iters_g = 0;
  double actor_kl_r = 0.0;
  int actor_iters_r = 0;
  double critic_loss_g = 0.0;
  double critic_loss_r = 0.0;
  std::optional<double> disc_loglik;
  double adv_fraction = 0.0;
  std::optional<double> mean_selected_value;
};

struct TrainerState {
  RunConfig cfg;
  algo::AgentPolicy caregiver;
  algo::AgentPolicy receiver;
  std::optional<algo::Discriminator> disc;
  nn::Matrix style_pool;  // care-receiver observations of the previous epoch
  int epochs_done = 0;
};

TrainerState init_trainer(const RunConfig& cfg);

/// Deterministic seed for an independent random stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

struct CollectResult {
  EpochBuffer buffer;
  std::vector<EpisodeStats> episodes;
};

/// Runs episodes_per_epoch full episodes. Episode i of epoch e draws all its
/// randomness from derive_seed(seed, e, i); episodes are gathered in index
/// order, so the result is independent of the worker count.
CollectResult collect_epoch(const TrainerState& state, int epoch_index);

struct UpdateStats {
  algo::ActorUpdateStats actor_g;
  algo::ActorUpdateStats actor_r;
  double critic_loss_g = 0.0;
  double critic_loss_r = 0.0;
  std::optional<double> disc_loglik;
  // Care-receiver advantages before normalization; exposed for tests.
  std::vector<double> receiver_raw_advantages;
  std::vector<double> receiver_rewards_used;
  std::vector<double> caregiver_rewards_used;
};

/// Discriminator step, MI bonus on care-receiver rewards, GAE per episode with
/// a zero bootstrap, care-receiver then caregiver actor/critic updates; then
/// the buffer is emptied and its care-receiver states become the style pool.
UpdateStats update_agents(TrainerState& state, EpochBuffer& buffer);

/// One collect + update cycle.
EpochMetrics run_epoch(TrainerState& state);

nn::Checkpoint to_checkpoint(const TrainerState& state);
/// Restores policies, optimizers, style pool and epoch counter. `cfg` must
/// describe the same variant as the checkpoint.
TrainerState from_checkpoint(const nn::Checkpoint& ckpt, const RunConfig& cfg);

/// Rebuilds one agent ("caregiver" or "receiver") from a checkpoint.
algo::AgentPolicy policy_from_checkpoint(const nn::Checkpoint& ckpt, std::string_view agent);

std::string metrics_header();
std::string metrics_row(const EpochMetrics& m);

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  std::filesystem::path final_checkpoint;
};

/// Runs cfg.epochs epochs (minus those already completed when resuming),
/// appending one metrics.csv row per epoch and writing ckpt_epoch_NNNN.txt
/// every cfg.checkpoint_every epochs plus final.txt at the end.
TrainResult train(const RunConfig& cfg, const std::optional<std::filesystem::path>& resume_from = std::nullopt);

}  // namespace coopstyle::trainer
