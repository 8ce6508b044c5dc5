#include "coopstyle/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "coopstyle/algo/gae.hpp"
#include "coopstyle/algo/updates.hpp"
#include "coopstyle/error.hpp"
#include "coopstyle/parallel.hpp"

namespace coopstyle::trainer {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::PpoPpo:
      return "PPO-PPO";
    case Variant::PpoLppo:
      return "PPO-LPPO";
    case Variant::PpoLppoAdv:
      return "PPO-LPPO-adv";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "PPO-PPO") return Variant::PpoPpo;
  if (name == "PPO-LPPO") return Variant::PpoLppo;
  if (name == "PPO-LPPO-adv") return Variant::PpoLppoAdv;
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected PPO-PPO, PPO-LPPO or PPO-LPPO-adv)");
}

std::size_t variant_latent_dim(Variant v) { return v == Variant::PpoPpo ? 0 : styles::kLatentDim; }

double variant_default_epsilon(Variant v) { return v == Variant::PpoLppoAdv ? 0.5 : 0.0; }

void RunConfig::validate() const {
  algo.validate();
  styles.validate();
  env.validate();
  if (epochs < 0) throw ConfigError("run.epochs must be non-negative");
  if (checkpoint_every < 1) throw ConfigError("run.checkpoint_every must be at least 1");
  if (algo.steps_per_epoch % env.episode_len != 0) {
    throw ConfigError("algo.steps_per_epoch must be a multiple of env.episode_len");
  }
  if (variant != Variant::PpoLppoAdv && styles.epsilon != 0.0) {
    throw ConfigError("variant " + std::string(variant_name(variant)) +
                      " samples styles uniformly and requires styles.epsilon = 0");
  }
  if (variant == Variant::PpoLppoAdv && !(styles.epsilon > 0.0)) {
    throw ConfigError("variant PPO-LPPO-adv requires styles.epsilon > 0");
  }
}

void EpochBuffer::clear() { *this = EpochBuffer{}; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

namespace {

constexpr std::uint64_t kInitStream = 0xC0FFEEULL;

void append_row(nn::Matrix& m, std::span<const double> row) {
  if (m.rows == 0) m.cols = row.size();
  m.data.insert(m.data.end(), row.begin(), row.end());
  ++m.rows;
}

void append_matrix(nn::Matrix& dst, const nn::Matrix& src) {
  if (dst.rows == 0) dst.cols = src.cols;
  dst.data.insert(dst.data.end(), src.data.begin(), src.data.end());
  dst.rows += src.rows;
}

void append_track(AgentTrack& dst, const AgentTrack& src) {
  append_matrix(dst.obs, src.obs);
  append_matrix(dst.next_obs, src.next_obs);
  append_matrix(dst.act, src.act);
  dst.logp.insert(dst.logp.end(), src.logp.begin(), src.logp.end());
  dst.rew.insert(dst.rew.end(), src.rew.begin(), src.rew.end());
}

struct EpisodeData {
  AgentTrack caregiver;
  AgentTrack receiver;
  nn::Matrix z;
  EpisodeStats stats;
};

EpisodeData run_training_episode(const TrainerState& state, int epoch_index, int episode) {
  const RunConfig& cfg = state.cfg;
  std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch_index), static_cast<std::uint64_t>(episode)));
  const std::size_t latent = cfg.latent_dim();

  EpisodeData ep;
  if (latent > 0) {
    styles::StyleScorer scorer;
    if (cfg.styles.epsilon > 0.0) scorer = styles::critic_scorer(state.receiver);
    const auto choice = styles::sample_style(cfg.styles, scorer, state.style_pool, rng);
    ep.stats.style = choice.style;
    ep.stats.adversarial = choice.adversarial;
    ep.stats.selected_value = choice.mean_value;
  }
  const std::span<const double> z = latent > 0 ? std::span<const double>(ep.stats.style.z) : std::span<const double>();

  env::FeedingEnv env(cfg.env);
  env::Observations obs = env.reset(rng());
  ep.z.cols = latent;
  bool done = false;
  while (!done) {
    const auto in_g = state.caregiver.make_input(obs.caregiver, {});
    const auto in_r = state.receiver.make_input(obs.receiver, z);
    const auto sg = algo::policy_sample(state.caregiver, in_g, rng);
    const auto sr = algo::policy_sample(state.receiver, in_r, rng);
    const auto res = env.step({sg.action[0], sg.action[1]}, {sr.action[0], sr.action[1]});

    append_row(ep.caregiver.obs, obs.caregiver);
    append_row(ep.caregiver.next_obs, res.obs.caregiver);
    append_row(ep.caregiver.act, sg.action);
    ep.caregiver.logp.push_back(sg.logp);
    ep.caregiver.rew.push_back(res.reward);

    append_row(ep.receiver.obs, obs.receiver);
    append_row(ep.receiver.next_obs, res.obs.receiver);
    append_row(ep.receiver.act, sr.action);
    ep.receiver.logp.push_back(sr.logp);
    ep.receiver.rew.push_back(res.reward);
    if (latent > 0) append_row(ep.z, z);

    ep.stats.ret += res.reward;
    obs = res.obs;
    done = res.done;
  }
  return ep;
}

nn::Matrix policy_inputs(const nn::Matrix& obs, const nn::Matrix& z) {
  if (z.cols == 0) return obs;
  nn::Matrix out(obs.rows, obs.cols + z.cols);
  for (std::size_t i = 0; i < obs.rows; ++i) {
    auto row = out.row(i);
    std::copy(obs.row(i).begin(), obs.row(i).end(), row.begin());
    std::copy(z.row(i).begin(), z.row(i).end(), row.begin() + static_cast<std::ptrdiff_t>(obs.cols));
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

TrainerState init_trainer(const RunConfig& cfg) {
  cfg.validate();
  TrainerState state;
  state.cfg = cfg;
  std::mt19937_64 rng(derive_seed(cfg.seed, kInitStream));
  state.caregiver = algo::AgentPolicy::create(env::kCaregiverObsDim, 0, env::kActionDim, cfg.algo, rng);
  state.receiver = algo::AgentPolicy::create(env::kReceiverObsDim, cfg.latent_dim(), env::kActionDim, cfg.algo, rng);
  if (cfg.latent_dim() > 0) {
    state.disc = algo::Discriminator::create(env::kReceiverObsDim + env::kActionDim, cfg.latent_dim(),
                                             cfg.algo.disc_lr, rng);
  }
  state.style_pool = nn::Matrix(0, env::kReceiverObsDim);
  return state;
}

CollectResult collect_epoch(const TrainerState& state, int epoch_index) {
  const int n_episodes = state.cfg.episodes_per_epoch();
  std::vector<EpisodeData> episodes(static_cast<std::size_t>(n_episodes));
  parallel_for(episodes.size(), [&](std::size_t i) {
    episodes[i] = run_training_episode(state, epoch_index, static_cast<int>(i));
  });

  CollectResult out;
  EpochBuffer& buf = out.buffer;
  buf.receiver_z.cols = state.cfg.latent_dim();
  for (auto& ep : episodes) {
    buf.episode_starts.push_back(buf.size());
    append_track(buf.caregiver, ep.caregiver);
    append_track(buf.receiver, ep.receiver);
    append_matrix(buf.receiver_z, ep.z);
    buf.receiver_z.cols = state.cfg.latent_dim();
    out.episodes.push_back(ep.stats);
  }
  buf.caregiver.val = algo::critic_values_batch(state.caregiver, buf.caregiver.obs);
  buf.receiver.val = algo::critic_values_batch(state.receiver, policy_inputs(buf.receiver.obs, buf.receiver_z));
  return out;
}

namespace {

struct AgentTargets {
  std::vector<double> advantages;
  std::vector<double> returns;
};

AgentTargets episode_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                         const std::vector<std::size_t>& starts, const algo::AlgoConfig& cfg) {
  AgentTargets t;
  t.advantages.resize(rewards.size());
  t.returns.resize(rewards.size());
  for (std::size_t e = 0; e < starts.size(); ++e) {
    const std::size_t b = starts[e];
    const std::size_t end = e + 1 < starts.size() ? starts[e + 1] : rewards.size();
    std::vector<double> v(values.begin() + static_cast<std::ptrdiff_t>(b), values.begin() + static_cast<std::ptrdiff_t>(end));
    v.push_back(0.0);
    const auto g = algo::compute_gae(std::span<const double>(rewards).subspan(b, end - b), v, cfg.gamma, cfg.lambda);
    std::copy(g.advantages.begin(), g.advantages.end(), t.advantages.begin() + static_cast<std::ptrdiff_t>(b));
    std::copy(g.returns.begin(), g.returns.end(), t.returns.begin() + static_cast<std::ptrdiff_t>(b));
  }
  return t;
}

}  // namespace

UpdateStats update_agents(TrainerState& state, EpochBuffer& buffer) {
  if (buffer.empty()) throw InputError("update_agents: empty buffer");
  const algo::AlgoConfig& acfg = state.cfg.algo;
  UpdateStats stats;

  const nn::Matrix recv_inputs = policy_inputs(buffer.receiver.obs, buffer.receiver_z);
  std::vector<double> recv_rewards = buffer.receiver.rew;
  if (state.disc.has_value()) {
    algo::DiscBatch db;
    db.state_action = policy_inputs(buffer.receiver.obs, buffer.receiver.act);
    db.z = buffer.receiver_z;
    const auto ds = algo::update_discriminator(*state.disc, db, acfg.disc_iters);
    stats.disc_loglik = ds.loglik_after;
    if (acfg.alpha != 0.0) {
      const auto ll = algo::disc_loglik_batch(*state.disc, db.state_action, db.z);
      for (std::size_t i = 0; i < recv_rewards.size(); ++i) recv_rewards[i] += acfg.alpha * ll[i];
    }
  }

  // Care-receiver first, then caregiver.
  {
    const auto values = algo::critic_values_batch(state.receiver, recv_inputs);
    auto targets = episode_gae(recv_rewards, values, buffer.episode_starts, acfg);
    stats.receiver_raw_advantages = targets.advantages;
    algo::normalize_advantages(targets.advantages);
    algo::ActorBatch ab{recv_inputs, buffer.receiver.act, buffer.receiver.logp, std::move(targets.advantages)};
    stats.actor_r = algo::update_actor(state.receiver, ab, acfg);
    algo::CriticBatch cb{recv_inputs, std::move(targets.returns)};
    stats.critic_loss_r = algo::update_critic(state.receiver, cb, acfg).loss_before;
  }
  {
    const nn::Matrix& cg_inputs = buffer.caregiver.obs;
    const auto values = algo::critic_values_batch(state.caregiver, cg_inputs);
    auto targets = episode_gae(buffer.caregiver.rew, values, buffer.episode_starts, acfg);
    algo::normalize_advantages(targets.advantages);
    algo::ActorBatch ab{cg_inputs, buffer.caregiver.act, buffer.caregiver.logp, std::move(targets.advantages)};
    stats.actor_g = algo::update_actor(state.caregiver, ab, acfg);
    algo::CriticBatch cb{cg_inputs, std::move(targets.returns)};
    stats.critic_loss_g = algo::update_critic(state.caregiver, cb, acfg).loss_before;
  }
  stats.receiver_rewards_used = std::move(recv_rewards);
  stats.caregiver_rewards_used = buffer.caregiver.rew;

  state.style_pool = std::move(buffer.receiver.obs);
  buffer.clear();
  return stats;
}

EpochMetrics run_epoch(TrainerState& state) {
  const int epoch_index = state.epochs_done;
  auto collected = collect_epoch(state, epoch_index);
  EpochMetrics m;
  m.epoch = epoch_index + 1;
  m.env_steps = static_cast<long long>(m.epoch) * state.cfg.algo.steps_per_epoch;

  std::vector<double> returns;
  int adv_count = 0;
  double adv_value_sum = 0.0;
  for (const auto& e : collected.episodes) {
    returns.push_back(e.ret);
    if (e.adversarial) {
      ++adv_count;
      adv_value_sum += e.selected_value;
    }
  }
  m.mean_return = mean_of(returns);
  double var = 0.0;
  for (double r : returns) var += (r - m.mean_return) * (r - m.mean_return);
  m.std_return = returns.empty() ? 0.0 : std::sqrt(var / static_cast<double>(returns.size()));
  m.adv_fraction = returns.empty() ? 0.0 : static_cast<double>(adv_count) / static_cast<double>(returns.size());
  if (adv_count > 0) m.mean_selected_value = adv_value_sum / adv_count;

  const auto us = update_agents(state, collected.buffer);
  m.actor_kl_g = us.actor_g.final_kl;
  m.actor_iters_g = us.actor_g.iterations;
  m.actor_kl_r = us.actor_r.final_kl;
  m.actor_iters_r = us.actor_r.iterations;
  m.critic_loss_g = us.critic_loss_g;
  m.critic_loss_r = us.critic_loss_r;
  m.disc_loglik = us.disc_loglik;
  state.epochs_done += 1;
  return m;
}

nn::Checkpoint to_checkpoint(const TrainerState& state) {
  nn::Checkpoint c;
  c.set_meta("variant", std::string(variant_name(state.cfg.variant)));
  c.set_meta("seed", std::to_string(state.cfg.seed));
  c.set_meta("epoch", std::to_string(state.epochs_done));
  c.set_meta("caregiver_obs_dim", std::to_string(state.caregiver.obs_dim));
  c.set_meta("receiver_obs_dim", std::to_string(state.receiver.obs_dim));
  c.set_meta("receiver_latent_dim", std::to_string(state.receiver.latent_dim));
  // Every random stream is derived from (seed, epoch, episode), so this pair
  // is the complete generator state.
  c.set_meta("rng_state", "derive_seed " + std::to_string(state.cfg.seed) + " " + std::to_string(state.epochs_done));
  c.networks.emplace_back("caregiver_actor", state.caregiver.actor);
  c.networks.emplace_back("caregiver_critic", state.caregiver.critic);
  c.networks.emplace_back("receiver_actor", state.receiver.actor);
  c.networks.emplace_back("receiver_critic", state.receiver.critic);
  if (state.disc) c.networks.emplace_back("discriminator", state.disc->net);
  c.optimizers.emplace_back("caregiver_actor", state.caregiver.actor_opt);
  c.optimizers.emplace_back("caregiver_critic", state.caregiver.critic_opt);
  c.optimizers.emplace_back("receiver_actor", state.receiver.actor_opt);
  c.optimizers.emplace_back("receiver_critic", state.receiver.critic_opt);
  if (state.disc) c.optimizers.emplace_back("discriminator", state.disc->opt);
  c.arrays.emplace_back("style_pool", state.style_pool);
  return c;
}

namespace {

std::size_t meta_size(const nn::Checkpoint& ckpt, std::string_view key) {
  const std::string& v = ckpt.meta_value(key);
  try {
    return static_cast<std::size_t>(std::stoull(v));
  } catch (const std::exception&) {
    throw InputError("checkpoint meta field '" + std::string(key) + "' is not a number: " + v);
  }
}

}  // namespace

algo::AgentPolicy policy_from_checkpoint(const nn::Checkpoint& ckpt, std::string_view agent) {
  if (agent != "caregiver" && agent != "receiver") throw InputError("unknown agent '" + std::string(agent) + "'");
  const std::string prefix(agent);
  algo::AgentPolicy p;
  p.actor = ckpt.network(prefix + "_actor");
  p.critic = ckpt.network(prefix + "_critic");
  p.obs_dim = meta_size(ckpt, prefix + "_obs_dim");
  p.latent_dim = agent == "receiver" ? meta_size(ckpt, "receiver_latent_dim") : 0;
  p.action_dim = p.actor.output_dim();
  if (ckpt.has_optimizer(prefix + "_actor")) p.actor_opt = ckpt.optimizer(prefix + "_actor");
  if (ckpt.has_optimizer(prefix + "_critic")) p.critic_opt = ckpt.optimizer(prefix + "_critic");
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw InputError(std::string("checkpoint ") + prefix + " policy is inconsistent: " + e.what());
  }
  return p;
}

TrainerState from_checkpoint(const nn::Checkpoint& ckpt, const RunConfig& cfg) {
  cfg.validate();
  if (parse_variant(ckpt.meta_value("variant")) != cfg.variant) {
    throw InputError("checkpoint variant " + ckpt.meta_value("variant") + " does not match the run variant " +
                     std::string(variant_name(cfg.variant)));
  }
  TrainerState s;
  s.cfg = cfg;
  s.caregiver = policy_from_checkpoint(ckpt, "caregiver");
  s.receiver = policy_from_checkpoint(ckpt, "receiver");
  if (s.receiver.latent_dim != cfg.latent_dim()) throw InputError("checkpoint latent dimension does not match");
  if (cfg.latent_dim() > 0) {
    algo::Discriminator d;
    d.net = ckpt.network("discriminator");
    d.opt = ckpt.optimizer("discriminator");
    d.latent_dim = cfg.latent_dim();
    s.disc = std::move(d);
  }
  s.style_pool = ckpt.has_array("style_pool") ? ckpt.array("style_pool") : nn::Matrix(0, env::kReceiverObsDim);
  s.epochs_done = static_cast<int>(meta_size(ckpt, "epoch"));
  return s;
}

std::string metrics_header() {
  return "epoch,env_steps,mean_return,std_return,actor_kl_g,actor_iters_g,actor_kl_r,actor_iters_r,"
         "critic_loss_g,critic_loss_r,disc_loglik,adv_fraction,mean_selected_value";
}

std::string metrics_row(const EpochMetrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? nn::format_real(*v) : std::string("nan"); };
  std::ostringstream os;
  os << m.epoch << ',' << m.env_steps << ',' << nn::format_real(m.mean_return) << ',' << nn::format_real(m.std_return)
     << ',' << nn::format_real(m.actor_kl_g) << ',' << m.actor_iters_g << ',' << nn::format_real(m.actor_kl_r) << ','
     << m.actor_iters_r << ',' << nn::format_real(m.critic_loss_g) << ',' << nn::format_real(m.critic_loss_r) << ','
     << opt(m.disc_loglik) << ',' << nn::format_real(m.adv_fraction) << ',' << opt(m.mean_selected_value);
  return os.str();
}

TrainResult train(const RunConfig& cfg, const std::optional<std::filesystem::path>& resume_from) {
  cfg.validate();
  namespace fs = std::filesystem;
  if (cfg.out_dir.empty()) throw ConfigError("run.out_dir is not set");
  fs::create_directories(cfg.out_dir);

  TrainerState state = resume_from ? from_checkpoint(nn::load_checkpoint(*resume_from), cfg) : init_trainer(cfg);
  const fs::path metrics_path = cfg.out_dir / "metrics.csv";
  // On resume keep the header plus the rows the checkpoint has seen; rows
  // written after it (an interrupted run) are dropped.
  std::vector<std::string> kept;
  if (resume_from && fs::exists(metrics_path)) {
    std::ifstream in(metrics_path);
    std::string line;
    if (std::getline(in, line) && line == metrics_header()) {
      while (static_cast<int>(kept.size()) < state.epochs_done && std::getline(in, line)) kept.push_back(line);
    }
  }
  std::ofstream metrics(metrics_path, std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot open " + metrics_path.string());
  metrics << metrics_header() << '\n';
  for (const auto& row : kept) metrics << row << '\n';
  metrics << std::flush;

  TrainResult result;
  while (state.epochs_done < cfg.epochs) {
    const EpochMetrics m = run_epoch(state);
    metrics << metrics_row(m) << '\n' << std::flush;
    if (!metrics) throw std::runtime_error("write failed for " + metrics_path.string());
    result.metrics.push_back(m);
    if (state.epochs_done % cfg.checkpoint_every == 0) {
      std::ostringstream name;
      name << "ckpt_epoch_" << std::setw(4) << std::setfill('0') << state.epochs_done << ".txt";
      nn::save_checkpoint(cfg.out_dir / name.str(), to_checkpoint(state));
    }
  }
  result.final_checkpoint = cfg.out_dir / "final.txt";
  nn::save_checkpoint(result.final_checkpoint, to_checkpoint(state));
  return result;
}

}  // namespace coopstyle::trainer
