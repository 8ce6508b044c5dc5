#include "coopstyle/env/feeding_env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "coopstyle/error.hpp"

namespace coopstyle::env {

void EnvConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("env.dt must be positive");
  if (episode_len != 200) throw ConfigError("env.episode_len must be 200");
  if (!(link1 > 0.0) || !(link2 > 0.0)) throw ConfigError("env link lengths must be positive");
  if (!(joint_speed > 0.0) || !(head_speed > 0.0) || !(pitch_speed > 0.0)) {
    throw ConfigError("env speed scales must be positive");
  }
  if (!(head_offset_min < head_offset_max)) throw ConfigError("env head offset range is empty");
  if (!(pitch_min < pitch_max)) throw ConfigError("env pitch range is empty");
  if (!(success_radius > 0.0)) throw ConfigError("env.success_radius must be positive");
  if (!(action_cost >= 0.0)) throw ConfigError("env.action_cost must be non-negative");
}

double EnvConfig::max_distance() const {
  const double reach = link1 + link2;
  const double center = std::hypot(head_center.x, head_center.y);
  const double offset = std::max(std::abs(head_offset_min), std::abs(head_offset_max));
  const double mouth_arm = std::hypot(mouth_offset.x, mouth_offset.y);
  return reach + center + offset + mouth_arm;
}

Vec2 spoon_position(const EnvConfig& cfg, double q1, double q2) {
  return {cfg.link1 * std::cos(q1) + cfg.link2 * std::cos(q1 + q2),
          cfg.link1 * std::sin(q1) + cfg.link2 * std::sin(q1 + q2)};
}

Vec2 mouth_position(const EnvConfig& cfg, double head_offset, double pitch) {
  const double c = std::cos(pitch);
  const double s = std::sin(pitch);
  return {cfg.head_center.x + head_offset + c * cfg.mouth_offset.x - s * cfg.mouth_offset.y,
          cfg.head_center.y + s * cfg.mouth_offset.x + c * cfg.mouth_offset.y};
}

FeedingEnv::FeedingEnv(EnvConfig config) : config_(config) {
  config_.validate();
  reset_deterministic();
}

Observations FeedingEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  constexpr double pi = std::numbers::pi;
  std::uniform_real_distribution<double> q1(pi / 3.0, 2.0 * pi / 3.0);
  std::uniform_real_distribution<double> q2(-pi / 6.0, pi / 6.0);
  std::uniform_real_distribution<double> off(-0.2, 0.2);
  std::uniform_real_distribution<double> pitch(-0.3, 0.3);
  state_.q1 = q1(rng);
  state_.q2 = q2(rng);
  state_.head_offset = off(rng);
  state_.pitch = pitch(rng);
  state_.step = 0;
  return observe();
}

Observations FeedingEnv::reset_deterministic() {
  state_ = EnvState{std::numbers::pi / 2.0, 0.0, 0.0, 0.0, 0};
  return observe();
}

Observations FeedingEnv::reset_to(const EnvState& state) {
  state_ = state;
  state_.head_offset = std::clamp(state_.head_offset, config_.head_offset_min, config_.head_offset_max);
  state_.pitch = std::clamp(state_.pitch, config_.pitch_min, config_.pitch_max);
  state_.step = std::clamp(state_.step, 0, config_.episode_len);
  return observe();
}

Vec2 FeedingEnv::spoon() const { return spoon_position(config_, state_.q1, state_.q2); }
Vec2 FeedingEnv::mouth() const { return mouth_position(config_, state_.head_offset, state_.pitch); }

Observations FeedingEnv::observe() const {
  const Vec2 s = spoon();
  const Vec2 m = mouth();
  Observations o;
  o.caregiver = {state_.q1, state_.q2,  s.x, s.y, state_.head_offset, state_.pitch,
                 m.x,       m.y,        static_cast<double>(state_.step) / config_.episode_len};
  o.receiver = {state_.head_offset, state_.pitch, s.x, s.y, m.x, m.y, s.x - m.x, s.y - m.y};
  return o;
}

StepResult FeedingEnv::step(const Action& caregiver_action, const Action& receiver_action) {
  if (state_.step >= config_.episode_len) throw InputError("step called on a finished episode");
  Action ag{};
  Action ar{};
  for (std::size_t i = 0; i < kActionDim; ++i) {
    if (!std::isfinite(caregiver_action[i]) || !std::isfinite(receiver_action[i])) {
      throw InputError("non-finite action");
    }
    ag[i] = std::clamp(caregiver_action[i], -1.0, 1.0);
    ar[i] = std::clamp(receiver_action[i], -1.0, 1.0);
  }
  const double dq = config_.joint_speed * config_.dt;
  state_.q1 += dq * ag[0];
  state_.q2 += dq * ag[1];
  state_.head_offset = std::clamp(state_.head_offset + config_.head_speed * config_.dt * ar[0],
                                  config_.head_offset_min, config_.head_offset_max);
  state_.pitch = std::clamp(state_.pitch + config_.pitch_speed * config_.dt * ar[1], config_.pitch_min,
                            config_.pitch_max);
  state_.step += 1;

  const Vec2 s = spoon();
  const Vec2 m = mouth();
  const double dist = std::hypot(s.x - m.x, s.y - m.y);
  double reward = -dist - config_.action_cost * (ag[0] * ag[0] + ag[1] * ag[1]) -
                  config_.action_cost * (ar[0] * ar[0] + ar[1] * ar[1]);
  if (dist < config_.success_radius) reward += config_.success_bonus;

  StepResult r;
  r.obs = observe();
  r.reward = reward;
  r.done = state_.step >= config_.episode_len;
  return r;
}

}  // namespace coopstyle::env
