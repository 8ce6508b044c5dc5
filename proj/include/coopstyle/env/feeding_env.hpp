#pragma once

// Planar cooperative feeding game. A two-link caregiver arm (base at the
// origin) carries a spoon at its end-effector; the care-receiver moves its
// head (horizontal offset and pitch), which carries the mouth. Both agents
// receive the same reward every step.

#include <array>
#include <cstdint>

namespace coopstyle::env {

inline constexpr std::size_t kCaregiverObsDim = 9;
inline constexpr std::size_t kReceiverObsDim = 8;
inline constexpr std::size_t kActionDim = 2;

using CaregiverObs = std::array<double, kCaregiverObsDim>;
using ReceiverObs = std::array<double, kReceiverObsDim>;
using Action = std::array<double, kActionDim>;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Vec2&) const = default;
};

struct EnvConfig {
  double dt = 0.05;
  int episode_len = 200;
  double link1 = 0.5;
  double link2 = 0.5;
  double joint_speed = 1.0;  // rad/s at |a| = 1
  Vec2 head_center{0.7, 0.4};
  Vec2 mouth_offset{-0.15, 0.0};  // in the head frame
  double head_offset_min = -0.3;
  double head_offset_max = 0.3;
  double pitch_min = -0.6;
  double pitch_max = 0.6;
  double head_speed = 0.5;   // m/s
  double pitch_speed = 1.0;  // rad/s
  double success_radius = 0.05;
  double success_bonus = 10.0;
  double action_cost = 0.01;

  /// Throws ConfigError when a field is out of its valid domain.
  void validate() const;

  /// Largest possible spoon-mouth distance over all reachable states.
  double max_distance() const;
  /// Lower bound on the per-step reward.
  double min_reward() const { return -(max_distance() + 4.0 * action_cost); }
  double max_reward() const { return success_bonus; }

  bool operator==(const EnvConfig&) const = default;
};

struct EnvState {
  double q1 = 0.0;
  double q2 = 0.0;
  double head_offset = 0.0;
  double pitch = 0.0;
  int step = 0;

  bool operator==(const EnvState&) const = default;
};

struct Observations {
  CaregiverObs caregiver{};
  ReceiverObs receiver{};
};

struct StepResult {
  Observations obs;
  double reward = 0.0;
  bool done = false;
};

class FeedingEnv {
 public:
  explicit FeedingEnv(EnvConfig config = {});

  const EnvConfig& config() const { return config_; }
  const EnvState& state() const { return state_; }

  /// Random initial state drawn from a generator seeded with `seed`.
  Observations reset(std::uint64_t seed);
  /// q1 = pi/2, q2 = 0, head at its nominal pose.
  Observations reset_deterministic();
  /// Start from an explicit state (clamped head fields, step index kept).
  Observations reset_to(const EnvState& state);

  /// Actions are clamped componentwise to [-1, 1]; non-finite actions throw InputError.
  StepResult step(const Action& caregiver_action, const Action& receiver_action);

  Vec2 spoon() const;
  Vec2 mouth() const;
  Observations observe() const;

 private:
  EnvConfig config_;
  EnvState state_;
};

Vec2 spoon_position(const EnvConfig& cfg, double q1, double q2);
Vec2 mouth_position(const EnvConfig& cfg, double head_offset, double pitch);

}  // namespace coopstyle::env
