#include "coopstyle/env/scripted.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace coopstyle::env {

void inverse_kinematics(const EnvConfig& cfg, Vec2 target, double& q1, double& q2) {
  const double l1 = cfg.link1;
  const double l2 = cfg.link2;
  double r = std::hypot(target.x, target.y);
  const double r_max = l1 + l2 - 1e-9;
  const double r_min = std::abs(l1 - l2) + 1e-9;
  const double scale = std::clamp(r, r_min, r_max) / std::max(r, 1e-12);
  const double x = target.x * scale;
  const double y = target.y * scale;
  r = std::hypot(x, y);
  const double c2 = std::clamp((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  // Elbow-up branch (q2 <= 0): the one nearest the upright reset pose.
  q2 = -std::acos(c2);
  q1 = std::atan2(y, x) - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
}

Action ScriptedController::act(const EnvConfig& cfg, const EnvState& state, Vec2 target) const {
  double q1 = 0.0;
  double q2 = 0.0;
  inverse_kinematics(cfg, target, q1, q2);
  const double step = cfg.joint_speed * cfg.dt;
  return {std::clamp(gain * (q1 - state.q1) / step, -1.0, 1.0),
          std::clamp(gain * (q2 - state.q2) / step, -1.0, 1.0)};
}

double scripted_baseline_return(const EnvConfig& cfg, int episodes, std::uint64_t seed_base) {
  FeedingEnv env(cfg);
  const ScriptedController ctrl;
  const Vec2 target = mouth_position(cfg, 0.0, 0.0);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    env.reset(seed_base + static_cast<std::uint64_t>(e));
    bool done = false;
    while (!done) {
      const auto r = env.step(ctrl.act(cfg, env.state(), target), Action{0.0, 0.0});
      total += r.reward;
      done = r.done;
    }
  }
  return total / episodes;
}

}  // namespace coopstyle::env
