#pragma once

// Scripted reference controller used as the learning baseline: a
// proportional controller in joint space that drives the arm toward the
// inverse-kinematics solution for the mouth at the head's nominal pose.
// It does not perceive the head, and the care-receiver stays still.

#include <cstdint>

#include "coopstyle/env/feeding_env.hpp"

namespace coopstyle::env {

struct ScriptedController {
  double gain = 0.2;  // action per rad of joint error, before clamping

  Action act(const EnvConfig& cfg, const EnvState& state, Vec2 target) const;
};

/// Elbow-up inverse kinematics (q2 <= 0). Targets outside the workspace are projected
/// onto its boundary.
void inverse_kinematics(const EnvConfig& cfg, Vec2 target, double& q1, double& q2);

/// Mean undiscounted return of the scripted controller over `episodes`
/// random resets seeded seed_base, seed_base + 1, ...
double scripted_baseline_return(const EnvConfig& cfg, int episodes, std::uint64_t seed_base);

}  // namespace coopstyle::env
