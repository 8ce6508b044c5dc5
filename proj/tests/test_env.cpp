#include <cmath>
#include <numbers>
#include <random>

#include "coopstyle/env/feeding_env.hpp"
#include "coopstyle/env/scripted.hpp"
#include "coopstyle/error.hpp"
#include "doctest.h"

using namespace coopstyle;
using env::Action;
using env::EnvConfig;
using env::FeedingEnv;

namespace {

double dist(env::Vec2 a, env::Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

TEST_SUITE("env") {
  TEST_CASE("default config and validation") {
    const EnvConfig cfg;
    CHECK(cfg.dt == 0.05);
    CHECK(cfg.episode_len == 200);
    CHECK_NOTHROW(cfg.validate());
    EnvConfig bad = cfg;
    bad.episode_len = 100;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.dt = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.pitch_min = bad.pitch_max;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("forward kinematics by hand") {
    const EnvConfig cfg;
    const auto s = env::spoon_position(cfg, std::numbers::pi / 2, 0.0);
    CHECK(s.x == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(s.y == doctest::Approx(1.0).epsilon(1e-15));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 100; ++i) {
      const double q1 = u(rng), q2 = u(rng);
      const auto p = env::spoon_position(cfg, q1, q2);
      CHECK(p.x == doctest::Approx(0.5 * std::cos(q1) + 0.5 * std::cos(q1 + q2)).epsilon(1e-14));
      CHECK(p.y == doctest::Approx(0.5 * std::sin(q1) + 0.5 * std::sin(q1 + q2)).epsilon(1e-14));
    }
    const auto m = env::mouth_position(cfg, 0.1, 0.3);
    CHECK(m.x == doctest::Approx(0.8 - 0.15 * std::cos(0.3)).epsilon(1e-14));
    CHECK(m.y == doctest::Approx(0.4 - 0.15 * std::sin(0.3)).epsilon(1e-14));
  }

  TEST_CASE("deterministic reset places the spoon at (0, 1)") {
    FeedingEnv e;
    const auto obs = e.reset_deterministic();
    CHECK(obs.caregiver.size() == 9);
    CHECK(obs.receiver.size() == 8);
    CHECK(std::abs(obs.caregiver[2]) < 1e-15);
    CHECK(obs.caregiver[3] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e.mouth().x == doctest::Approx(0.55).epsilon(1e-15));
    CHECK(e.mouth().y == doctest::Approx(0.4).epsilon(1e-15));
  }

  TEST_CASE("zero actions keep positions and give -0.81394") {
    FeedingEnv e;
    e.reset_deterministic();
    const auto before = e.state();
    const auto r = e.step({0.0, 0.0}, {0.0, 0.0});
    CHECK(e.state().q1 == before.q1);
    CHECK(e.state().q2 == before.q2);
    CHECK(e.state().head_offset == before.head_offset);
    CHECK(e.state().pitch == before.pitch);
    CHECK(r.reward == doctest::Approx(-std::sqrt(0.55 * 0.55 + 0.6 * 0.6)).epsilon(1e-14));
    CHECK(r.reward == doctest::Approx(-0.81394).epsilon(1e-5));
    CHECK_FALSE(r.done);
  }

  TEST_CASE("step integrates actions and charges their cost") {
    FeedingEnv e;
    e.reset_deterministic();
    const auto r = e.step({0.4, -0.6}, {0.2, -1.0});
    const auto& s = e.state();
    CHECK(s.q1 == doctest::Approx(std::numbers::pi / 2 + 0.05 * 0.4).epsilon(1e-15));
    CHECK(s.q2 == doctest::Approx(-0.05 * 0.6).epsilon(1e-15));
    CHECK(s.head_offset == doctest::Approx(0.5 * 0.05 * 0.2).epsilon(1e-15));
    CHECK(s.pitch == doctest::Approx(-1.0 * 0.05).epsilon(1e-15));
    const double d = dist(e.spoon(), e.mouth());
    CHECK(r.reward == doctest::Approx(-d - 0.01 * (0.16 + 0.36) - 0.01 * (0.04 + 1.0)).epsilon(1e-14));
    CHECK(s.step == 1);
  }

  TEST_CASE("actions are clamped to [-1, 1]") {
    FeedingEnv a, b;
    a.reset(5);
    b.reset(5);
    const auto ra = a.step({2.0, -3.0}, {1.5, -7.0});
    const auto rb = b.step({1.0, -1.0}, {1.0, -1.0});
    CHECK(a.state() == b.state());
    CHECK(ra.reward == rb.reward);
  }

  TEST_CASE("spoon near the mouth earns the success bonus") {
    const EnvConfig cfg;
    FeedingEnv e(cfg);
    const env::Vec2 mouth = env::mouth_position(cfg, 0.0, 0.0);
    double q1 = 0.0, q2 = 0.0;
    env::inverse_kinematics(cfg, {mouth.x + 0.03, mouth.y + 0.02}, q1, q2);
    env::EnvState st;
    st.q1 = q1;
    st.q2 = q2;
    e.reset_to(st);
    const double d = dist(e.spoon(), e.mouth());
    REQUIRE(d < 0.04);
    const auto r = e.step({0.0, 0.0}, {0.0, 0.0});
    CHECK(r.reward == doctest::Approx(10.0 - d).epsilon(1e-13));
    CHECK(r.reward >= 9.95);
  }

  TEST_CASE("inverse kinematics inverts forward kinematics") {
    const EnvConfig cfg;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ang(0.0, 2 * std::numbers::pi), rad(0.05, 0.99);
    for (int i = 0; i < 200; ++i) {
      const double th = ang(rng), r = rad(rng);
      const env::Vec2 target{r * std::cos(th), r * std::sin(th)};
      double q1 = 0.0, q2 = 0.0;
      env::inverse_kinematics(cfg, target, q1, q2);
      CHECK(q2 <= 0.0);
      CHECK(dist(env::spoon_position(cfg, q1, q2), target) < 1e-12);
    }
  }

  TEST_CASE("same seed gives the same reset, different seeds differ") {
    FeedingEnv a, b, c;
    a.reset(123);
    b.reset(123);
    c.reset(124);
    CHECK(a.state() == b.state());
    CHECK_FALSE(a.state() == c.state());
  }

  TEST_CASE("1000 resets stay inside their sampling intervals") {
    FeedingEnv e;
    for (std::uint64_t s = 0; s < 1000; ++s) {
      e.reset(s);
      const auto& st = e.state();
      CHECK(st.q1 >= std::numbers::pi / 3);
      CHECK(st.q1 <= 2 * std::numbers::pi / 3);
      CHECK(std::abs(st.q2) <= std::numbers::pi / 6);
      CHECK(std::abs(st.head_offset) <= 0.2);
      CHECK(std::abs(st.pitch) <= 0.3);
      CHECK(st.step == 0);
    }
  }

  TEST_CASE("observation layout") {
    FeedingEnv e;
    const auto obs = e.reset(77);
    const auto& s = e.state();
    const auto sp = e.spoon(), m = e.mouth();
    const std::array<double, 9> g{s.q1, s.q2, sp.x, sp.y, s.head_offset, s.pitch, m.x, m.y, 0.0};
    const std::array<double, 8> r{s.head_offset, s.pitch, sp.x, sp.y, m.x, m.y, sp.x - m.x, sp.y - m.y};
    for (std::size_t i = 0; i < 9; ++i) CHECK(obs.caregiver[i] == g[i]);
    for (std::size_t i = 0; i < 8; ++i) CHECK(obs.receiver[i] == r[i]);
    const auto after = e.step({0.1, 0.1}, {0.1, 0.1});
    CHECK(after.obs.caregiver[8] == doctest::Approx(1.0 / 200.0));
  }

  TEST_CASE("episodes last exactly 200 steps and rewards stay bounded") {
    const EnvConfig cfg;
    const double lo = cfg.min_reward();
    // max_distance covers the full arm reach plus the farthest mouth position.
    CHECK(cfg.max_distance() > 1.0 + std::hypot(0.7, 0.4));
    CHECK(std::isfinite(lo));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (std::uint64_t ep = 0; ep < 20; ++ep) {
      FeedingEnv e(cfg);
      e.reset(ep);
      int steps = 0;
      bool done = false;
      while (!done) {
        const auto r = e.step({u(rng), u(rng)}, {u(rng), u(rng)});
        ++steps;
        done = r.done;
        CHECK(r.reward >= lo);
        CHECK(r.reward <= 10.0);
        const auto& s = e.state();
        CHECK(s.head_offset >= cfg.head_offset_min);
        CHECK(s.head_offset <= cfg.head_offset_max);
        CHECK(s.pitch >= cfg.pitch_min);
        CHECK(s.pitch <= cfg.pitch_max);
        if (steps < 200) CHECK_FALSE(done);
      }
      CHECK(steps == 200);
      CHECK_THROWS_AS(e.step({0.0, 0.0}, {0.0, 0.0}), InputError);
    }
  }

  TEST_CASE("non-finite actions are rejected") {
    FeedingEnv e;
    e.reset(1);
    const auto before = e.state();
    CHECK_THROWS_AS(e.step({std::nan(""), 0.0}, {0.0, 0.0}), InputError);
    CHECK_THROWS_AS(e.step({0.0, 0.0}, {0.0, std::numeric_limits<double>::infinity()}), InputError);
    CHECK(e.state() == before);
  }

  TEST_CASE("same seed and actions give a bit-identical trajectory") {
    FeedingEnv a, b;
    a.reset(9);
    b.reset(9);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 200; ++i) {
      const Action ag{u(rng), u(rng)}, ar{u(rng), u(rng)};
      const auto ra = a.step(ag, ar);
      const auto rb = b.step(ag, ar);
      CHECK(ra.reward == rb.reward);
      CHECK(a.state() == b.state());
    }
  }

  TEST_CASE("scripted controller reaches a still mouth and is deterministic") {
    const EnvConfig cfg;
    FeedingEnv e(cfg);
    e.reset_deterministic();
    const env::ScriptedController ctl;
    const auto target = env::mouth_position(cfg, 0.0, 0.0);
    for (int i = 0; i < 200; ++i) e.step(ctl.act(cfg, e.state(), target), {0.0, 0.0});
    CHECK(dist(e.spoon(), target) < cfg.success_radius);
    const double a = env::scripted_baseline_return(cfg, 20, 100);
    const double b = env::scripted_baseline_return(cfg, 20, 100);
    CHECK(a == b);
    CHECK(std::isfinite(a));
  }
}
