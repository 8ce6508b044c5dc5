#include <algorithm>
#include <cmath>
#include <random>

#include "coopstyle/algo/policy.hpp"
#include "coopstyle/error.hpp"
#include "coopstyle/styles/style_sampler.hpp"
#include "doctest.h"

using namespace coopstyle;
using styles::LatentStyle;

namespace {

styles::StyleScorer norm_scorer() {
  return [](const nn::Matrix&, std::span<const LatentStyle> cands) {
    std::vector<double> v;
    for (const auto& c : cands) v.push_back(c.z[0] * c.z[0] + c.z[1] * c.z[1]);
    return v;
  };
}

styles::StyleScorer constant_scorer() {
  return [](const nn::Matrix&, std::span<const LatentStyle> cands) { return std::vector<double>(cands.size(), 1.0); };
}

nn::Matrix pool(std::size_t rows, std::size_t cols = 8) {
  nn::Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = 0.001 * static_cast<double>(i);
  return m;
}

}  // namespace

TEST_SUITE("styles") {
  TEST_CASE("config defaults and validation") {
    const styles::StyleSamplerConfig c;
    CHECK(c.epsilon == 0.5);
    CHECK(c.candidates == 100);
    CHECK(c.state_batch == 256);
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.epsilon = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.candidates = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.state_batch = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("uniform prior draws") {
    std::mt19937_64 rng(1), again(1);
    double m0 = 0.0, m1 = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const auto s = styles::sample_uniform(rng);
      CHECK(s.in_box());
      CHECK(s == styles::sample_uniform(again));
      m0 += s.z[0];
      m1 += s.z[1];
    }
    CHECK(std::abs(m0 / 10000) < 0.05);
    CHECK(std::abs(m1 / 10000) < 0.05);
  }

  TEST_CASE("adversarial pick is the exhaustive argmin") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      const auto pick = styles::sample_adversarial(norm_scorer(), pool(5), 100, rng);
      REQUIRE(pick.candidates.size() == 100);
      std::size_t best = 0;
      for (std::size_t j = 0; j < pick.candidates.size(); ++j) {
        const auto& c = pick.candidates[j].z;
        const auto& b = pick.candidates[best].z;
        if (c[0] * c[0] + c[1] * c[1] < b[0] * b[0] + b[1] * b[1]) best = j;
      }
      CHECK(pick.index == best);
      CHECK(pick.style == pick.candidates[best]);
      for (double v : pick.values) CHECK(pick.mean_value <= v);
    }
  }

  TEST_CASE("single candidate and tie-break rules") {
    std::mt19937_64 rng(3);
    const auto one = styles::sample_adversarial(norm_scorer(), pool(3), 1, rng);
    CHECK(one.index == 0);
    CHECK(one.candidates.size() == 1);
    const auto tie = styles::sample_adversarial(constant_scorer(), pool(3), 50, rng);
    CHECK(tie.index == 0);
    CHECK(tie.style == tie.candidates[0]);
    CHECK_THROWS_AS(styles::sample_adversarial(norm_scorer(), nn::Matrix(0, 8), 10, rng), InputError);
  }

  TEST_CASE("frozen candidate list: chosen value is never above any other") {
    std::vector<LatentStyle> cands{{{0.5, 0.5}}, {{-0.1, 0.2}}, {{0.9, -0.9}}, {{0.1, -0.2}}, {{0.0, 0.3}}};
    const auto pick = styles::pick_min_value(norm_scorer(), pool(4), cands);
    CHECK(pick.index == 1);  // 0.05 ties with index 3; the lower index wins
    for (double v : pick.values) CHECK(pick.mean_value <= v);
  }

  TEST_CASE("critic scorer averages the latent critic over states") {
    std::mt19937_64 rng(4);
    const auto p = algo::AgentPolicy::create(8, 2, 2, algo::AlgoConfig{}, rng);
    nn::Matrix states(7, 8);
    std::uniform_real_distribution<double> u(-1, 1);
    for (auto& x : states.data) x = u(rng);
    const std::vector<LatentStyle> cands{{{0.3, -0.7}}, {{-0.9, 0.1}}};
    const auto vals = styles::critic_scorer(p)(states, cands);
    REQUIRE(vals.size() == 2);
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < states.rows; ++i) s += algo::critic_value(p, p.make_input(states.row(i), cands[j].z));
      CHECK(vals[j] == doctest::Approx(s / 7.0).epsilon(1e-12));
    }
  }

  TEST_CASE("epsilon-greedy branch selection") {
    styles::StyleSamplerConfig cfg;
    std::mt19937_64 rng(5);
    cfg.epsilon = 0.0;
    for (int i = 0; i < 200; ++i) CHECK_FALSE(styles::sample_style(cfg, norm_scorer(), pool(300), rng).adversarial);
    cfg.epsilon = 1.0;
    for (int i = 0; i < 200; ++i) CHECK(styles::sample_style(cfg, norm_scorer(), pool(300), rng).adversarial);
    for (int i = 0; i < 200; ++i) {
      const auto c = styles::sample_style(cfg, norm_scorer(), nn::Matrix(0, 8), rng);
      CHECK_FALSE(c.adversarial);
      CHECK(c.style.in_box());
    }
    cfg.epsilon = 0.5;
    cfg.candidates = 4;
    cfg.state_batch = 16;
    int adv = 0;
    for (int i = 0; i < 10000; ++i) adv += styles::sample_style(cfg, norm_scorer(), pool(40), rng).adversarial;
    CHECK(std::abs(adv / 10000.0 - 0.5) < 0.02);
  }

  TEST_CASE("state batches are drawn without replacement when the pool is large enough") {
    styles::StyleSamplerConfig cfg;
    cfg.epsilon = 1.0;
    cfg.candidates = 3;
    cfg.state_batch = 10;
    std::mt19937_64 rng(6);
    std::vector<std::size_t> seen_rows;
    const styles::StyleScorer spy = [&](const nn::Matrix& s, std::span<const LatentStyle> c) {
      seen_rows.push_back(s.rows);
      std::vector<double> keys;
      for (std::size_t i = 0; i < s.rows; ++i) keys.push_back(s.at(i, 0));
      std::sort(keys.begin(), keys.end());
      CHECK(std::adjacent_find(keys.begin(), keys.end()) == keys.end());
      return std::vector<double>(c.size(), 0.0);
    };
    styles::sample_style(cfg, spy, pool(50), rng);
    CHECK(seen_rows.front() == 10);
    std::vector<std::size_t> small_rows;
    const styles::StyleScorer count = [&](const nn::Matrix& s, std::span<const LatentStyle> c) {
      small_rows.push_back(s.rows);
      return std::vector<double>(c.size(), 0.0);
    };
    styles::sample_style(cfg, count, pool(4), rng);  // smaller pool: with replacement, still N rows
    CHECK(small_rows.front() == 10);
  }
}
