#include "coopstyle/styles/style_sampler.hpp"

#include <algorithm>
#include <numeric>

#include "coopstyle/error.hpp"

namespace coopstyle::styles {

bool LatentStyle::in_box() const {
  return std::all_of(z.begin(), z.end(), [](double v) { return v >= -1.0 && v <= 1.0; });
}

void StyleSamplerConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("styles.epsilon must lie in [0, 1]");
  if (candidates < 1) throw ConfigError("styles.candidates must be at least 1");
  if (state_batch < 1) throw ConfigError("styles.state_batch must be at least 1");
}

StyleScorer critic_scorer(const algo::AgentPolicy& receiver) {
  if (receiver.latent_dim != kLatentDim) throw ConfigError("adversarial sampling needs a latent-conditioned critic");
  return [&receiver](const nn::Matrix& states, std::span<const LatentStyle> cands) {
    const std::size_t n = states.rows;
    const std::size_t d = states.cols;
    nn::Matrix inputs(n * cands.size(), d + kLatentDim);
    for (std::size_t j = 0; j < cands.size(); ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        auto row = inputs.row(j * n + i);
        std::copy(states.row(i).begin(), states.row(i).end(), row.begin());
        std::copy(cands[j].z.begin(), cands[j].z.end(), row.begin() + static_cast<std::ptrdiff_t>(d));
      }
    }
    const auto v = algo::critic_values_batch(receiver, inputs);
    std::vector<double> means(cands.size(), 0.0);
    for (std::size_t j = 0; j < cands.size(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += v[j * n + i];
      means[j] = s / static_cast<double>(n);
    }
    return means;
  };
}

LatentStyle sample_uniform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LatentStyle s;
  for (double& v : s.z) v = u(rng);
  return s;
}

AdversarialPick pick_min_value(const StyleScorer& scorer, const nn::Matrix& states,
                               std::vector<LatentStyle> candidates) {
  if (states.rows == 0) throw InputError("adversarial style sampling needs at least one state");
  if (candidates.empty()) throw InputError("adversarial style sampling needs at least one candidate");
  AdversarialPick pick;
  pick.values = scorer(states, candidates);
  if (pick.values.size() != candidates.size()) throw InputError("scorer returned the wrong number of values");
  pick.index = 0;
  for (std::size_t j = 1; j < pick.values.size(); ++j) {
    if (pick.values[j] < pick.values[pick.index]) pick.index = j;
  }
  pick.style = candidates[pick.index];
  pick.mean_value = pick.values[pick.index];
  pick.candidates = std::move(candidates);
  return pick;
}

AdversarialPick sample_adversarial(const StyleScorer& scorer, const nn::Matrix& states, int candidates,
                                   std::mt19937_64& rng) {
  if (states.rows == 0) throw InputError("adversarial style sampling needs at least one state");
  if (candidates < 1) throw InputError("candidate count must be at least 1");
  std::vector<LatentStyle> cands;
  cands.reserve(static_cast<std::size_t>(candidates));
  for (int j = 0; j < candidates; ++j) cands.push_back(sample_uniform(rng));
  return pick_min_value(scorer, states, std::move(cands));
}

namespace {

nn::Matrix draw_states(const nn::Matrix& pool, std::size_t n, std::mt19937_64& rng) {
  nn::Matrix out(n, pool.cols);
  std::vector<std::size_t> idx(n);
  if (pool.rows >= n) {
    // Partial Fisher-Yates: first n entries of a random permutation.
    std::vector<std::size_t> perm(pool.rows);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pickd(i, pool.rows - 1);
      std::swap(perm[i], perm[pickd(rng)]);
      idx[i] = perm[i];
    }
  } else {
    std::uniform_int_distribution<std::size_t> pickd(0, pool.rows - 1);
    for (auto& i : idx) i = pickd(rng);
  }
  for (std::size_t i = 0; i < n; ++i) std::copy(pool.row(idx[i]).begin(), pool.row(idx[i]).end(), out.row(i).begin());
  return out;
}

}  // namespace

StyleChoice sample_style(const StyleSamplerConfig& cfg, const StyleScorer& scorer, const nn::Matrix& state_pool,
                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const double x = coin(rng);
  StyleChoice choice;
  if (x < cfg.epsilon && state_pool.rows > 0 && scorer) {
    const nn::Matrix states = draw_states(state_pool, static_cast<std::size_t>(cfg.state_batch), rng);
    const auto pick = sample_adversarial(scorer, states, cfg.candidates, rng);
    choice.style = pick.style;
    choice.adversarial = true;
    choice.mean_value = pick.mean_value;
    return choice;
  }
  choice.style = sample_uniform(rng);
  return choice;
}

}  // namespace coopstyle::styles
