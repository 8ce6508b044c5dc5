#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace coopstyle::nn {

/// Dense affine layer. `weight` is row-major [out x in].
struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  bool operator==(const Layer&) const = default;
};

/// Parameters of one fixed-topology MLP: tanh on hidden layers, identity on
/// the output layer. A Gaussian actor also carries a state-independent
/// log standard deviation; it is empty for critics and discriminators.
struct ParamSet {
  std::vector<Layer> layers;
  std::vector<double> log_std;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t parameter_count() const;

  /// Throws ConfigError if shapes do not compose or any entry is non-finite.
  void validate() const;

  /// Same shapes, all entries zero. Used for gradients and Adam moments.
  ParamSet zeros_like() const;

  bool all_finite() const;

  /// Visit every scalar parameter in a fixed order (layers, then log_std).
  template <typename F>
  void for_each_block(F&& f) {
    for (auto& l : layers) {
      f(std::span<double>(l.weight));
      f(std::span<double>(l.bias));
    }
    f(std::span<double>(log_std));
  }
  template <typename F>
  void for_each_block(F&& f) const {
    for (const auto& l : layers) {
      f(std::span<const double>(l.weight));
      f(std::span<const double>(l.bias));
    }
    f(std::span<const double>(log_std));
  }

  bool operator==(const ParamSet&) const = default;
};

/// sizes = {input, hidden..., output}. Weights ~ U(-b, b), b = sqrt(6 / (fan_in + fan_out));
/// biases zero.
ParamSet make_mlp(std::span<const std::size_t> sizes, std::mt19937_64& rng);

/// Single-sample forward pass.
std::vector<double> mlp_forward(const ParamSet& params, std::span<const double> input);

struct Gradient {
  ParamSet params;             // same shapes as the network; log_std entries stay zero
  std::vector<double> input;   // d<upstream, output>/d input
};

/// Exact reverse-mode gradient of <upstream, mlp_forward(params, input)>.
Gradient mlp_gradient(const ParamSet& params, std::span<const double> input,
                      std::span<const double> upstream);

/// grads += scale * other, shapes must match.
void add_scaled(ParamSet& grads, const ParamSet& other, double scale = 1.0);

}  // namespace coopstyle::nn
