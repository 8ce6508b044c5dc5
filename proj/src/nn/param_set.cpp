#include "coopstyle/nn/param_set.hpp"

#include <cmath>
#include <string>

#include "coopstyle/error.hpp"

namespace coopstyle::nn {

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for_each_block([&](std::span<const double> block) { n += block.size(); });
  return n;
}

void ParamSet::validate() const {
  if (layers.empty()) throw ConfigError("network has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const Layer& l = layers[k];
    if (l.in == 0 || l.out == 0) throw ConfigError("layer " + std::to_string(k) + " has a zero dimension");
    if (l.weight.size() != l.in * l.out || l.bias.size() != l.out) {
      throw ConfigError("layer " + std::to_string(k) + " storage does not match its shape");
    }
    if (k > 0 && layers[k - 1].out != l.in) {
      throw ConfigError("layer " + std::to_string(k) + " input width " + std::to_string(l.in) +
                        " does not match previous output " + std::to_string(layers[k - 1].out));
    }
  }
  if (!log_std.empty() && log_std.size() != output_dim()) {
    throw ConfigError("log_std length must equal the action dimension");
  }
  if (!all_finite()) throw ConfigError("network contains non-finite parameters");
}

bool ParamSet::all_finite() const {
  bool ok = true;
  for_each_block([&](std::span<const double> block) {
    for (double v : block) ok = ok && std::isfinite(v);
  });
  return ok;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers) {
    z.layers.push_back(Layer{l.in, l.out, std::vector<double>(l.weight.size(), 0.0),
                             std::vector<double>(l.bias.size(), 0.0)});
  }
  z.log_std.assign(log_std.size(), 0.0);
  return z;
}

ParamSet make_mlp(std::span<const std::size_t> sizes, std::mt19937_64& rng) {
  if (sizes.size() < 2) throw ConfigError("an MLP needs at least input and output sizes");
  ParamSet p;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    Layer l;
    l.in = sizes[k];
    l.out = sizes[k + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    l.weight.resize(l.in * l.out);
    for (double& w : l.weight) w = dist(rng);
    l.bias.assign(l.out, 0.0);
    p.layers.push_back(std::move(l));
  }
  p.validate();
  return p;
}

namespace {

void check_input(const ParamSet& params, std::size_t n) {
  if (params.layers.empty()) throw ConfigError("network has no layers");
  if (n != params.input_dim()) {
    throw ConfigError("input length " + std::to_string(n) + " does not match network input " +
                      std::to_string(params.input_dim()));
  }
}

std::vector<double> affine(const Layer& l, std::span<const double> x) {
  std::vector<double> y(l.bias);
  for (std::size_t o = 0; o < l.out; ++o) {
    const double* w = &l.weight[o * l.in];
    double acc = 0.0;
    for (std::size_t i = 0; i < l.in; ++i) acc += w[i] * x[i];
    y[o] += acc;
  }
  return y;
}

}  // namespace

std::vector<double> mlp_forward(const ParamSet& params, std::span<const double> input) {
  check_input(params, input.size());
  std::vector<double> x(input.begin(), input.end());
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    x = affine(params.layers[k], x);
    if (k + 1 < params.layers.size()) {
      for (double& v : x) v = std::tanh(v);
    }
  }
  return x;
}

Gradient mlp_gradient(const ParamSet& params, std::span<const double> input,
                      std::span<const double> upstream) {
  check_input(params, input.size());
  if (upstream.size() != params.output_dim()) {
    throw ConfigError("upstream length " + std::to_string(upstream.size()) +
                      " does not match network output " + std::to_string(params.output_dim()));
  }
  const std::size_t n_layers = params.layers.size();
  std::vector<std::vector<double>> acts;
  acts.reserve(n_layers + 1);
  acts.emplace_back(input.begin(), input.end());
  for (std::size_t k = 0; k < n_layers; ++k) {
    auto z = affine(params.layers[k], acts.back());
    if (k + 1 < n_layers) {
      for (double& v : z) v = std::tanh(v);
    }
    acts.push_back(std::move(z));
  }

  Gradient g;
  g.params = params.zeros_like();
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t k = n_layers; k-- > 0;) {
    const Layer& l = params.layers[k];
    if (k + 1 < n_layers) {
      const auto& y = acts[k + 1];
      for (std::size_t o = 0; o < l.out; ++o) delta[o] *= 1.0 - y[o] * y[o];
    }
    Layer& gl = g.params.layers[k];
    const auto& x = acts[k];
    std::vector<double> back(l.in, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      gl.bias[o] = delta[o];
      for (std::size_t i = 0; i < l.in; ++i) {
        gl.weight[o * l.in + i] = delta[o] * x[i];
        back[i] += delta[o] * l.weight[o * l.in + i];
      }
    }
    delta = std::move(back);
  }
  g.input = std::move(delta);
  return g;
}

void add_scaled(ParamSet& grads, const ParamSet& other, double scale) {
  if (grads.layers.size() != other.layers.size() || grads.log_std.size() != other.log_std.size()) {
    throw ConfigError("gradient shapes differ");
  }
  for (std::size_t k = 0; k < grads.layers.size(); ++k) {
    auto& a = grads.layers[k];
    const auto& b = other.layers[k];
    if (a.weight.size() != b.weight.size() || a.bias.size() != b.bias.size()) {
      throw ConfigError("gradient shapes differ");
    }
    for (std::size_t i = 0; i < a.weight.size(); ++i) a.weight[i] += scale * b.weight[i];
    for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += scale * b.bias[i];
  }
  for (std::size_t i = 0; i < grads.log_std.size(); ++i) grads.log_std[i] += scale * other.log_std[i];
}

}  // namespace coopstyle::nn
