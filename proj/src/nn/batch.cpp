#include "coopstyle/nn/batch.hpp"

#include <algorithm>
#include <string>

#include "coopstyle/error.hpp"
#include "coopstyle/simd/kernels.hpp"

namespace coopstyle::nn {

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end) {
  Matrix out(end - begin, m.cols);
  std::copy(m.data.begin() + static_cast<std::ptrdiff_t>(begin * m.cols),
            m.data.begin() + static_cast<std::ptrdiff_t>(end * m.cols), out.data.begin());
  return out;
}

namespace {

std::vector<double> transposed(const double* src, std::size_t rows, std::size_t cols) {
  std::vector<double> t(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = src[i * cols + j];
  }
  return t;
}

}  // namespace

void forward_batch(const ParamSet& params, const Matrix& input, ForwardCache& cache) {
  if (params.layers.empty()) throw ConfigError("network has no layers");
  if (input.cols != params.input_dim()) {
    throw ConfigError("batch input width " + std::to_string(input.cols) + " does not match network input " +
                      std::to_string(params.input_dim()));
  }
  const auto& kern = simd::active_kernels();
  const std::size_t n_layers = params.layers.size();
  cache.activations.resize(n_layers + 1);
  cache.activations[0] = input;
  for (std::size_t k = 0; k < n_layers; ++k) {
    const Layer& l = params.layers[k];
    const Matrix& x = cache.activations[k];
    Matrix& y = cache.activations[k + 1];
    y.rows = x.rows;
    y.cols = l.out;
    y.data.resize(y.rows * y.cols);
    for (std::size_t i = 0; i < y.rows; ++i) std::copy(l.bias.begin(), l.bias.end(), y.data.begin() + static_cast<std::ptrdiff_t>(i * l.out));
    const auto wt = transposed(l.weight.data(), l.out, l.in);
    kern.gemm(x.rows, l.out, l.in, x.data.data(), x.cols, wt.data(), l.out, y.data.data(), l.out, true);
    if (k + 1 < n_layers) kern.tanh_inplace(y.data.data(), y.data.size());
  }
}

Matrix forward_batch(const ParamSet& params, const Matrix& input) {
  ForwardCache cache;
  forward_batch(params, input, cache);
  return std::move(cache.activations.back());
}

void backward_batch(const ParamSet& params, const ForwardCache& cache, const Matrix& upstream,
                    ParamSet& grads, Matrix* input_grad) {
  const std::size_t n_layers = params.layers.size();
  if (cache.activations.size() != n_layers + 1) throw ConfigError("forward cache does not match network");
  const std::size_t batch = cache.activations[0].rows;
  if (upstream.rows != batch || upstream.cols != params.output_dim()) {
    throw ConfigError("upstream shape does not match network output");
  }
  const auto& kern = simd::active_kernels();
  Matrix delta = upstream;
  for (std::size_t k = n_layers; k-- > 0;) {
    const Layer& l = params.layers[k];
    if (k + 1 < n_layers) {
      const Matrix& y = cache.activations[k + 1];
      kern.tanh_backward(y.data.data(), delta.data.data(), delta.data.data(), delta.data.size());
    }
    Layer& gl = grads.layers[k];
    const Matrix& x = cache.activations[k];
    const auto delta_t = transposed(delta.data.data(), batch, l.out);
    kern.gemm(l.out, l.in, batch, delta_t.data(), batch, x.data.data(), l.in, gl.weight.data(), l.in, true);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* row = delta_t.data() + o * batch;
      double acc = 0.0;
      for (std::size_t i = 0; i < batch; ++i) acc += row[i];
      gl.bias[o] += acc;
    }
    if (k > 0 || input_grad != nullptr) {
      Matrix back(batch, l.in);
      kern.gemm(batch, l.in, l.out, delta.data.data(), l.out, l.weight.data(), l.in, back.data.data(), l.in, false);
      delta = std::move(back);
    }
  }
  if (input_grad != nullptr) *input_grad = std::move(delta);
}

}  // namespace coopstyle::nn
