#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "coopstyle/nn/param_set.hpp"

namespace coopstyle::nn {

/// Row-major dense matrix, one sample per row.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool operator==(const Matrix&) const = default;
};

/// Rows [begin, end) of m as a new matrix.
Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end);

/// Activations of one batched forward pass; activations.front() is the
/// input, activations.back() the network output.
struct ForwardCache {
  std::vector<Matrix> activations;
  const Matrix& output() const { return activations.back(); }
};

/// Batched forward through the active SIMD kernels.
void forward_batch(const ParamSet& params, const Matrix& input, ForwardCache& cache);
Matrix forward_batch(const ParamSet& params, const Matrix& input);

/// Accumulates into `grads` the gradient of sum_rows <upstream_row, output_row>.
/// If input_grad is non-null it receives d/d input (overwritten).
void backward_batch(const ParamSet& params, const ForwardCache& cache, const Matrix& upstream,
                    ParamSet& grads, Matrix* input_grad = nullptr);

}  // namespace coopstyle::nn
