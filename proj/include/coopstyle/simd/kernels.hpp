#pragma once

// Dense double-precision kernels behind the batched MLP passes.
//
// Every kernel has a scalar reference implementation. Vector variants are
// compiled into separate translation units with their own ISA flags and
// picked once at startup from CPUID. Setting COOPSTYLE_SIMD=scalar forces
// the reference path.

#include <cstddef>
#include <string_view>

namespace coopstyle::simd {

struct KernelTable {
  std::string_view name;

  // C[m x n] (+)= A[m x k] * B[k x n]; all row-major with leading dimensions.
  // When accumulate is false C is overwritten.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);

  // x[i] = tanh(x[i]).
  void (*tanh_inplace)(double* x, std::size_t n);

  // out[i] = g[i] * (1 - y[i]^2); derivative of tanh expressed through its output.
  void (*tanh_backward)(const double* y, const double* g, double* out, std::size_t n);
};

const KernelTable& scalar_kernels();

/// AVX2+FMA kernels, or nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2_kernels();

/// Table chosen for this process; stable for the process lifetime.
const KernelTable& active_kernels();

}  // namespace coopstyle::simd
