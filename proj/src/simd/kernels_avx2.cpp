// AVX2 + FMA kernels. This file is compiled with -mavx2 -mfma and only
// entered after a CPUID check in dispatch.cpp.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "coopstyle/simd/kernels.hpp"

namespace coopstyle::simd {
namespace {

constexpr std::size_t kBlockK = 256;

inline void tile_4x8(std::size_t kc, const double* a, std::size_t lda, const double* b,
                     std::size_t ldb, double* c, std::size_t ldc, bool load_c) {
  __m256d c00, c01, c10, c11, c20, c21, c30, c31;
  if (load_c) {
    c00 = _mm256_loadu_pd(c + 0 * ldc);
    c01 = _mm256_loadu_pd(c + 0 * ldc + 4);
    c10 = _mm256_loadu_pd(c + 1 * ldc);
    c11 = _mm256_loadu_pd(c + 1 * ldc + 4);
    c20 = _mm256_loadu_pd(c + 2 * ldc);
    c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
    c30 = _mm256_loadu_pd(c + 3 * ldc);
    c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
  } else {
    c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_pd();
  }
  for (std::size_t p = 0; p < kc; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
    const __m256d b1 = _mm256_loadu_pd(b + p * ldb + 4);
    __m256d av = _mm256_broadcast_sd(a + 0 * lda + p);
    c00 = _mm256_fmadd_pd(av, b0, c00);
    c01 = _mm256_fmadd_pd(av, b1, c01);
    av = _mm256_broadcast_sd(a + 1 * lda + p);
    c10 = _mm256_fmadd_pd(av, b0, c10);
    c11 = _mm256_fmadd_pd(av, b1, c11);
    av = _mm256_broadcast_sd(a + 2 * lda + p);
    c20 = _mm256_fmadd_pd(av, b0, c20);
    c21 = _mm256_fmadd_pd(av, b1, c21);
    av = _mm256_broadcast_sd(a + 3 * lda + p);
    c30 = _mm256_fmadd_pd(av, b0, c30);
    c31 = _mm256_fmadd_pd(av, b1, c31);
  }
  _mm256_storeu_pd(c + 0 * ldc, c00);
  _mm256_storeu_pd(c + 0 * ldc + 4, c01);
  _mm256_storeu_pd(c + 1 * ldc, c10);
  _mm256_storeu_pd(c + 1 * ldc + 4, c11);
  _mm256_storeu_pd(c + 2 * ldc, c20);
  _mm256_storeu_pd(c + 2 * ldc + 4, c21);
  _mm256_storeu_pd(c + 3 * ldc, c30);
  _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

inline void tile_1x4(std::size_t kc, const double* a, const double* b, std::size_t ldb, double* c,
                     bool load_c) {
  __m256d acc = load_c ? _mm256_loadu_pd(c) : _mm256_setzero_pd();
  for (std::size_t p = 0; p < kc; ++p) {
    acc = _mm256_fmadd_pd(_mm256_broadcast_sd(a + p), _mm256_loadu_pd(b + p * ldb), acc);
  }
  _mm256_storeu_pd(c, acc);
}

inline void tile_1x1(std::size_t kc, const double* a, const double* b, std::size_t ldb, double* c,
                     bool load_c) {
  double acc = load_c ? *c : 0.0;
  for (std::size_t p = 0; p < kc; ++p) acc = std::fma(a[p], b[p * ldb], acc);
  *c = acc;
}

void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  if (k == 0) {
    if (!accumulate) {
      for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, 0.0);
    }
    return;
  }
  for (std::size_t p0 = 0; p0 < k; p0 += kBlockK) {
    const std::size_t kc = std::min(kBlockK, k - p0);
    const bool load_c = accumulate || p0 > 0;
    const double* ap = a + p0;
    const double* bp = b + p0 * ldb;
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
      std::size_t j = 0;
      for (; j + 8 <= n; j += 8) tile_4x8(kc, ap + i * lda, lda, bp + j, ldb, c + i * ldc + j, ldc, load_c);
      for (std::size_t r = 0; r < 4; ++r) {
        std::size_t jj = j;
        for (; jj + 4 <= n; jj += 4) tile_1x4(kc, ap + (i + r) * lda, bp + jj, ldb, c + (i + r) * ldc + jj, load_c);
        for (; jj < n; ++jj) tile_1x1(kc, ap + (i + r) * lda, bp + jj, ldb, c + (i + r) * ldc + jj, load_c);
      }
    }
    for (; i < m; ++i) {
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) tile_1x4(kc, ap + i * lda, bp + j, ldb, c + i * ldc + j, load_c);
      for (; j < n; ++j) tile_1x1(kc, ap + i * lda, bp + j, ldb, c + i * ldc + j, load_c);
    }
  }
}

inline __m256d polevl3(__m256d x, double c0, double c1, double c2) {
  return _mm256_fmadd_pd(_mm256_fmadd_pd(_mm256_set1_pd(c0), x, _mm256_set1_pd(c1)), x,
                         _mm256_set1_pd(c2));
}

// exp(x) for x in [-41, 0]: Cephes range reduction and Pade form.
inline __m256d exp_nonpositive(__m256d x) {
  const __m256d fx = _mm256_round_pd(_mm256_fmadd_pd(x, _mm256_set1_pd(1.4426950408889634073599),
                                                     _mm256_set1_pd(0.5)),
                                     _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
  x = _mm256_fnmadd_pd(fx, _mm256_set1_pd(6.93145751953125E-1), x);
  x = _mm256_fnmadd_pd(fx, _mm256_set1_pd(1.42860682030941723212E-6), x);
  const __m256d xx = _mm256_mul_pd(x, x);
  const __m256d px = _mm256_mul_pd(
      x, polevl3(xx, 1.26177193074810590878E-4, 3.02994407707441961300E-2, 9.99999999999999999910E-1));
  __m256d qx = _mm256_fmadd_pd(
      polevl3(xx, 3.00198505138664455042E-6, 2.52448340349684104192E-3, 2.27265548208155028766E-1), xx,
      _mm256_set1_pd(2.00000000000000000009E0));
  __m256d r = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  r = _mm256_fmadd_pd(_mm256_set1_pd(2.0), r, _mm256_set1_pd(1.0));
  const __m128i n32 = _mm256_cvtpd_epi32(fx);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  n64 = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(r, _mm256_castsi256_pd(n64));
}

// tanh split at |x| = 0.625 following Cephes: rational form near zero,
// (1 - e)/(1 + e) with e = exp(-2|x|) elsewhere.
inline __m256d tanh_vec(__m256d x) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d ax = _mm256_min_pd(_mm256_andnot_pd(sign_mask, x), _mm256_set1_pd(20.0));
  const __m256d e = exp_nonpositive(_mm256_mul_pd(_mm256_set1_pd(-2.0), ax));
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d big = _mm256_div_pd(_mm256_sub_pd(one, e), _mm256_add_pd(one, e));
  big = _mm256_or_pd(big, _mm256_and_pd(sign_mask, x));

  const __m256d s = _mm256_mul_pd(x, x);
  const __m256d p = polevl3(s, -9.64399179425052238628E-1, -9.92877231001918586564E1,
                            -1.61468768441708447952E3);
  __m256d q = _mm256_add_pd(s, _mm256_set1_pd(1.12811678491632931402E2));
  q = _mm256_fmadd_pd(q, s, _mm256_set1_pd(2.23548839060100448583E3));
  q = _mm256_fmadd_pd(q, s, _mm256_set1_pd(4.84406305325125486048E3));
  __m256d small = _mm256_fmadd_pd(_mm256_mul_pd(x, s), _mm256_div_pd(p, q), x);
  small = _mm256_or_pd(_mm256_andnot_pd(sign_mask, small), _mm256_and_pd(sign_mask, x));  // keeps -0

  const __m256d use_big = _mm256_cmp_pd(ax, _mm256_set1_pd(0.625), _CMP_GT_OQ);
  return _mm256_blendv_pd(small, big, use_big);
}

void tanh_avx2(double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, tanh_vec(_mm256_loadu_pd(x + i)));
  if (i < n) {
    alignas(32) double tail[4] = {0.0, 0.0, 0.0, 0.0};
    std::copy(x + i, x + n, tail);
    _mm256_store_pd(tail, tanh_vec(_mm256_load_pd(tail)));
    std::copy(tail, tail + (n - i), x + i);
  }
}

void tanh_backward_avx2(const double* y, const double* g, double* out, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yv = _mm256_loadu_pd(y + i);
    const __m256d d = _mm256_fnmadd_pd(yv, yv, one);
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(g + i), d));
  }
  for (; i < n; ++i) out[i] = g[i] * (1.0 - y[i] * y[i]);
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{"avx2", &gemm_avx2, &tanh_avx2, &tanh_backward_avx2};
  return table;
}

}  // namespace coopstyle::simd
