#include <cmath>
#include <random>
#include <vector>

#include "coopstyle/simd/kernels.hpp"
#include "doctest.h"

using namespace coopstyle;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Straight triple loop, independent of both kernel tables.
void naive_gemm(std::size_t m, std::size_t n, std::size_t k, const std::vector<double>& a, const std::vector<double>& b,
                std::vector<double>& c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double s = accumulate ? c[i * n + j] : 0.0L;
      for (std::size_t p = 0; p < k; ++p) s += static_cast<long double>(a[i * k + p]) * b[p * n + j];
      c[i * n + j] = static_cast<double>(s);
    }
  }
}

void check_gemm(const simd::KernelTable& kt, std::mt19937_64& rng) {
  const std::size_t shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {4, 8, 16}, {13, 64, 9}, {33, 17, 300}, {64, 128, 64}, {500, 3, 2},
                                   {7, 129, 513}};
  for (const auto& s : shapes) {
    const std::size_t m = s[0], n = s[1], k = s[2];
    const auto a = random_vec(m * k, rng);
    const auto b = random_vec(k * n, rng);
    for (bool acc : {false, true}) {
      auto c = random_vec(m * n, rng);
      auto oracle = c;
      kt.gemm(m, n, k, a.data(), k, b.data(), n, c.data(), n, acc);
      naive_gemm(m, n, k, a, b, oracle, acc);
      for (std::size_t i = 0; i < m * n; ++i) {
        REQUIRE(std::abs(c[i] - oracle[i]) <= 1e-13 * static_cast<double>(k + 1));
      }
    }
  }
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar gemm matches a long-double triple loop") {
    std::mt19937_64 rng(1);
    check_gemm(simd::scalar_kernels(), rng);
  }

  TEST_CASE("avx2 gemm matches a long-double triple loop") {
    const auto* kt = simd::avx2_kernels();
    if (kt == nullptr) {
      MESSAGE("AVX2 kernels unavailable on this machine");
      return;
    }
    std::mt19937_64 rng(2);
    check_gemm(*kt, rng);
  }

  TEST_CASE("avx2 gemm honors leading dimensions") {
    const auto* kt = simd::avx2_kernels();
    if (kt == nullptr) return;
    std::mt19937_64 rng(3);
    const std::size_t m = 9, n = 11, k = 6, lda = 10, ldb = 15, ldc = 20;
    const auto a = random_vec(m * lda, rng);
    const auto b = random_vec(k * ldb, rng);
    auto c = random_vec(m * ldc, rng);
    auto ref = c;
    kt->gemm(m, n, k, a.data(), lda, b.data(), ldb, c.data(), ldc, true);
    simd::scalar_kernels().gemm(m, n, k, a.data(), lda, b.data(), ldb, ref.data(), ldc, true);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < ldc; ++j) {
        if (j < n) {
          CHECK(std::abs(c[i * ldc + j] - ref[i * ldc + j]) < 1e-13);
        } else {
          CHECK(c[i * ldc + j] == ref[i * ldc + j]);  // padding untouched
        }
      }
    }
  }

  TEST_CASE("avx2 tanh agrees with std::tanh") {
    const auto* kt = simd::avx2_kernels();
    if (kt == nullptr) return;
    std::mt19937_64 rng(4);
    auto x = random_vec(20000, rng, -25.0, 25.0);
    const auto small = random_vec(5000, rng, -1.0, 1.0);
    x.insert(x.end(), small.begin(), small.end());
    for (double v : {0.0, -0.0, 1e-300, -1e-300, 0.625, -0.625, 0.6250000001, 19.0, 40.0, -40.0, 1e3, -1e3}) x.push_back(v);
    auto y = x;
    kt->tanh_inplace(y.data(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double ref = std::tanh(x[i]);
      REQUIRE(std::abs(y[i] - ref) <= 1e-15 * std::abs(ref));
    }
    CHECK(std::signbit(y[x.size() - 11]));  // tanh(-0) keeps its sign
  }

  TEST_CASE("tanh_backward matches the closed form in both tables") {
    std::mt19937_64 rng(5);
    const auto y = random_vec(1037, rng);
    const auto g = random_vec(1037, rng, -3.0, 3.0);
    std::vector<const simd::KernelTable*> tables{&simd::scalar_kernels()};
    if (simd::avx2_kernels()) tables.push_back(simd::avx2_kernels());
    for (const auto* kt : tables) {
      std::vector<double> out(y.size());
      kt->tanh_backward(y.data(), g.data(), out.data(), y.size());
      for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(out[i] - g[i] * (1.0 - y[i] * y[i])) < 1e-15);
    }
  }

  TEST_CASE("active table is one of the available tables") {
    const auto& active = simd::active_kernels();
    const auto* avx = simd::avx2_kernels();
    CHECK((&active == &simd::scalar_kernels() || (avx != nullptr && &active == avx)));
  }
}
