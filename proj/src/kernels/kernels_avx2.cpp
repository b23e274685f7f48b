#include "trajrest/kernels.hpp"

#if defined(TRAJREST_HAVE_AVX2)
#include <immintrin.h>
#endif

namespace trajrest::kernels {

#if defined(TRAJREST_HAVE_AVX2)
namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using Reg = __m256;
  static constexpr std::size_t kWidth = 8;
  static Reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, Reg v) { _mm256_storeu_ps(p, v); }
  static Reg set1(float v) { return _mm256_set1_ps(v); }
  static Reg zero() { return _mm256_setzero_ps(); }
  static Reg add(Reg a, Reg b) { return _mm256_add_ps(a, b); }
  static Reg mul(Reg a, Reg b) { return _mm256_mul_ps(a, b); }
  static float hsum(Reg v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

template <>
struct Vec<double> {
  using Reg = __m256d;
  static constexpr std::size_t kWidth = 4;
  static Reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, Reg v) { _mm256_storeu_pd(p, v); }
  static Reg set1(double v) { return _mm256_set1_pd(v); }
  static Reg zero() { return _mm256_setzero_pd(); }
  static Reg add(Reg a, Reg b) { return _mm256_add_pd(a, b); }
  static Reg mul(Reg a, Reg b) { return _mm256_mul_pd(a, b); }
  static double hsum(Reg v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

// Shared body of gemm_nn / gemm_tn: a row of C is accumulated in registers over
// the whole reduction dimension, one p at a time, which is the reference order.
// a_at(p) returns the scalar multiplier for row i at reduction index p.
template <typename T, typename AAt>
inline void accumulate_row(std::size_t n, std::size_t k, AAt a_at, const T* b, T* crow) {
  using V = Vec<T>;
  constexpr std::size_t w = V::kWidth;
  std::size_t j = 0;
  for (; j + 4 * w <= n; j += 4 * w) {
    auto c0 = V::load(crow + j);
    auto c1 = V::load(crow + j + w);
    auto c2 = V::load(crow + j + 2 * w);
    auto c3 = V::load(crow + j + 3 * w);
    for (std::size_t p = 0; p < k; ++p) {
      const auto s = V::set1(a_at(p));
      const T* brow = b + p * n + j;
      c0 = V::add(c0, V::mul(s, V::load(brow)));
      c1 = V::add(c1, V::mul(s, V::load(brow + w)));
      c2 = V::add(c2, V::mul(s, V::load(brow + 2 * w)));
      c3 = V::add(c3, V::mul(s, V::load(brow + 3 * w)));
    }
    V::store(crow + j, c0);
    V::store(crow + j + w, c1);
    V::store(crow + j + 2 * w, c2);
    V::store(crow + j + 3 * w, c3);
  }
  for (; j + w <= n; j += w) {
    auto c0 = V::load(crow + j);
    for (std::size_t p = 0; p < k; ++p) {
      c0 = V::add(c0, V::mul(V::set1(a_at(p)), V::load(b + p * n + j)));
    }
    V::store(crow + j, c0);
  }
  for (; j < n; ++j) {
    T acc = crow[j];
    for (std::size_t p = 0; p < k; ++p) acc = acc + a_at(p) * b[p * n + j];
    crow[j] = acc;
  }
}

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    accumulate_row<T>(n, k, [arow](std::size_t p) { return arow[p]; }, b, c + i * n);
  }
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    accumulate_row<T>(n, k, [a, m, i](std::size_t p) { return a[p * m + i]; }, b, c + i * n);
  }
}

template <typename T>
T dot(std::size_t n, const T* a, const T* b) {
  using V = Vec<T>;
  constexpr std::size_t w = V::kWidth;
  auto acc0 = V::zero();
  auto acc1 = V::zero();
  std::size_t i = 0;
  for (; i + 2 * w <= n; i += 2 * w) {
    acc0 = V::add(acc0, V::mul(V::load(a + i), V::load(b + i)));
    acc1 = V::add(acc1, V::mul(V::load(a + i + w), V::load(b + i + w)));
  }
  for (; i + w <= n; i += w) acc0 = V::add(acc0, V::mul(V::load(a + i), V::load(b + i)));
  T acc = V::hsum(V::add(acc0, acc1));
  for (; i < n; ++i) acc = acc + a[i] * b[i];
  return acc;
}

template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot<T>(k, arow, b + j * k);
  }
}

template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  using V = Vec<T>;
  const auto s = V::set1(alpha);
  std::size_t i = 0;
  for (; i + V::kWidth <= n; i += V::kWidth) {
    V::store(y + i, V::add(V::load(y + i), V::mul(s, V::load(x + i))));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

template <typename T>
void add(std::size_t n, const T* a, const T* b, T* out) {
  using V = Vec<T>;
  std::size_t i = 0;
  for (; i + V::kWidth <= n; i += V::kWidth) V::store(out + i, V::add(V::load(a + i), V::load(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void mul(std::size_t n, const T* a, const T* b, T* out) {
  using V = Vec<T>;
  std::size_t i = 0;
  for (; i + V::kWidth <= n; i += V::kWidth) V::store(out + i, V::mul(V::load(a + i), V::load(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
constexpr KernelTable<T> kTable{Isa::kAvx2, gemm_nn<T>, gemm_nt<T>, gemm_tn<T>,
                                axpy<T>,    add<T>,     mul<T>,     dot<T>};

}  // namespace

bool avx2_available() {
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  return supported;
}

template <typename T>
const KernelTable<T>& avx2_table() {
  if (!avx2_available()) return scalar_table<T>();
  return kTable<T>;
}

#else

bool avx2_available() { return false; }

template <typename T>
const KernelTable<T>& avx2_table() {
  return scalar_table<T>();
}

#endif

template const KernelTable<float>& avx2_table<float>();
template const KernelTable<double>& avx2_table<double>();

}  // namespace trajrest::kernels
