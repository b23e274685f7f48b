#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "trajrest/kernels.hpp"
#include "trajrest/rng.hpp"

namespace trajrest::kernels {
namespace {

template <typename T>
std::vector<T> random_values(std::size_t n, Rng& rng) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
  return v;
}

template <typename T>
class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!avx2_available()) GTEST_SKIP() << "no AVX2 on this machine";
  }
};

using Precisions = ::testing::Types<float, double>;
TYPED_TEST_SUITE(KernelEquivalence, Precisions);

// Odd sizes exercise the scalar tails after the vector body.
constexpr std::size_t kSizes[][3] = {{1, 1, 1}, {3, 5, 7}, {8, 8, 8}, {9, 17, 13}, {16, 33, 31}, {2, 64, 48}};

TYPED_TEST(KernelEquivalence, StreamingKernelsAreBitIdentical) {
  using T = TypeParam;
  const auto& ref = scalar_table<T>();
  const auto& vec = avx2_table<T>();
  ASSERT_EQ(vec.isa, Isa::kAvx2);
  Rng rng(7);
  for (const auto& s : kSizes) {
    const std::size_t m = s[0], n = s[1], k = s[2];
    const auto a = random_values<T>(m * k, rng);
    const auto b = random_values<T>(k * n, rng);
    const auto c0 = random_values<T>(m * n, rng);

    auto c_ref = c0, c_vec = c0;
    ref.gemm_nn(m, n, k, a.data(), b.data(), c_ref.data());
    vec.gemm_nn(m, n, k, a.data(), b.data(), c_vec.data());
    EXPECT_EQ(c_ref, c_vec) << "gemm_nn " << m << "x" << n << "x" << k;

    // gemm_tn reads A as [K, M].
    c_ref = c0;
    c_vec = c0;
    ref.gemm_tn(m, n, k, a.data(), b.data(), c_ref.data());
    vec.gemm_tn(m, n, k, a.data(), b.data(), c_vec.data());
    EXPECT_EQ(c_ref, c_vec) << "gemm_tn " << m << "x" << n << "x" << k;

    const std::size_t len = m * n * k;
    const auto x = random_values<T>(len, rng);
    const auto y0 = random_values<T>(len, rng);
    auto y_ref = y0, y_vec = y0;
    ref.axpy(len, T(0.37), x.data(), y_ref.data());
    vec.axpy(len, T(0.37), x.data(), y_vec.data());
    EXPECT_EQ(y_ref, y_vec);

    std::vector<T> o_ref(len), o_vec(len);
    ref.add(len, x.data(), y0.data(), o_ref.data());
    vec.add(len, x.data(), y0.data(), o_vec.data());
    EXPECT_EQ(o_ref, o_vec);
    ref.mul(len, x.data(), y0.data(), o_ref.data());
    vec.mul(len, x.data(), y0.data(), o_vec.data());
    EXPECT_EQ(o_ref, o_vec);
  }
}

TYPED_TEST(KernelEquivalence, ReductionKernelsAgreeToRounding) {
  using T = TypeParam;
  const auto& ref = scalar_table<T>();
  const auto& vec = avx2_table<T>();
  const double tol = sizeof(T) == 4 ? 1e-5 : 1e-13;
  Rng rng(11);
  for (const auto& s : kSizes) {
    const std::size_t m = s[0], n = s[1], k = s[2];
    const auto a = random_values<T>(m * k, rng);
    const auto b = random_values<T>(n * k, rng);
    std::vector<T> c_ref(m * n, T(0)), c_vec(m * n, T(0));
    ref.gemm_nt(m, n, k, a.data(), b.data(), c_ref.data());
    vec.gemm_nt(m, n, k, a.data(), b.data(), c_vec.data());
    for (std::size_t i = 0; i < c_ref.size(); ++i) {
      EXPECT_NEAR(c_ref[i], c_vec[i], tol * static_cast<double>(k));
    }
    const double d_ref = ref.dot(m * k, a.data(), a.data());
    const double d_vec = vec.dot(m * k, a.data(), a.data());
    EXPECT_NEAR(d_ref, d_vec, tol * static_cast<double>(m * k));
  }
}

// Direct triple loop, independent of both tables.
TEST(KernelOracle, GemmMatchesNaiveLoop) {
  Rng rng(3);
  const std::size_t m = 5, n = 6, k = 7;
  const auto a = random_values<double>(m * k, rng);
  const auto b = random_values<double>(k * n, rng);
  for (Isa isa : {Isa::kScalar, Isa::kAvx2}) {
    const auto& t = isa == Isa::kScalar ? scalar_table<double>() : avx2_table<double>();
    std::vector<double> c(m * n, 0.0);
    t.gemm_nn(m, n, k, a.data(), b.data(), c.data());
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double want = 0.0;
        for (std::size_t p = 0; p < k; ++p) want += a[i * k + p] * b[p * n + j];
        EXPECT_NEAR(c[i * n + j], want, 1e-12);
      }
    }
  }
}

TEST(KernelDispatch, SelectOverridesActiveTable) {
  const Isa before = selected();
  select(Isa::kScalar);
  EXPECT_EQ(active<float>().isa, Isa::kScalar);
  EXPECT_EQ(isa_name(selected()), "scalar");
  if (avx2_available()) {
    select(Isa::kAvx2);
    EXPECT_EQ(active<double>().isa, Isa::kAvx2);
    EXPECT_EQ(isa_name(selected()), "avx2");
  }
  select(before);
}

}  // namespace
}  // namespace trajrest::kernels
