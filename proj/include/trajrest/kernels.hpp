#pragma once
// Dense arithmetic kernels behind the tensor library.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The active table is chosen once per process from the CPU's
// capabilities and can be forced with TRAJREST_KERNELS=scalar|avx2.
//
// Kernels that only stream (axpy, add, mul, gemm_nn, gemm_tn) keep the
// reference accumulation order and are bit-identical across variants.
// Reduction kernels (dot, gemm_nt) split accumulators across lanes and agree
// with the reference to rounding only.

#include <cstddef>
#include <string_view>

namespace trajrest::kernels {

enum class Isa { kScalar, kAvx2 };

template <typename T>
struct KernelTable {
  Isa isa;
  // C[M,N] += A[M,K] * B[K,N]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c);
  // C[M,N] += A[M,K] * B[N,K]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c);
  // C[M,N] += A[K,M]^T * B[K,N]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c);
  // y += alpha * x
  void (*axpy)(std::size_t n, T alpha, const T* x, T* y);
  void (*add)(std::size_t n, const T* a, const T* b, T* out);
  void (*mul)(std::size_t n, const T* a, const T* b, T* out);
  T (*dot)(std::size_t n, const T* a, const T* b);
};

template <typename T>
const KernelTable<T>& scalar_table();

// Falls back to the scalar table when the build or the CPU lacks AVX2.
template <typename T>
const KernelTable<T>& avx2_table();

bool avx2_available();

template <typename T>
const KernelTable<T>& active();

// Overrides the process-wide selection. Not thread-safe; call before work starts.
void select(Isa isa);
Isa selected();

std::string_view isa_name(Isa isa);

}  // namespace trajrest::kernels
