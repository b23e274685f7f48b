#pragma once
// Differentiable primitives. Each checks shapes, rejects non-finite results
// and, when a Tape is active and an input requires a gradient, records its
// vector-Jacobian product.

#include <cstddef>
#include <vector>

#include "trajrest/tensor.hpp"

namespace trajrest::ops {

// Batched matrix product: a[..., M, K] x b[..., K, N]. The leading dimensions
// must agree, or b may be a plain [K, N] matrix shared across the batch.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// Elementwise with numpy-style broadcasting (dimensions aligned on the right).
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// out.shape[i] = x.shape[perm[i]]
template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& perm);

template <typename T>
Tensor<T> transpose(const Tensor<T>& x, std::size_t dim0, std::size_t dim1);

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& xs, std::size_t axis);

// Reductions drop the reduced axes; reducing everything yields shape [1].
// An empty axis list means all axes.
template <typename T>
Tensor<T> sum(const Tensor<T>& x, const std::vector<std::size_t>& axes = {});
template <typename T>
Tensor<T> mean(const Tensor<T>& x, const std::vector<std::size_t>& axes = {});

template <typename T>
Tensor<T> softmax(const Tensor<T>& x);

// Normalizes over the last axis without affine terms.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, T eps = T(1e-5));

// Exact (erf) form.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

// mean((a - b)^2) over all elements, shape [1].
template <typename T>
Tensor<T> mse(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace trajrest::ops
