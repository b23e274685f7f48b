#pragma once
// Straight-line tensor programs over the primitive set, and the central
// finite-difference oracle used to verify analytic gradients.

#include <cstddef>
#include <functional>
#include <vector>

#include "trajrest/tensor.hpp"

namespace trajrest {

enum class Prim {
  kMatmul,
  kAdd,
  kMul,
  kScale,
  kReshape,
  kTranspose,
  kConcat,
  kSum,
  kMean,
  kSoftmax,
  kLayerNorm,
  kGelu,
  kMse,
};

// One instruction reads registers `args` and appends its result as a new
// register. Registers 0..n-1 hold the program inputs.
struct Instr {
  Prim prim;
  std::vector<std::size_t> args;
  Shape shape;                     // kReshape target
  std::vector<std::size_t> axes;   // kTranspose (2 axes), kConcat (1 axis), kSum/kMean
  double factor = 1.0;             // kScale
};

struct Program {
  std::vector<Instr> instrs;
};

// Runs the program and returns the final register.
template <typename T>
Tensor<T> eval_graph(const std::vector<Tensor<T>>& inputs, const Program& program);

// max_i |analytic_i - numeric_i| / (|analytic_i| + 1e-12), where numeric_i is
// the central difference (f(x + h e_i) - f(x - h e_i)) / 2h. `loss` must be
// scalar-valued and is evaluated with the current values of `params`, which
// are perturbed in place and restored.
template <typename T>
double finite_diff_check(const std::function<Tensor<T>()>& loss, std::vector<Tensor<T>> params, T h);

// Convenience form for a function of a single tensor.
template <typename T>
double finite_diff_check(const std::function<Tensor<T>(const Tensor<T>&)>& f, const Tensor<T>& point, T h);

}  // namespace trajrest
