#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "trajrest/ops.hpp"
#include "trajrest/optim.hpp"
#include "trajrest/program.hpp"
#include "trajrest/rng.hpp"
#include "trajrest/tensor.hpp"

namespace trajrest {
namespace {

using T64 = Tensor<double>;

T64 random_tensor(const Shape& shape, Rng& rng, bool grad = true, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return T64::from_values(shape, std::move(v), grad);
}

Shape random_shape(Rng& rng, std::size_t rank) {
  Shape s(rank);
  for (auto& d : s) d = 1 + rng.uniform_int(8);
  return s;
}

// Contracts an arbitrary output with fixed random weights so every output
// coordinate carries a distinct, nonzero sensitivity.
T64 contract(const T64& y, std::uint64_t seed) {
  Rng rng(seed);
  T64 w = random_tensor(y.shape(), rng, false, 0.5, 1.5);
  return ops::sum(ops::mul(y, w));
}

// ---- eval_graph ------------------------------------------------------------

Instr op(Prim prim, std::vector<std::size_t> args, double factor = 1.0) {
  Instr in;
  in.prim = prim;
  in.args = std::move(args);
  in.factor = factor;
  return in;
}

TEST(EvalGraph, IdentityMatmulReturnsInput) {
  Rng rng(1);
  T64 x = random_tensor({3, 5}, rng, false);
  T64 eye = T64::from_values({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Program p{{op(Prim::kMatmul, {0, 1})}};
  T64 y = eval_graph<double>({eye, x}, p);
  ASSERT_EQ(y.shape(), x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.values()[i], x.values()[i]);
}

TEST(EvalGraph, SoftmaxOfZerosIsUniform) {
  Program p{{op(Prim::kSoftmax, {0})}};
  T64 y = eval_graph<double>({T64::zeros({3})}, p);
  for (double v : y.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(EvalGraph, LayerNormCentersAndScales) {
  Program p{{op(Prim::kLayerNorm, {0})}};
  T64 y = eval_graph<double>({T64::from_values({3}, {1, 2, 3})}, p);
  double mean = 0, var = 0;
  for (double v : y.values()) mean += v / 3;
  for (double v : y.values()) var += (v - mean) * (v - mean) / 3;
  EXPECT_NEAR(mean, 0.0, 1e-6);
  EXPECT_NEAR(var, 1.0, 1e-4);  // eps = 1e-5 in the denominator
}

TEST(EvalGraph, ShapeMismatchThrows) {
  Program p{{op(Prim::kMatmul, {0, 1})}};
  EXPECT_THROW(eval_graph<double>({T64::zeros({2, 3}), T64::zeros({2, 3})}, p), ShapeError);
  Program q{{op(Prim::kAdd, {0, 1})}};
  EXPECT_THROW(eval_graph<double>({T64::zeros({2, 3}), T64::zeros({4})}, q), ShapeError);
}

TEST(EvalGraph, NonFiniteResultThrows) {
  Program p{{op(Prim::kScale, {0}, 1e308)}};
  EXPECT_THROW(eval_graph<double>({T64::full({2}, 10.0)}, p), NumericError);
}

TEST(EvalGraph, RecordsOnlyWhenGradRequired) {
  Program p{{op(Prim::kGelu, {0}), op(Prim::kSum, {1})}};
  Tape<double> tape;
  eval_graph<double>({T64::full({4}, 0.5)}, p);
  EXPECT_EQ(tape.size(), 0u);
  eval_graph<double>({T64::full({4}, 0.5, true)}, p);
  EXPECT_EQ(tape.size(), 2u);
}

// ---- backward --------------------------------------------------------------

TEST(Backward, SumOfSquares) {
  T64 x = T64::from_values({3}, {1, -2, 3}, true);
  Tape<double> tape;
  tape.backward(ops::sum(ops::mul(x, x)));
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{2, -4, 6}));
}

TEST(Backward, MseOfSelfHasZeroGradient) {
  Rng rng(2);
  T64 x = random_tensor({4, 3}, rng);
  Tape<double> tape;
  tape.backward(ops::mse(x, x));
  for (double g : x.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Backward, LinearMseMatchesFiniteDifferences) {
  Rng rng(3);
  T64 w = random_tensor({4, 4}, rng);
  T64 x = random_tensor({4, 1}, rng, false);
  T64 y = random_tensor({4, 1}, rng, false);
  const double err = finite_diff_check<double>([&] { return ops::mse(ops::matmul(w, x), y); }, {w}, 1e-5);
  EXPECT_LT(err, 1e-6);
}

TEST(Backward, NonScalarLossThrows) {
  T64 x = T64::full({2}, 1.0, true);
  Tape<double> tape;
  EXPECT_THROW(tape.backward(ops::scale(x, 2.0)), GraphError);
}

TEST(Backward, SecondCallWithoutRetentionThrows) {
  T64 x = T64::full({2}, 1.0, true);
  Tape<double> tape;
  T64 loss = ops::sum(ops::mul(x, x));
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), GraphError);
}

TEST(Backward, RetainedGraphAccumulates) {
  T64 x = T64::from_values({2}, {1, 2}, true);
  Tape<double> tape;
  T64 loss = ops::sum(ops::mul(x, x));
  tape.backward(loss, RetainGraph::kYes);
  tape.backward(loss, RetainGraph::kYes);
  EXPECT_EQ(x.grad()[0], 4.0);
  EXPECT_EQ(x.grad()[1], 8.0);
}

TEST(Backward, AliasesKeepSeparateGradients) {
  T64 x = T64::from_values({2}, {1, 2}, true);
  T64 a = x.alias_with_own_grad();
  Tape<double> tape;
  tape.backward(ops::sum(ops::mul(a, a)));
  EXPECT_FALSE(x.has_grad());
  EXPECT_EQ(a.grad()[1], 4.0);
  EXPECT_EQ(a.values().data(), x.values().data());
}

// ---- finite_diff_check -----------------------------------------------------

TEST(FiniteDiff, SumHasZeroError) {
  Rng rng(4);
  T64 p = random_tensor({5}, rng, false);
  const double err = finite_diff_check<double>(
      std::function<T64(const T64&)>([](const T64& x) { return ops::sum(x); }), p, 1e-5);
  // The central difference of a linear function is exact up to the rounding
  // of x +/- h.
  EXPECT_LT(err, 1e-10);
}

TEST(FiniteDiff, SquareAtKnownPoint) {
  T64 p = T64::from_values({2}, {1, 2});
  const double err = finite_diff_check<double>(
      std::function<T64(const T64&)>([](const T64& x) { return ops::sum(ops::mul(x, x)); }), p, 1e-5);
  EXPECT_LT(err, 1e-8);
}

TEST(FiniteDiff, NonScalarFunctionThrows) {
  T64 p = T64::from_values({2}, {1, 2});
  EXPECT_THROW(finite_diff_check<double>(
                   std::function<T64(const T64&)>([](const T64& x) { return ops::scale(x, 2.0); }), p, 1e-5),
               ShapeError);
}

// ---- every primitive against central differences ---------------------------

class PrimitiveGradient : public ::testing::TestWithParam<int> {};

TEST_P(PrimitiveGradient, MatchesFiniteDifferences) {
  const int trial = GetParam();
  Rng rng(derive_seed(99, trial));
  std::vector<std::pair<const char*, std::function<double()>>> cases;

  const Shape s3 = random_shape(rng, 3);
  const Shape s2 = random_shape(rng, 2);
  const std::size_t k = 1 + rng.uniform_int(8);

  cases.emplace_back("matmul", [&] {
    T64 a = random_tensor({s3[0], s3[1], k}, rng);
    T64 b = random_tensor({s3[0], k, s3[2]}, rng);
    return finite_diff_check<double>([&] { return contract(ops::matmul(a, b), 1); }, {a, b}, 1e-5);
  });
  cases.emplace_back("matmul_shared", [&] {
    T64 a = random_tensor({s3[0], s3[1], k}, rng);
    T64 b = random_tensor({k, s3[2]}, rng);
    return finite_diff_check<double>([&] { return contract(ops::matmul(a, b), 2); }, {a, b}, 1e-5);
  });
  cases.emplace_back("add_broadcast", [&] {
    T64 a = random_tensor(s3, rng);
    T64 b = random_tensor({s3[2]}, rng);
    return finite_diff_check<double>([&] { return contract(ops::add(a, b), 3); }, {a, b}, 1e-5);
  });
  cases.emplace_back("mul_broadcast", [&] {
    T64 a = random_tensor(s3, rng);
    T64 b = random_tensor({s3[0], 1, s3[2]}, rng);
    return finite_diff_check<double>([&] { return contract(ops::mul(a, b), 4); }, {a, b}, 1e-5);
  });
  cases.emplace_back("scale", [&] {
    T64 a = random_tensor(s3, rng);
    return finite_diff_check<double>([&] { return contract(ops::scale(a, -1.7), 5); }, {a}, 1e-5);
  });
  cases.emplace_back("reshape", [&] {
    T64 a = random_tensor(s3, rng);
    return finite_diff_check<double>(
        [&] { return contract(ops::reshape(a, {s3[0] * s3[1], s3[2]}), 6); }, {a}, 1e-5);
  });
  cases.emplace_back("transpose", [&] {
    T64 a = random_tensor(s3, rng);
    return finite_diff_check<double>([&] { return contract(ops::transpose(a, 0, 2), 7); }, {a}, 1e-5);
  });
  cases.emplace_back("permute", [&] {
    T64 a = random_tensor(s3, rng);
    return finite_diff_check<double>([&] { return contract(ops::permute(a, {1, 2, 0}), 8); }, {a}, 1e-5);
  });
  cases.emplace_back("concat", [&] {
    T64 a = random_tensor(s3, rng);
    T64 b = random_tensor({s3[0], k, s3[2]}, rng);
    return finite_diff_check<double>([&] { return contract(ops::concat<double>({a, b}, 1), 9); }, {a, b}, 1e-5);
  });
  cases.emplace_back("sum_axes", [&] {
    T64 a = random_tensor(s3, rng);
    return finite_diff_check<double>([&] { return contract(ops::sum(a, {0, 2}), 10); }, {a}, 1e-5);
  });
  cases.emplace_back("mean_axes", [&] {
    T64 a = random_tensor(s3, rng);
    return finite_diff_check<double>([&] { return contract(ops::mean(a, {1}), 11); }, {a}, 1e-5);
  });
  cases.emplace_back("softmax", [&] {
    T64 a = random_tensor(s3, rng, true, -2, 2);
    return finite_diff_check<double>([&] { return contract(ops::softmax(a), 12); }, {a}, 1e-5);
  });
  cases.emplace_back("layer_norm", [&] {
    T64 a = random_tensor(s2[1] < 2 ? Shape{s2[0], 2} : s2, rng);
    return finite_diff_check<double>([&] { return contract(ops::layer_norm(a), 13); }, {a}, 1e-5);
  });
  cases.emplace_back("gelu", [&] {
    T64 a = random_tensor(s3, rng, true, -3, 3);
    return finite_diff_check<double>([&] { return contract(ops::gelu(a), 14); }, {a}, 1e-5);
  });
  cases.emplace_back("mse", [&] {
    T64 a = random_tensor(s3, rng);
    T64 b = random_tensor(s3, rng);
    return finite_diff_check<double>([&] { return ops::mse(a, b); }, {a, b}, 1e-5);
  });

  for (auto& [name, run] : cases) {
    EXPECT_LT(run(), 1e-6) << name << " (trial " << trial << ")";
  }
}

INSTANTIATE_TEST_SUITE_P(RandomShapes, PrimitiveGradient, ::testing::Range(0, 6));

TEST(Primitives, Deterministic) {
  Rng rng(5);
  T64 a = random_tensor({6, 8, 7}, rng, false);
  T64 b = random_tensor({7, 5}, rng, false);
  auto run = [&] { return ops::softmax(ops::gelu(ops::layer_norm(ops::matmul(a, b)))); };
  T64 y1 = run(), y2 = run();
  for (std::size_t i = 0; i < y1.numel(); ++i) ASSERT_EQ(y1.values()[i], y2.values()[i]);
}

// ---- optimizer -------------------------------------------------------------

OptimizerConfig default_optimizer() { return OptimizerConfig{}; }

TEST(LearningRate, WarmupExamples) {
  const auto cfg = default_optimizer();
  EXPECT_EQ(lr_at_step(cfg, 0), 0.0);
  EXPECT_DOUBLE_EQ(lr_at_step(cfg, 100), 2e-5);
  EXPECT_DOUBLE_EQ(lr_at_step(cfg, 50), 1e-5);
  EXPECT_DOUBLE_EQ(lr_at_step(cfg, 5000), 2e-5);
}

TEST(LearningRate, MonotoneThenConstant) {
  const auto cfg = default_optimizer();
  for (std::int64_t s = 1; s <= 300; ++s) {
    EXPECT_GE(lr_at_step(cfg, s), lr_at_step(cfg, s - 1));
    if (s > 100) {
      EXPECT_EQ(lr_at_step(cfg, s), cfg.base_lr);
    }
  }
  EXPECT_THROW(lr_at_step(cfg, -1), std::invalid_argument);
}

std::vector<T64> params_with_grad(const std::vector<std::vector<double>>& grads) {
  std::vector<T64> out;
  for (const auto& g : grads) {
    T64 p = T64::zeros({g.size()}, true);
    std::copy(g.begin(), g.end(), p.mutable_grad().begin());
    out.push_back(p);
  }
  return out;
}

TEST(ClipGradNorm, Examples) {
  auto under = params_with_grad({{0.006, 0.008}});  // norm 0.01
  EXPECT_EQ(clip_grad_norm<double>(under, 0.05), 1.0);
  EXPECT_EQ(under[0].grad()[0], 0.006);

  auto over = params_with_grad({{0.06}, {0.08}});  // norm 0.10
  EXPECT_NEAR(clip_grad_norm<double>(over, 0.05), 0.5, 1e-15);
  EXPECT_NEAR(over[0].grad()[0], 0.03, 1e-15);
  EXPECT_NEAR(over[1].grad()[0], 0.04, 1e-15);

  auto zero = params_with_grad({{0.0, 0.0}});
  EXPECT_EQ(clip_grad_norm<double>(zero, 0.05), 1.0);
  EXPECT_EQ(zero[0].grad()[1], 0.0);
}

TEST(ClipGradNorm, Idempotent) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> g(3, std::vector<double>(4));
    for (auto& v : g) {
      for (auto& x : v) x = rng.uniform(-0.1, 0.1);
    }
    auto once = params_with_grad(g);
    clip_grad_norm<double>(once, 0.05);
    auto twice = params_with_grad(g);
    clip_grad_norm<double>(twice, 0.05);
    clip_grad_norm<double>(twice, 0.05);
    for (std::size_t i = 0; i < once.size(); ++i) {
      for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(once[i].grad()[j], twice[i].grad()[j], 1e-17);
    }
  }
}

TEST(ClipGradNorm, NonFiniteThrows) {
  auto p = params_with_grad({{std::nan("")}});
  EXPECT_THROW(clip_grad_norm<double>(p, 0.05), NumericError);
}

TEST(AdamW, ZeroGradientZeroDecayIsIdentity) {
  OptimizerConfig cfg;
  cfg.weight_decay = 0.0;
  T64 p = T64::from_values({3}, {0.5, -1.0, 2.0}, true);
  p.mutable_grad();
  AdamW<double> opt(cfg, {p});
  for (int i = 0; i < 5; ++i) opt.step(1e-3);
  EXPECT_EQ(std::vector<double>(p.values().begin(), p.values().end()), (std::vector<double>{0.5, -1.0, 2.0}));
  EXPECT_EQ(opt.step_count(), 5);
}

TEST(AdamW, DecoupledDecayClosedForm) {
  T64 p = T64::scalar(1.0, true);
  p.mutable_grad();
  AdamW<double> opt(default_optimizer(), {p});
  opt.step(2e-5);
  EXPECT_NEAR(p.item(), 1.0 - 2e-5 * 3e-2, 1e-15);
  EXPECT_NEAR(p.item(), 0.9999994, 1e-15);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  OptimizerConfig cfg;
  cfg.weight_decay = 0.0;
  T64 p = T64::scalar(0.0, true);
  p.mutable_grad()[0] = 1.0;
  AdamW<double> opt(cfg, {p});
  opt.step(2e-5);
  EXPECT_NEAR(p.item(), -2e-5, 1e-14);
  EXPECT_EQ(opt.first_moments().size(), 1u);
  EXPECT_EQ(opt.second_moments()[0].size(), 1u);
}

TEST(AdamW, ScheduledStepsCountFromOne) {
  T64 p = T64::scalar(0.0, true);
  p.mutable_grad()[0] = 1.0;
  AdamW<double> opt(default_optimizer(), {p});
  EXPECT_DOUBLE_EQ(opt.step_scheduled(), 2e-5 / 100);
  EXPECT_DOUBLE_EQ(opt.step_scheduled(), 2 * 2e-5 / 100);
  EXPECT_EQ(opt.step_count(), 2);
}

TEST(AdamW, MissingGradientThrows) {
  T64 p = T64::scalar(0.0, true);
  AdamW<double> opt(default_optimizer(), {p});
  EXPECT_THROW(opt.step(1e-3), std::logic_error);
}

TEST(AdamW, NonFiniteUpdateThrows) {
  T64 p = T64::scalar(1e308, true);
  p.mutable_grad()[0] = 1.0;
  OptimizerConfig cfg;
  cfg.weight_decay = -1e10;
  AdamW<double> opt(cfg, {p});
  EXPECT_THROW(opt.step(1e10), NumericError);
}

}  // namespace
}  // namespace trajrest
