#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_util.hpp"
#include "trajrest/optim.hpp"
#include "trajrest/sampler.hpp"

namespace trajrest {
namespace {

using testing::random_image;

TEST(ShiftTimesteps, Examples) {
  const std::vector<double> ts{0.0, 0.1, 0.5, 0.9, 1.0};
  EXPECT_EQ(shift_timesteps(ts, 1.0), ts);
  const auto s5 = shift_timesteps(ts, 5.0);
  EXPECT_EQ(s5.front(), 0.0);
  EXPECT_EQ(s5.back(), 1.0);
  EXPECT_NEAR(s5[2], 2.5 / 3.0, 1e-15);
  // 1 + (s - 1) is not s in floating point for these.
  for (double s : {0.1, 0.3, 7.7, 1e-3}) EXPECT_EQ(shift_timesteps({0.0, 1.0}, s), (std::vector<double>{0.0, 1.0}));
  EXPECT_THROW(shift_timesteps(ts, 0.0), std::invalid_argument);
  EXPECT_THROW(shift_timesteps(ts, -2.0), std::invalid_argument);
}

TEST(ShiftTimesteps, StrictlyMonotone) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> ts(2 + rng.uniform_int(40));
    for (auto& t : ts) t = rng.uniform();
    std::sort(ts.begin(), ts.end());
    const double s = std::exp(rng.uniform(-3, 3));
    const auto out = shift_timesteps(ts, s);
    for (std::size_t i = 1; i < ts.size(); ++i) {
      if (ts[i] > ts[i - 1]) {
        EXPECT_GT(out[i], out[i - 1]);
      }
    }
  }
}

TEST(SamplingGrid, RunsZeroToOneAndSpendsStepsAtHighNoise) {
  const auto g = sampling_grid(50, 5.0);
  ASSERT_EQ(g.size(), 51u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
  // Shift > 1 makes the first steps (near pure noise) the smallest.
  EXPECT_LT(g[1] - g[0], g[50] - g[49]);
  EXPECT_EQ(sampling_grid(4, 1.0), (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
}

TEST(CfgCombine, Examples) {
  const std::vector<double> u{0.1, -2.0, 3.3}, c{0.7, 5.0, -1.25};
  EXPECT_EQ(cfg_combine(u, c, 1.0), c);
  EXPECT_EQ(cfg_combine(u, c, 0.0), u);
  EXPECT_EQ(cfg_combine(std::vector<double>{0}, std::vector<double>{1}, 5.0), std::vector<double>{5.0});
  EXPECT_THROW(cfg_combine(u, std::vector<double>{1}, 2.0), ShapeError);
}

TEST(CfgCombine, AffineInScale) {
  Rng rng(2);
  std::vector<double> u(10), c(10);
  for (auto& v : u) v = rng.uniform(-1, 1);
  for (auto& v : c) v = rng.uniform(-1, 1);
  const auto a = cfg_combine(u, c, 2.0), b = cfg_combine(u, c, 6.0), mid = cfg_combine(u, c, 4.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    EXPECT_NEAR(mid[i], 0.5 * (a[i] + b[i]), 1e-14);
    EXPECT_NEAR(mid[i], u[i] + 4.0 * (c[i] - u[i]), 1e-14);
  }
}

TEST(SamplerConfig, Validation) {
  SamplerConfig c;
  EXPECT_EQ(c.steps, 50);
  EXPECT_EQ(c.guidance_scale, 5.0);
  EXPECT_EQ(c.shift, 5.0);
  EXPECT_NO_THROW(c.validate());
  c.steps = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SamplerConfig{};
  c.guidance_scale = -0.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SamplerConfig{};
  c.shift = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(IntegrateFlow, IsEulerOnTheShiftedGrid) {
  const VelocityFn<double> vel = [](const std::vector<double>& x, double tau) {
    return std::vector<double>{std::sin(x[0]) + tau, -x[1]};
  };
  const auto got = integrate_flow<double>({0.3, 1.0}, 7, 3.0, vel);
  const auto grid = sampling_grid(7, 3.0);
  std::vector<double> x{0.3, 1.0};
  for (int i = 0; i < 7; ++i) {
    const double dt = grid[i + 1] - grid[i];
    const std::vector<double> v{std::sin(x[0]) + grid[i], -x[1]};
    x = {x[0] + dt * v[0], x[1] + dt * v[1]};
  }
  EXPECT_EQ(got, x);
}

// dx/dtau = target - x has the closed form x(1) = target + (x0 - target) / e.
TEST(IntegrateFlow, ErrorShrinksWithSteps) {
  const std::vector<double> target{0.9, 0.1, 0.5}, x0{-1.0, 2.0, 0.0};
  const VelocityFn<double> vel = [&](const std::vector<double>& x, double) {
    std::vector<double> v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) v[i] = target[i] - x[i];
    return v;
  };
  auto error = [&](int steps) {
    const auto x = integrate_flow<double>(x0, steps, 5.0, vel);
    double e = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      e = std::max(e, std::abs(x[i] - (target[i] + (x0[i] - target[i]) * std::exp(-1.0))));
    }
    return e;
  };
  EXPECT_LT(error(50), error(5));
  EXPECT_LT(error(500), error(50));
}

TEST(IntegrateFlow, NonFiniteStateThrows) {
  const VelocityFn<double> vel = [](const std::vector<double>& x, double tau) {
    return std::vector<double>(x.size(), tau > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 1.0);
  };
  EXPECT_THROW(integrate_flow<double>({0.0}, 10, 1.0, vel), NumericError);
}

ModelConfig small(ModelMode mode) {
  ModelConfig c;
  c.patch_size = 4;
  c.embed_dim = 16;
  c.layers = 1;
  c.heads = 2;
  c.frame_count = 3;
  c.image_size = 8;
  c.mode = mode;
  return c;
}

ModelParams<double> random_params(ModelMode mode, std::uint64_t seed) {
  auto p = init_model<double>(small(mode), seed);
  Rng rng(seed + 1);
  for (auto& t : p.tensors) {
    for (auto& v : t.mutable_values()) v = 0.2 * rng.normal();
  }
  return p;
}

TEST(SampleClip, FlowIsSeedDeterministicAndClamped) {
  const auto p = random_params(ModelMode::kFlow, 3);
  Rng img_rng(4);
  const Image anchor = random_image(8, 8, 3, img_rng);
  SamplerConfig cfg;
  cfg.steps = 6;
  Rng a(5), b(5);
  const auto c1 = sample_clip(p, anchor, cfg, a);
  const auto c2 = sample_clip(p, anchor, cfg, b);
  ASSERT_EQ(c1.frames.size(), 3u);
  for (std::size_t f = 0; f < 3; ++f) {
    EXPECT_EQ(c1.frames[f], c2.frames[f]);
    for (float v : c1.frames[f].pixels) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
}

TEST(SampleClip, FlowDependsOnStepCountRegressDoesNot) {
  Rng img_rng(6);
  const Image anchor = random_image(8, 8, 3, img_rng);
  SamplerConfig few, many;
  few.steps = 3;
  many.steps = 6;

  const auto flow = random_params(ModelMode::kFlow, 7);
  Rng a(8), b(8);
  EXPECT_NE(sample_clip(flow, anchor, few, a).frames.back(), sample_clip(flow, anchor, many, b).frames.back());

  const auto reg = random_params(ModelMode::kRegress, 9);
  Rng c(8), d(8);
  EXPECT_EQ(sample_clip(reg, anchor, few, c).frames.back(), sample_clip(reg, anchor, many, d).frames.back());
}

TEST(SampleClip, UnitGuidanceIgnoresUnconditionalBranch) {
  // With g = 1 the result must equal plain conditional Euler integration.
  const auto p = random_params(ModelMode::kFlow, 10);
  Rng img_rng(11);
  const Image anchor = random_image(8, 8, 3, img_rng);
  SamplerConfig cfg;
  cfg.steps = 4;
  cfg.guidance_scale = 1.0;
  Rng rng(12);
  const auto clip = sample_clip(p, anchor, cfg, rng);

  Rng replay(12);
  std::vector<double> x(3 * 8 * 8 * 3);
  for (auto& v : x) v = replay.normal();
  const auto anchor_t = image_to_tensor<double>(anchor);
  const VelocityFn<double> vel = [&](const std::vector<double>& state, double tau) {
    const auto out = forward_flow(p, anchor_t, Tensor<double>::from_values({3, 8, 8, 3}, state), tau);
    return std::vector<double>(out.values().begin(), out.values().end());
  };
  const auto final = integrate_flow<double>(x, 4, cfg.shift, vel);
  const auto want = tensor_to_image(Tensor<double>::from_values({3, 8, 8, 3}, final), 2);
  EXPECT_EQ(clip.frames.back(), want);
}

TEST(SampleClip, RegressRecoversOverfitTarget) {
  Rng rng(13);
  const Image lq = random_image(8, 8, 3, rng);
  const Image hq = random_image(8, 8, 3, rng);
  auto p = init_model<double>(small(ModelMode::kRegress), 14);
  const PseudoClip clip = build_pseudo_clip(lq, hq, 2);
  OptimizerConfig oc;
  oc.base_lr = 1e-2;
  oc.warmup_steps = 0;
  oc.weight_decay = 0.0;
  oc.max_grad_norm = 1e9;
  AdamW<double> opt(oc, p.tensors);
  for (int step = 0; step < 600; ++step) {
    for (auto& t : p.tensors) t.zero_grad();
    Tape<double> tape;
    Rng draws(step);
    auto loss = training_loss(p, clip, draws).loss;
    tape.backward(loss);
    opt.step_scheduled();
  }
  Rng s(0);
  const Image out = sample_clip(p, lq, SamplerConfig{}, s).frames.back();
  double mae = 0;
  for (std::size_t i = 0; i < out.size(); ++i) mae += std::abs(out.pixels[i] - hq.pixels[i]) / out.size();
  EXPECT_LT(mae, 1e-2);
}

TEST(SampleClip, MismatchedAnchorThrows) {
  const auto p = random_params(ModelMode::kRegress, 15);
  Rng rng(16);
  EXPECT_THROW(sample_clip(p, Image(8, 8, 1), SamplerConfig{}, rng), ShapeError);
  EXPECT_THROW(sample_clip(p, Image(9, 8, 3), SamplerConfig{}, rng), ShapeError);
}

}  // namespace
}  // namespace trajrest
