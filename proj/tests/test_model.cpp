#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "test_util.hpp"
#include "trajrest/model.hpp"
#include "trajrest/ops.hpp"
#include "trajrest/optim.hpp"
#include "trajrest/program.hpp"

namespace trajrest {
namespace {

using testing::random_image;

// Architecture formula written out independently of the implementation.
std::size_t hand_count(const ModelConfig& c) {
  const std::size_t d = c.embed_dim, pd = c.patch_dim(), g = c.grid();
  const std::size_t in = c.mode == ModelMode::kFlow ? 2 * pd : pd;
  std::size_t n = in * d + d;          // patch embedding
  n += g * g * d + c.frame_count * d;  // spatial + temporal positions
  if (c.mode == ModelMode::kFlow) n += 2 * (d * d + d);       // time MLP
  const std::size_t layer = 2 * d                // norm1
                            + (d * d + d)        // q
                            + d * d              // k, no bias
                            + 2 * (d * d + d)    // v, o
                            + 2 * d              // norm2
                            + (d * 4 * d + 4 * d) + (4 * d * d + d);
  n += c.layers * layer;
  n += 2 * d + d * pd + pd;  // final norm, head
  if (c.mode == ModelMode::kRegress) n += d * pd + pd;  // delta head
  return n;
}

ModelConfig tiny(ModelMode mode) {
  ModelConfig c;
  c.patch_size = 4;
  c.embed_dim = 8;
  c.layers = 1;
  c.heads = 2;
  c.frame_count = 2;
  c.image_size = 8;
  c.mode = mode;
  return c;
}

template <typename T>
void randomize(ModelParams<T>& p, std::uint64_t seed, double scale = 0.3) {
  Rng rng(seed);
  for (auto& t : p.tensors) {
    for (auto& v : t.mutable_values()) v = static_cast<T>(scale * rng.normal());
  }
}

TEST(ModelConfig, DefaultParameterCountGolden) {
  ModelConfig c;
  EXPECT_EQ(c.frame_count, 9);
  EXPECT_EQ(hand_count(c), 213856u);
  EXPECT_EQ(parameter_count(c), 213856u);
  EXPECT_EQ(init_model<float>(c, 1).count(), 213856u);
  c.mode = ModelMode::kFlow;
  EXPECT_EQ(parameter_count(c), 213856u - (64 * 48 + 48) + 48 * 64 + 8320);
}

TEST(ModelConfig, CountsAgreeAcrossShapes) {
  for (int d : {8, 16, 24}) {
    for (int layers : {1, 3}) {
      for (ModelMode m : {ModelMode::kRegress, ModelMode::kFlow}) {
        ModelConfig c = tiny(m);
        c.embed_dim = d;
        c.layers = layers;
        c.image_size = 16;
        c.frame_count = 5;
        EXPECT_EQ(parameter_count(c), hand_count(c));
        EXPECT_EQ(init_model<double>(c, 2).count(), hand_count(c));
      }
    }
  }
}

TEST(ModelConfig, InvalidConfigsThrow) {
  ModelConfig c;
  c.image_size = 30;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(init_model<float>(c, 0), std::invalid_argument);
  c = ModelConfig{};
  c.heads = 5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ModelConfig{};
  c.condition_dropout_prob = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(InitModel, DeterministicAndUniqueNames) {
  const ModelConfig c = tiny(ModelMode::kFlow);
  const auto a = init_model<float>(c, 7);
  const auto b = init_model<float>(c, 7);
  ASSERT_EQ(a.names, b.names);
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    EXPECT_TRUE(std::equal(a.tensors[i].values().begin(), a.tensors[i].values().end(), b.tensors[i].values().begin()))
        << a.names[i];
  }
  std::set<std::string> unique(a.names.begin(), a.names.end());
  EXPECT_EQ(unique.size(), a.names.size());
  const auto c8 = init_model<float>(c, 8);
  EXPECT_NE(std::vector<float>(a.get("blocks.0.attn.q.weight").values().begin(),
                               a.get("blocks.0.attn.q.weight").values().end()),
            std::vector<float>(c8.get("blocks.0.attn.q.weight").values().begin(),
                               c8.get("blocks.0.attn.q.weight").values().end()));
}

TEST(InitModel, InitializationRules) {
  const auto p = init_model<double>(ModelConfig{}, 3);
  for (double v : p.get("head.weight").values()) EXPECT_EQ(v, 0.0);
  for (double v : p.get("blocks.2.mlp.fc1.bias").values()) EXPECT_EQ(v, 0.0);
  for (double v : p.get("blocks.1.norm2.gain").values()) EXPECT_EQ(v, 1.0);
  const auto w = p.get("blocks.0.attn.v.weight").values();
  double sq = 0;
  for (double v : w) sq += v * v;
  EXPECT_NEAR(std::sqrt(sq / w.size()), 0.02, 0.002);
}

// Zero heads: regress mode returns the anchor for every frame, flow mode a
// zero velocity.
TEST(Forward, FreshModelOutputs) {
  Rng rng(4);
  for (ModelMode m : {ModelMode::kRegress, ModelMode::kFlow}) {
    ModelConfig c = tiny(m);
    c.frame_count = 3;
    const auto p = init_model<double>(c, 5);
    const auto anchor = image_to_tensor<double>(random_image(8, 8, 3, rng));
    const auto y = m == ModelMode::kRegress
                       ? forward_regress(p, anchor)
                       : forward_flow(p, anchor, Tensor<double>::full({3, 8, 8, 3}, 0.3), 0.4);
    EXPECT_EQ(y.shape(), (Shape{3, 8, 8, 3}));
    const auto a = anchor.values();
    const auto v = y.values();
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i], m == ModelMode::kRegress ? a[i % a.size()] : 0.0);
  }
}

TEST(Forward, OtherResolutionsUseResampledPositions) {
  Rng rng(6);
  ModelConfig c = tiny(ModelMode::kRegress);
  c.image_size = 16;
  auto p = init_model<double>(c, 6);
  randomize(p, 7);
  for (int s : {8, 12, 16, 24}) {
    const auto y = forward_regress(p, image_to_tensor<double>(random_image(s, s, 3, rng)));
    EXPECT_EQ(y.shape(), (Shape{2, static_cast<std::size_t>(s), static_cast<std::size_t>(s), 3}));
  }
  EXPECT_THROW(forward_regress(p, image_to_tensor<double>(random_image(10, 10, 3, rng))), ShapeError);
  EXPECT_THROW(forward_regress(p, image_to_tensor<double>(random_image(8, 8, 1, rng))), ShapeError);
}

TEST(Forward, WrongModeOrNoisyShapeThrows) {
  const auto reg = init_model<double>(tiny(ModelMode::kRegress), 1);
  const auto flow = init_model<double>(tiny(ModelMode::kFlow), 1);
  const auto anchor = Tensor<double>::zeros({8, 8, 3});
  EXPECT_THROW(forward_flow(reg, anchor, Tensor<double>::zeros({2, 8, 8, 3}), 0.5), ShapeError);
  EXPECT_THROW(forward_regress(flow, anchor), ShapeError);
  EXPECT_THROW(forward_flow(flow, anchor, Tensor<double>::zeros({3, 8, 8, 3}), 0.5), ShapeError);
}

// Swaps patch tokens a and b (row-major token order).
Image swap_patches(const Image& img, int p, int a, int b) {
  Image out = img;
  const int g = img.width / p;
  for (int y = 0; y < p; ++y) {
    for (int x = 0; x < p; ++x) {
      for (int z = 0; z < img.channels; ++z) {
        const int ra = (a / g) * p + y, ca = (a % g) * p + x;
        const int rb = (b / g) * p + y, cb = (b % g) * p + x;
        out.at(ra, ca, z) = img.at(rb, cb, z);
        out.at(rb, cb, z) = img.at(ra, ca, z);
      }
    }
  }
  return out;
}

void swap_rows(Tensor<double>& t, std::size_t a, std::size_t b) {
  const std::size_t d = t.shape()[1];
  auto v = t.mutable_values();
  for (std::size_t k = 0; k < d; ++k) std::swap(v[a * d + k], v[b * d + k]);
}

TEST(Forward, PatchPermutationEquivariance) {
  Rng rng(8);
  for (ModelMode m : {ModelMode::kRegress, ModelMode::kFlow}) {
    ModelConfig c = tiny(m);
    c.image_size = 16;
    c.frame_count = 3;
    c.layers = 2;
    auto p = init_model<double>(c, 9);
    randomize(p, 10);
    const Image anchor = random_image(16, 16, 3, rng);
    std::vector<Image> noisy{random_image(16, 16, 3, rng), random_image(16, 16, 3, rng), random_image(16, 16, 3, rng)};
    const int a = 1, b = 14;

    auto run = [&](const ModelParams<double>& params, const Image& anc, const std::vector<Image>& frames) {
      if (m == ModelMode::kRegress) return forward_regress(params, image_to_tensor<double>(anc));
      PseudoClip clip;
      clip.frames = frames;
      return forward_flow(params, image_to_tensor<double>(anc), clip_to_tensor<double>(clip), 0.3);
    };
    const auto y = run(p, anchor, noisy);

    auto q = p.clone();
    Tensor<double> pos = q.get("pos_spatial");
    swap_rows(pos, a, b);
    std::vector<Image> noisy_swapped;
    for (const auto& f : noisy) noisy_swapped.push_back(swap_patches(f, 4, a, b));
    const auto y_swapped = run(q, swap_patches(anchor, 4, a, b), noisy_swapped);

    // Raw values, not tensor_to_image, so clamping cannot hide a difference.
    const auto raw = y.values();
    const auto raw_s = y_swapped.values();
    for (int f = 0; f < 3; ++f) {
      Image yf(16, 16, 3), ys(16, 16, 3);
      std::copy(raw.begin() + f * 768, raw.begin() + (f + 1) * 768, yf.pixels.begin());
      std::copy(raw_s.begin() + f * 768, raw_s.begin() + (f + 1) * 768, ys.pixels.begin());
      const Image want = swap_patches(yf, 4, a, b);
      for (std::size_t i = 0; i < want.size(); ++i) ASSERT_NEAR(ys.pixels[i], want.pixels[i], 1e-6) << to_string(m);
    }
  }
}

PseudoClip random_clip(int size, int T, Rng& rng) {
  return build_pseudo_clip(random_image(size, size, 3, rng), random_image(size, size, 3, rng), T);
}

TEST(TrainingLoss, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  for (ModelMode m : {ModelMode::kRegress, ModelMode::kFlow}) {
    const ModelConfig c = tiny(m);
    auto p = init_model<double>(c, 12);
    ASSERT_LE(p.count(), 5000u);
    randomize(p, 13);
    const PseudoClip clip = random_clip(8, 1, rng);
    auto loss = [&] {
      Rng draws(14);
      return training_loss(p, clip, draws).loss;
    };
    // h balances truncation against rounding for gradients near 1e-8.
    EXPECT_LT(finite_diff_check<double>(loss, p.tensors, 3e-4), 1e-4) << to_string(m);
  }
}

TEST(TrainingLoss, Examples) {
  const auto p = init_model<double>(tiny(ModelMode::kRegress), 1);
  Rng rng(15);
  const PseudoClip zeros = build_pseudo_clip(Image(8, 8, 3, 0.0f), Image(8, 8, 3, 0.0f), 1);
  EXPECT_EQ(training_loss(p, zeros, rng).loss.item(), 0.0);
  const PseudoClip still = build_pseudo_clip(Image(8, 8, 3, 0.5f), Image(8, 8, 3, 0.5f), 1);
  EXPECT_EQ(training_loss(p, still, rng).loss.item(), 0.0);
  // Frames {0, 1} against the predicted {0, 0}.
  const PseudoClip step = build_pseudo_clip(Image(8, 8, 3, 0.0f), Image(8, 8, 3, 1.0f), 1);
  EXPECT_EQ(training_loss(p, step, rng).loss.item(), 0.5);
}

TEST(TrainingLoss, FreshModelLossIsMeanSquaredResidual) {
  Rng rng(16);
  const PseudoClip clip = random_clip(8, 1, rng);
  const auto reg = init_model<double>(tiny(ModelMode::kRegress), 2);
  double ms = 0;
  for (const auto& f : clip.frames) {
    for (std::size_t i = 0; i < f.pixels.size(); ++i) {
      const double r = static_cast<double>(f.pixels[i]) - clip.anchor().pixels[i];
      ms += r * r;
    }
  }
  ms /= 2.0 * clip.frames[0].size();
  EXPECT_NEAR(training_loss(reg, clip, rng).loss.item(), ms, 1e-12);

  // Flow target is clip - eps; replay the draws to rebuild it.
  const auto flow = init_model<double>(tiny(ModelMode::kFlow), 2);
  Rng draws(17), replay(17);
  const auto res = training_loss(flow, clip, draws);
  replay.bernoulli(0.1);
  replay.uniform();
  double mv = 0;
  std::size_t n = 0;
  for (const auto& f : clip.frames) {
    for (float v : f.pixels) {
      const double t = static_cast<double>(v) - replay.normal();
      mv += t * t;
      ++n;
    }
  }
  EXPECT_NEAR(res.loss.item(), mv / n, 1e-12);
}

TEST(TrainingLoss, NonNegative) {
  Rng rng(18);
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto p = init_model<double>(tiny(s % 2 ? ModelMode::kFlow : ModelMode::kRegress), s);
    randomize(p, s + 1000);
    Rng draws(s);
    EXPECT_GE(training_loss(p, random_clip(8, 1, rng), draws).loss.item(), 0.0);
  }
}

TEST(TrainingLoss, FrameCountMismatchThrows) {
  Rng rng(19);
  const auto p = init_model<double>(tiny(ModelMode::kRegress), 1);
  EXPECT_THROW(training_loss(p, random_clip(8, 2, rng), rng), ShapeError);
}

TEST(TrainingLoss, ConditionDropoutExtremes) {
  Rng rng(20);
  const PseudoClip clip = random_clip(8, 1, rng);
  for (double prob : {0.0, 1.0}) {
    ModelConfig c = tiny(ModelMode::kFlow);
    c.condition_dropout_prob = prob;
    const auto p = init_model<double>(c, 3);
    for (std::uint64_t s = 0; s < 200; ++s) {
      Rng draws(s);
      EXPECT_EQ(training_loss(p, clip, draws).anchor_dropped, prob == 1.0);
    }
  }
}

TEST(TrainingLoss, DroppedAnchorMatchesZeroAnchorForward) {
  Rng rng(21);
  ModelConfig c = tiny(ModelMode::kFlow);
  c.condition_dropout_prob = 1.0;
  auto p = init_model<double>(c, 4);
  randomize(p, 5);
  const PseudoClip clip = random_clip(8, 1, rng);
  Rng draws(22), replay(22);
  const auto res = training_loss(p, clip, draws);
  replay.bernoulli(1.0);
  const double tau = replay.uniform();
  const auto target = clip_to_tensor<double>(clip);
  std::vector<double> xt, vel;
  for (double v : target.values()) {
    const double eps = replay.normal();
    xt.push_back((1 - tau) * eps + tau * v);
    vel.push_back(v - eps);
  }
  const auto y = forward_flow(p, Tensor<double>::zeros({8, 8, 3}), Tensor<double>::from_values(target.shape(), xt), tau);
  const auto want = ops::mse(y, Tensor<double>::from_values(target.shape(), vel));
  EXPECT_EQ(res.loss.item(), want.item());
  EXPECT_EQ(res.tau, tau);
}

TEST(TrainingLoss, OverfitsOneClipIn200Steps) {
  Rng rng(23);
  ModelConfig c = tiny(ModelMode::kRegress);
  c.embed_dim = 16;
  c.frame_count = 5;
  auto p = init_model<float>(c, 24);
  const PseudoClip clip = random_clip(8, 4, rng);
  OptimizerConfig oc;
  oc.base_lr = 1e-2;
  oc.warmup_steps = 0;
  oc.weight_decay = 0.0;
  oc.max_grad_norm = 1e9;
  AdamW<float> opt(oc, p.tensors);
  double last = 0;
  for (int step = 0; step < 200; ++step) {
    for (auto& t : p.tensors) t.zero_grad();
    Tape<float> tape;
    Rng draws(step);
    auto loss = training_loss(p, clip, draws).loss;
    last = loss.item();
    tape.backward(loss);
    opt.step_scheduled();
  }
  EXPECT_LT(last, 1e-3);
}

TEST(Conversion, TensorToImageClamps) {
  const auto t = Tensor<double>::from_values({2, 1, 1, 1}, {-0.5, 1.5});
  EXPECT_EQ(tensor_to_image(t, 0).pixels[0], 0.0f);
  EXPECT_EQ(tensor_to_image(t, 1).pixels[0], 1.0f);
  EXPECT_THROW(tensor_to_image(t, 2), ShapeError);
}

}  // namespace
}  // namespace trajrest
