#include <gtest/gtest.h>

#include <numeric>

#include "test_util.hpp"
#include "trajrest/trainer.hpp"

namespace trajrest {
namespace {

using testing::random_image;

TEST(BuildSchedule, Examples) {
  const auto a = build_schedule({512, 720, 960}, 300);
  EXPECT_EQ(a.stages, (std::vector<CurriculumStage>{{512, 100}, {720, 100}, {960, 100}}));
  EXPECT_EQ(a.total_epochs, 300);
  EXPECT_EQ(build_schedule({16, 24, 32}, 10).stages, (std::vector<CurriculumStage>{{16, 4}, {24, 3}, {32, 3}}));
  EXPECT_EQ(build_schedule({32}, 5).stages, (std::vector<CurriculumStage>{{32, 5}}));
  EXPECT_EQ(build_schedule({24, 16}, 3, true).stages, (std::vector<CurriculumStage>{{24, 2}, {16, 1}}));
}

TEST(BuildSchedule, Errors) {
  EXPECT_THROW(build_schedule({}, 3), std::invalid_argument);
  EXPECT_THROW(build_schedule({16, 24}, 1), std::invalid_argument);
  EXPECT_THROW(build_schedule({24, 16}, 4), std::invalid_argument);
  EXPECT_THROW(build_schedule({16, 16}, 4), std::invalid_argument);
  EXPECT_THROW(build_schedule({0, 16}, 4), std::invalid_argument);
}

TEST(BuildSchedule, EvenSplitProperties) {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(6));
    std::vector<int> res(n);
    for (int i = 0; i < n; ++i) res[i] = 8 * (i + 1);
    const int total = n + static_cast<int>(rng.uniform_int(200));
    const auto s = build_schedule(res, total);
    int sum = 0;
    for (std::size_t i = 0; i < s.stages.size(); ++i) {
      sum += s.stages[i].epochs;
      EXPECT_EQ(s.stages[i].resolution, res[i]);
      if (i > 0) {
        EXPECT_LE(s.stages[i].epochs, s.stages[i - 1].epochs);
        EXPECT_GE(s.stages[i].epochs + 1, s.stages[0].epochs);
      }
    }
    EXPECT_EQ(sum, total);
  }
}

TEST(CenterSquare, Dims) {
  Rng rng(2);
  const Image img = random_image(12, 20, 3, rng);
  const Image c = center_square(img, 8);
  EXPECT_EQ(c.height, 8);
  EXPECT_EQ(c.width, 8);
  EXPECT_EQ(center_square(random_image(8, 8, 3, rng), 8).height, 8);
}

TEST(TrainingCrop, SharedOffsetAndSize) {
  Rng rng(3);
  const Image img = random_image(16, 24, 3, rng);
  const TrainingPair same{img, img, "x"};
  for (auto proto : {StageProtocol::kResizeCrop, StageProtocol::kDownUp}) {
    Rng r(4);
    const auto [lq, hq] = training_crop(same, 8, 16, proto, r);
    EXPECT_EQ(lq, hq);
    const int want = proto == StageProtocol::kResizeCrop ? 8 : 16;
    EXPECT_EQ(lq.height, want);
    EXPECT_EQ(lq.width, want);
  }
  EXPECT_THROW(
      {
        Rng r(5);
        training_crop({img, random_image(16, 16, 3, rng), "x"}, 8, 16, StageProtocol::kResizeCrop, r);
      },
      ImageError);
}

ModelConfig tiny() {
  ModelConfig c;
  c.patch_size = 4;
  c.embed_dim = 16;
  c.layers = 1;
  c.heads = 2;
  c.image_size = 8;
  c.mode = ModelMode::kRegress;
  return c;
}

TrainRunConfig run_config(std::vector<int> res, int epochs) {
  TrainRunConfig c;
  c.schedule = build_schedule(res, epochs);
  c.frame_interval = 4;
  c.model = tiny();
  c.optimizer.base_lr = 1e-2;
  c.optimizer.warmup_steps = 0;
  c.optimizer.weight_decay = 0.0;
  c.optimizer.max_grad_norm = 1e9;
  c.seed = 7;
  c.batch_size = 1;
  return c;
}

std::vector<TrainingPair> pairs(int n, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainingPair> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({random_image(h, w, 3, rng), random_image(h, w, 3, rng), i % 2 ? "b" : "a"});
  }
  return out;
}

TEST(TrainRun, OverfitsOnePair) {
  const auto data = pairs(1, 8, 8, 8);
  const auto r = train_run<float>(run_config({8}, 200), data);
  ASSERT_EQ(r.trace.size(), 200u);
  EXPECT_EQ(r.optimizer_steps, 200);
  EXPECT_LT(r.trace.back().loss, 1e-3);
  EXPECT_EQ(r.params.config.frame_count, 5);
}

TEST(TrainRun, DeterministicAcrossThreadCounts) {
  const auto data = pairs(3, 12, 16, 9);
  auto cfg = run_config({4, 8}, 6);
  cfg.batch_size = 3;
  cfg.model.image_size = 8;
  const auto a = train_run<float>(cfg, data);
  const auto b = train_run<float>(cfg, data);
  cfg.threads = 3;
  const auto c = train_run<float>(cfg, data);
  for (std::size_t i = 0; i < a.params.tensors.size(); ++i) {
    const auto va = a.params.tensors[i].values();
    const auto vb = b.params.tensors[i].values();
    const auto vc = c.params.tensors[i].values();
    EXPECT_TRUE(std::equal(va.begin(), va.end(), vb.begin())) << a.params.names[i];
    EXPECT_TRUE(std::equal(va.begin(), va.end(), vc.begin())) << a.params.names[i];
  }
  EXPECT_EQ(format_trace(a.trace), format_trace(c.trace));
  EXPECT_EQ(a.second_moments, c.second_moments);

  cfg.seed = 8;
  const auto d = train_run<float>(cfg, data);
  EXPECT_NE(format_trace(a.trace), format_trace(d.trace));
}

TEST(TrainRun, TraceFollowsScheduleAndWarmup) {
  const auto data = pairs(2, 16, 16, 10);
  auto cfg = run_config({4, 8, 16}, 7);
  cfg.model.image_size = 16;
  cfg.steps_per_epoch = 2;
  cfg.optimizer.warmup_steps = 5;
  const auto r = train_run<float>(cfg, data);
  ASSERT_EQ(r.trace.size(), 14u);
  const std::vector<int> want_res{4, 4, 4, 4, 4, 4, 8, 8, 8, 8, 16, 16, 16, 16};
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    EXPECT_EQ(r.trace[k].step, static_cast<std::int64_t>(k));
    EXPECT_EQ(r.trace[k].resolution, want_res[k]);
    EXPECT_EQ(r.trace[k].stage, k < 6 ? 0 : k < 10 ? 1 : 2);
    EXPECT_EQ(r.trace[k].lr, lr_at_step(cfg.optimizer, static_cast<std::int64_t>(k) + 1));
    if (k > 0) {
      EXPECT_GE(r.trace[k].resolution, r.trace[k - 1].resolution);
    }
  }
}

TEST(TrainRun, Errors) {
  const auto data = pairs(1, 8, 8, 11);
  EXPECT_THROW(train_run<float>(run_config({8}, 1), {}), std::invalid_argument);
  EXPECT_THROW(train_run<float>(run_config({6}, 1), data), std::invalid_argument);
  auto cfg = run_config({16}, 1);
  cfg.protocol = StageProtocol::kDownUp;
  EXPECT_THROW(train_run<float>(cfg, data), std::invalid_argument);
  cfg = run_config({8}, 1);
  cfg.batch_size = 0;
  EXPECT_THROW(train_run<float>(cfg, data), std::invalid_argument);
}

TEST(FormatTrace, Golden) {
  const std::vector<TraceRow> rows{{0, 0, 16, 0.25, 1e-3}, {1, 1, 24, 0.125, 0.0005}};
  EXPECT_EQ(format_trace(rows), "step,stage,resolution,loss,lr\n0,0,16,0.25,0.001\n1,1,24,0.125,0.0005\n");
}

TEST(Restore, WithoutCorrectorIsBaseLastFrame) {
  const auto base = init_model<float>([] {
    auto c = tiny();
    c.frame_count = 3;
    return c;
  }(), 12);
  Rng rng(13);
  const Image lq = random_image(8, 8, 3, rng);
  Rng s(derive_seed(99, 0));
  EXPECT_EQ(restore<float>(base, nullptr, lq, SamplerConfig{}, 99), sample_clip(base, lq, SamplerConfig{}, s).frames.back());
}

// Pairs whose input already matches the target teach the corrector to copy.
TEST(DriftCorrector, DegeneratePairsGiveNearIdentity) {
  Rng rng(14);
  std::vector<TrainingPair> data;
  for (int i = 0; i < 2; ++i) {
    const Image img = random_image(8, 8, 3, rng);
    data.push_back({img, img, "a"});
  }
  auto cfg = run_config({8}, 300);
  cfg.clip_kind = ClipKind::kDrift;
  const auto r = train_run<float>(cfg, data);
  EXPECT_EQ(r.params.config.frame_count, 5);
  for (const auto& p : data) {
    Rng s(0);
    const Image out = sample_clip(r.params, p.lq, SamplerConfig{}, s).frames.back();
    double mae = 0;
    for (std::size_t i = 0; i < out.size(); ++i) mae += std::abs(out.pixels[i] - p.hq.pixels[i]) / out.size();
    EXPECT_LT(mae, 2e-2);
  }
}

TEST(DriftCorrector, DeterministicAndShapedLikeBase) {
  auto base_cfg = tiny();
  base_cfg.frame_count = 9;
  const auto base = init_model<float>(base_cfg, 15);
  const auto data = pairs(2, 10, 12, 16);
  auto cfg = run_config({8}, 4);
  cfg.frame_interval = 8;
  SamplerConfig sc;
  sc.steps = 2;
  const auto a = train_drift_corrector(base, sc, cfg, data);
  cfg.threads = 2;
  const auto b = train_drift_corrector(base, sc, cfg, data);
  EXPECT_EQ(a.train.params.config.frame_count, kDriftIntervals + 1);
  EXPECT_EQ(a.train.params.config.embed_dim, base.config.embed_dim);
  ASSERT_EQ(a.base_outputs.size(), 2u);
  EXPECT_EQ(a.base_outputs[0].height, 8);
  EXPECT_EQ(a.base_outputs, b.base_outputs);
  EXPECT_EQ(format_trace(a.train.trace), format_trace(b.train.trace));
  EXPECT_EQ(a.degenerate_pairs, 0);
}

}  // namespace
}  // namespace trajrest
