#pragma once
// Curriculum training over pseudo-clips, and the drift corrector.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trajrest/image.hpp"
#include "trajrest/model.hpp"
#include "trajrest/optim.hpp"
#include "trajrest/sampler.hpp"
#include "trajrest/sequence.hpp"

namespace trajrest {

struct CurriculumStage {
  int resolution = 0;
  int epochs = 0;
  bool operator==(const CurriculumStage&) const = default;
};

struct CurriculumSchedule {
  std::vector<CurriculumStage> stages;
  int total_epochs = 0;
};

// Even split with the remainder going to the earliest stages. Resolutions
// must strictly increase unless allow_decreasing is set.
CurriculumSchedule build_schedule(const std::vector<int>& resolutions, int total_epochs,
                                  bool allow_decreasing = false);

// How a stage's resolution r reaches the data.
//   kResizeCrop: shorter side scaled to r, then a random r x r crop.
//   kDownUp: random crop at the model's image_size, then down_up(., r).
enum class StageProtocol { kResizeCrop, kDownUp };

struct TrainingPair {
  Image lq;
  Image hq;
  std::string category;
};

struct TrainRunConfig {
  CurriculumSchedule schedule;
  int frame_interval = 8;
  ModelConfig model;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  int batch_size = 4;
  int steps_per_epoch = 1;
  int threads = 1;
  StageProtocol protocol = StageProtocol::kResizeCrop;
  ClipKind clip_kind = ClipKind::kBase;
};

struct TraceRow {
  std::int64_t step = 0;
  int stage = 0;
  int resolution = 0;
  double loss = 0.0;
  double lr = 0.0;
};

template <typename T>
struct TrainResult {
  ModelParams<T> params;
  std::vector<TraceRow> trace;
  std::int64_t optimizer_steps = 0;
  std::vector<std::vector<T>> first_moments;
  std::vector<std::vector<T>> second_moments;
};

// Step s, batch item b uses the generator seeded with derive_seed(seed, s *
// batch + b) to pick a pair, place the crop and drive the loss, so results
// do not depend on the thread count. Gradients are averaged over the batch in
// item order, clipped, then applied. Warmup counts steps across all stages.
template <typename T>
TrainResult<T> train_run(const TrainRunConfig& config, const std::vector<TrainingPair>& data);

// The training crop (lq, hq) for one item at resolution r.
std::pair<Image, Image> training_crop(const TrainingPair& pair, int resolution, int model_size,
                                      StageProtocol protocol, Rng& rng);

// Centered square crop after scaling the shorter side to `size`.
Image center_square(const Image& img, int size);

template <typename T>
struct CorrectorResult {
  TrainResult<T> train;
  std::vector<Image> base_outputs;
  int degenerate_pairs = 0;  // pairs where the base output already equals hq
};

// Runs the base model on each pair's centered crop, builds drift clips from
// its last frame to hq with kDriftIntervals intervals, and trains a fresh
// model of the same architecture on them. `config.model.frame_count` and
// `config.frame_interval` are overridden.
template <typename T>
CorrectorResult<T> train_drift_corrector(const ModelParams<T>& base, const SamplerConfig& sampler,
                                         TrainRunConfig config, const std::vector<TrainingPair>& data);

// Runs the base model then, when given, the corrector on the last frame.
template <typename T>
Image restore(const ModelParams<T>& base, const ModelParams<T>* corrector, const Image& lq,
              const SamplerConfig& sampler, std::uint64_t seed);

// CSV: step,stage,resolution,loss,lr
void write_trace(const std::vector<TraceRow>& trace, const std::filesystem::path& path);
std::string format_trace(const std::vector<TraceRow>& trace);

}  // namespace trajrest
