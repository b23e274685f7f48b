#include "trajrest/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "trajrest/parallel.hpp"

namespace trajrest {

CurriculumSchedule build_schedule(const std::vector<int>& resolutions, int total_epochs, bool allow_decreasing) {
  if (resolutions.empty()) throw std::invalid_argument("build_schedule: no stages");
  const int n = static_cast<int>(resolutions.size());
  if (total_epochs < n) {
    throw std::invalid_argument("build_schedule: total_epochs " + std::to_string(total_epochs) + " is fewer than " +
                                std::to_string(n) + " stages");
  }
  for (int i = 0; i < n; ++i) {
    if (resolutions[i] <= 0) throw std::invalid_argument("build_schedule: resolutions must be positive");
    if (i > 0 && !allow_decreasing && resolutions[i] <= resolutions[i - 1]) {
      throw std::invalid_argument("build_schedule: resolutions must strictly increase (" +
                                  std::to_string(resolutions[i - 1]) + " then " + std::to_string(resolutions[i]) +
                                  ")");
    }
  }
  CurriculumSchedule s;
  s.total_epochs = total_epochs;
  const int base = total_epochs / n;
  const int extra = total_epochs % n;
  for (int i = 0; i < n; ++i) s.stages.push_back({resolutions[i], base + (i < extra ? 1 : 0)});
  return s;
}

Image center_square(const Image& img, int size) {
  const Image scaled = resize_shorter_side(img, size);
  return crop(scaled, {(scaled.height - size) / 2, (scaled.width - size) / 2}, size);
}

std::pair<Image, Image> training_crop(const TrainingPair& pair, int resolution, int model_size,
                                      StageProtocol protocol, Rng& rng) {
  if (!pair.lq.same_dims(pair.hq)) throw ImageError("training pair dimensions differ");
  if (protocol == StageProtocol::kResizeCrop) {
    const Image lq = resize_shorter_side(pair.lq, resolution);
    const Image hq = resize_shorter_side(pair.hq, resolution);
    const CropOffset off = draw_crop_offset(lq.height, lq.width, resolution, rng);
    return {crop(lq, off, resolution), crop(hq, off, resolution)};
  }
  const Image lq = resize_shorter_side(pair.lq, model_size);
  const Image hq = resize_shorter_side(pair.hq, model_size);
  const CropOffset off = draw_crop_offset(lq.height, lq.width, model_size, rng);
  return {down_up(crop(lq, off, model_size), resolution), down_up(crop(hq, off, model_size), resolution)};
}

template <typename T>
TrainResult<T> train_run(const TrainRunConfig& config, const std::vector<TrainingPair>& data) {
  if (data.empty()) throw std::invalid_argument("train_run: empty dataset");
  if (config.frame_interval < 1) throw std::invalid_argument("train_run: frame_interval must be >= 1");
  if (config.batch_size < 1) throw std::invalid_argument("train_run: batch_size must be >= 1");
  if (config.steps_per_epoch < 1) throw std::invalid_argument("train_run: steps_per_epoch must be >= 1");
  if (config.schedule.stages.empty()) throw std::invalid_argument("train_run: empty schedule");
  ModelConfig mc = config.model;
  mc.frame_count = config.frame_interval + 1;
  mc.validate();
  for (const auto& stage : config.schedule.stages) {
    if (stage.resolution % mc.patch_size != 0) {
      throw std::invalid_argument("train_run: stage resolution " + std::to_string(stage.resolution) +
                                  " is not a multiple of the patch size");
    }
    if (config.protocol == StageProtocol::kDownUp && stage.resolution > mc.image_size) {
      throw std::invalid_argument("train_run: stage resolution exceeds model image_size");
    }
  }

  TrainResult<T> result;
  result.params = init_model<T>(mc, derive_seed(config.seed, 0x1417));
  AdamW<T> opt(config.optimizer, result.params.tensors);
  const std::size_t batch = config.batch_size;
  const std::size_t n_params = result.params.tensors.size();

  std::int64_t step = 0;
  for (std::size_t si = 0; si < config.schedule.stages.size(); ++si) {
    const CurriculumStage& stage = config.schedule.stages[si];
    const std::int64_t stage_steps = static_cast<std::int64_t>(stage.epochs) * config.steps_per_epoch;
    for (std::int64_t k = 0; k < stage_steps; ++k, ++step) {
      std::vector<std::vector<std::vector<T>>> grads(batch);
      std::vector<double> losses(batch);
      parallel_for(batch, config.threads, [&](std::size_t b) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(step) * batch + b));
        const TrainingPair& pair = data[rng.uniform_int(data.size())];
        const auto [lq, hq] = training_crop(pair, stage.resolution, mc.image_size, config.protocol, rng);
        const PseudoClip clip = config.clip_kind == ClipKind::kBase
                                    ? build_pseudo_clip(lq, hq, config.frame_interval)
                                    : build_drift_clip(lq, hq, config.frame_interval);
        const ModelParams<T> local = result.params.aliased();
        Tape<T> tape;
        const LossResult<T> lr = training_loss(local, clip, rng);
        losses[b] = static_cast<double>(lr.loss.item());
        tape.backward(lr.loss);
        grads[b].resize(n_params);
        for (std::size_t p = 0; p < n_params; ++p) {
          const Tensor<T>& t = local.tensors[p];
          if (t.has_grad()) {
            grads[b][p].assign(t.grad().begin(), t.grad().end());
          } else {
            grads[b][p].assign(t.numel(), T(0));
          }
        }
      });

      double loss = 0.0;
      for (double l : losses) loss += l;
      loss /= static_cast<double>(batch);
      if (!std::isfinite(loss)) {
        throw NumericError("train_run: non-finite loss at step " + std::to_string(step) + " (stage " +
                           std::to_string(si) + ", resolution " + std::to_string(stage.resolution) + ")");
      }
      const T inv = static_cast<T>(1.0 / static_cast<double>(batch));
      for (std::size_t p = 0; p < n_params; ++p) {
        auto g = result.params.tensors[p].mutable_grad();
        std::fill(g.begin(), g.end(), T(0));
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += grads[b][p][i];
        }
        for (T& v : g) v *= inv;
      }
      clip_grad_norm<T>(result.params.tensors, config.optimizer.max_grad_norm);
      const double lr = opt.step_scheduled();
      result.trace.push_back({step, static_cast<int>(si), stage.resolution, loss, lr});
    }
  }
  for (auto& t : result.params.tensors) t.zero_grad();
  result.optimizer_steps = opt.step_count();
  result.first_moments = opt.first_moments();
  result.second_moments = opt.second_moments();
  return result;
}

template <typename T>
Image restore(const ModelParams<T>& base, const ModelParams<T>* corrector, const Image& lq,
              const SamplerConfig& sampler, std::uint64_t seed) {
  Rng base_rng(derive_seed(seed, 0));
  Image out = sample_clip(base, lq, sampler, base_rng).frames.back();
  if (corrector) {
    Rng corr_rng(derive_seed(seed, 1));
    out = sample_clip(*corrector, out, sampler, corr_rng).frames.back();
  }
  return out;
}

template <typename T>
CorrectorResult<T> train_drift_corrector(const ModelParams<T>& base, const SamplerConfig& sampler,
                                         TrainRunConfig config, const std::vector<TrainingPair>& data) {
  if (base.tensors.empty()) throw std::invalid_argument("train_drift_corrector: base model missing");
  if (data.empty()) throw std::invalid_argument("train_drift_corrector: empty dataset");
  const int size = base.config.image_size;
  CorrectorResult<T> result;
  std::vector<TrainingPair> drift(data.size());
  result.base_outputs.resize(data.size());
  parallel_for(data.size(), config.threads, [&](std::size_t i) {
    const Image lq = center_square(data[i].lq, size);
    const Image hq = center_square(data[i].hq, size);
    result.base_outputs[i] = restore<T>(base, nullptr, lq, sampler, derive_seed(config.seed, 0xd21f7 + i));
    drift[i] = {result.base_outputs[i], hq, data[i].category};
  });
  for (const auto& d : drift) {
    if (d.lq == d.hq) ++result.degenerate_pairs;
  }
  if (result.degenerate_pairs == static_cast<int>(drift.size())) {
    std::fprintf(stderr, "warning: base model reproduces every target; the corrector will learn the identity\n");
  }
  config.frame_interval = kDriftIntervals;
  config.clip_kind = ClipKind::kDrift;
  config.model = base.config;
  config.seed = derive_seed(config.seed, 0xc0cc);
  result.train = train_run<T>(config, drift);
  return result;
}

std::string format_trace(const std::vector<TraceRow>& trace) {
  std::string out = "step,stage,resolution,loss,lr\n";
  char line[160];
  for (const auto& r : trace) {
    std::snprintf(line, sizeof(line), "%lld,%d,%d,%.9g,%.9g\n", static_cast<long long>(r.step), r.stage, r.resolution,
                  r.loss, r.lr);
    out += line;
  }
  return out;
}

void write_trace(const std::vector<TraceRow>& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace: " + path.string());
  out << format_trace(trace);
}

#define TRAJREST_INSTANTIATE_TRAINER(T)                                                                        \
  template TrainResult<T> train_run<T>(const TrainRunConfig&, const std::vector<TrainingPair>&);               \
  template Image restore<T>(const ModelParams<T>&, const ModelParams<T>*, const Image&, const SamplerConfig&,   \
                            std::uint64_t);                                                                    \
  template CorrectorResult<T> train_drift_corrector<T>(const ModelParams<T>&, const SamplerConfig&,            \
                                                       TrainRunConfig, const std::vector<TrainingPair>&);

TRAJREST_INSTANTIATE_TRAINER(float)
TRAJREST_INSTANTIATE_TRAINER(double)

}  // namespace trajrest
