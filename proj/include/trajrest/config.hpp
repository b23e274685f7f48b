#pragma once
// Experiment configuration files.
//
//   # comment
//   [section]
//   key = value
//
// Sections and keys (defaults in ExperimentConfig):
//   experiment  name, seed
//   dataset     source (procedural | directory), source_count, image_size,
//               categories (all | comma list), per_category, manifest
//   model       mode (regress | flow), patch_size, embed_dim, layers, heads,
//               frame_interval, image_size, condition_dropout
//   schedule    resolutions (comma list), total_epochs, steps_per_epoch,
//               batch_size, protocol (resize_crop | down_up), allow_decreasing,
//               lr, weight_decay, epsilon, warmup_steps, max_grad_norm, beta1, beta2
//   sampler     steps, guidance_scale, shift
//   corrector   enabled, resolutions, total_epochs, steps_per_epoch,
//               batch_size, lr, warmup_steps, split (train | disjoint), pairs
//   eval        per_category, manifest, resize_limit
//   sweep       key (section.key), values (comma list)
//
// Unknown sections or keys are errors.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajrest/model.hpp"
#include "trajrest/optim.hpp"
#include "trajrest/sampler.hpp"
#include "trajrest/trainer.hpp"

namespace trajrest {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSection {
  std::string source = "procedural";
  int source_count = 256;
  int image_size = 32;
  std::vector<std::string> categories;  // empty means all
  int per_category = 50;
  std::string manifest;  // when set, used instead of synthesis
};

struct ScheduleSection {
  std::vector<int> resolutions{16, 24, 32};
  int total_epochs = 3;
  int steps_per_epoch = 100;
  int batch_size = 4;
  StageProtocol protocol = StageProtocol::kResizeCrop;
  bool allow_decreasing = false;
  OptimizerConfig optimizer;
};

struct CorrectorSection {
  bool enabled = false;
  std::vector<int> resolutions{32};
  int total_epochs = 1;
  int steps_per_epoch = 100;
  int batch_size = 4;
  double lr = 1e-3;
  std::int64_t warmup_steps = 100;
  bool disjoint_split = false;
  int pairs = 0;  // 0 uses every available pair
};

struct EvalSection {
  int per_category = 5;
  std::string manifest;
  int resize_limit = 2048;
};

struct SweepSection {
  std::string key;
  std::vector<std::string> values;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  DatasetSection dataset;
  ModelConfig model;
  int frame_interval = 8;
  ScheduleSection schedule;
  SamplerConfig sampler;
  CorrectorSection corrector;
  EvalSection eval;
  SweepSection sweep;
};

ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Sets one key; `section.key` form. Used by the parser and by sweeps.
void set_config_value(ExperimentConfig& config, const std::string& section, const std::string& key,
                      const std::string& value);

// Every key in fixed order; parse_config(canonical_text(c)) reproduces c.
std::string canonical_text(const ExperimentConfig& config);

// Cross-field checks (schedule validity, sampler ranges, model shape).
void validate(const ExperimentConfig& config);

std::string model_config_text(const ModelConfig& config);
ModelConfig parse_model_config_text(const std::string& text);

TrainRunConfig base_run_config(const ExperimentConfig& config, int threads);
TrainRunConfig corrector_run_config(const ExperimentConfig& config, int threads);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace trajrest
