#pragma once
// End-to-end runs: data -> base training -> optional corrector -> inference
// -> metrics -> reports.
//
// Artifacts of one run directory:
//   data/train, data/eval        synthesized pairs (unless manifests are given)
//   base.vbck, base_trace.csv
//   corrector.vbck, corrector_trace.csv   when the corrector is enabled
//   pred_base/, pred/            restored images named after their LQ inputs
//   report_lq.*, report_base.*, report.*  (csv and md)
//   summary.csv                  one row of headline numbers
//   provenance.txt               config hash, seed, version, kernels, time
// A failed stage leaves INCOMPLETE naming the stage and the cause.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajrest/config.hpp"
#include "trajrest/metrics.hpp"

namespace trajrest {

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr const char* kVersion = "0.1.0";

enum class Precision { kF32, kF64 };

struct RunOptions {
  int threads = 1;
  Precision precision = Precision::kF32;
  bool verbose = false;
};

struct RunSummary {
  std::string label;
  EvalReport lq;
  EvalReport base;
  EvalReport final;
  bool corrected = false;
};

struct ExperimentResult {
  std::vector<RunSummary> runs;
};

RunSummary run_pipeline(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                        const RunOptions& options);

// Loads the config (rejecting unknown keys before any work), then runs one
// pipeline, or one per sweep value under out_dir/<key>=<value> plus a
// combined sweep.csv.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                const RunOptions& options);
ExperimentResult run_experiment(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                                const RunOptions& options, std::optional<std::uint64_t> seed_override = {});

std::string summary_header();
std::string summary_row(const RunSummary& run);

// Writes provenance.txt: config hash, seed, version, kernel ISA, precision,
// timestamp. The only artifact carrying a time.
void write_provenance(const ExperimentConfig& config, const RunOptions& options, const std::filesystem::path& dir);

// Restores every LQ image of the manifest into out_dir (named after the LQ
// file). Large inputs follow the resize policy; sizes are rounded to a patch
// multiple for the model and mapped back afterwards.
template <typename T>
void infer_set(const ModelParams<T>& base, const ModelParams<T>* corrector, const Manifest& manifest,
               const SamplerConfig& sampler, int resize_limit, std::uint64_t seed, int threads,
               const std::filesystem::path& base_dir_out, const std::filesystem::path* final_dir_out);

// LQ-versus-HQ scores of a manifest.
EvalReport evaluate_inputs(const Manifest& manifest, int threads);

std::vector<TrainingPair> load_pairs(const Manifest& manifest, int threads);

}  // namespace trajrest
