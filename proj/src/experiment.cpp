#include "trajrest/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>

#include "trajrest/checkpoint.hpp"
#include "trajrest/kernels.hpp"
#include "trajrest/parallel.hpp"
#include "trajrest/report.hpp"
#include "trajrest/synth.hpp"

namespace trajrest {

namespace {

namespace fs = std::filesystem;

void stage(const fs::path& dir, const std::string& name, bool verbose, const std::function<void()>& body) {
  if (verbose) std::fprintf(stderr, "[%s] %s\n", dir.string().c_str(), name.c_str());
  try {
    body();
  } catch (const std::exception& e) {
    std::ofstream mark(dir / "INCOMPLETE");
    mark << "stage=" << name << "\ncause=" << e.what() << "\n";
    throw ExperimentError("stage '" + name + "' failed: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_reports(const EvalReport& r, const fs::path& dir, const std::string& stem) {
  emit_report(r, ReportFormat::kCsv, dir / (stem + ".csv"));
  emit_report(r, ReportFormat::kMarkdown, dir / (stem + ".md"));
}

int round_to_multiple(int v, int m) { return std::max(m, static_cast<int>(std::lround(static_cast<double>(v) / m)) * m); }

std::size_t threads_of(int t) { return static_cast<std::size_t>(std::max(1, t)); }

// Every k-th element so the subset spans all categories.
std::vector<TrainingPair> spread_subset(const std::vector<TrainingPair>& pairs, int count) {
  if (count <= 0 || static_cast<std::size_t>(count) >= pairs.size()) return pairs;
  std::vector<TrainingPair> out;
  for (int i = 0; i < count; ++i) out.push_back(pairs[static_cast<std::size_t>(i) * pairs.size() / count]);
  return out;
}

template <typename T>
void save_model(const TrainResult<T>& r, std::uint64_t seed, const fs::path& ckpt, const fs::path& trace) {
  Checkpoint c = make_checkpoint(r.params, seed, r.optimizer_steps);
  c.has_optimizer = true;
  c.optimizer_steps = r.optimizer_steps;
  for (std::size_t i = 0; i < r.first_moments.size(); ++i) {
    c.first_moments.emplace_back(r.first_moments[i].begin(), r.first_moments[i].end());
    c.second_moments.emplace_back(r.second_moments[i].begin(), r.second_moments[i].end());
  }
  write_checkpoint(c, ckpt);
  write_trace(r.trace, trace);
}

template <typename T>
RunSummary run_typed(const ExperimentConfig& cfg, const fs::path& dir, const RunOptions& opt) {
  fs::create_directories(dir);
  fs::remove(dir / "INCOMPLETE");
  write_text(dir / "config.txt", canonical_text(cfg));
  write_provenance(cfg, opt, dir);
  RunSummary summary;
  summary.label = cfg.name;

  Manifest train_m;
  Manifest eval_m;
  stage(dir, "dataset", opt.verbose, [&] {
    SynthOptions so;
    so.source = cfg.dataset.source;
    so.source_count = cfg.dataset.source_count;
    so.image_size = cfg.dataset.image_size;
    so.categories = cfg.dataset.categories;
    so.threads = opt.threads;
    if (!cfg.dataset.manifest.empty()) {
      train_m = parse_manifest(cfg.dataset.manifest);
    } else {
      so.per_category = cfg.dataset.per_category;
      so.seed = derive_seed(cfg.seed, 0xda7a);
      so.out_dir = dir / "data" / "train";
      train_m = synth_dataset(so);
    }
    if (!cfg.eval.manifest.empty()) {
      eval_m = parse_manifest(cfg.eval.manifest);
    } else {
      so.per_category = cfg.eval.per_category;
      so.seed = derive_seed(cfg.seed, 0xe7a1);
      so.out_dir = dir / "data" / "eval";
      eval_m = synth_dataset(so);
    }
    if (train_m.entries.empty()) throw std::runtime_error("empty training set");
    if (eval_m.entries.empty()) throw std::runtime_error("empty evaluation set");
  });

  std::vector<TrainingPair> pairs;
  stage(dir, "load", opt.verbose, [&] { pairs = load_pairs(train_m, opt.threads); });
  std::vector<TrainingPair> base_pairs = pairs;
  std::vector<TrainingPair> corr_pairs = pairs;
  if (cfg.corrector.enabled && cfg.corrector.disjoint_split) {
    base_pairs.clear();
    corr_pairs.clear();
    for (std::size_t i = 0; i < pairs.size(); ++i) (i % 2 == 0 ? base_pairs : corr_pairs).push_back(pairs[i]);
    if (corr_pairs.empty()) throw ExperimentError("disjoint split needs at least two training pairs");
  }
  corr_pairs = spread_subset(corr_pairs, cfg.corrector.pairs);

  TrainResult<T> base;
  stage(dir, "train", opt.verbose, [&] {
    base = train_run<T>(base_run_config(cfg, opt.threads), base_pairs);
    save_model(base, cfg.seed, dir / "base.vbck", dir / "base_trace.csv");
  });

  std::optional<ModelParams<T>> corrector;
  if (cfg.corrector.enabled) {
    stage(dir, "corrector", opt.verbose, [&] {
      auto r = train_drift_corrector<T>(base.params, cfg.sampler, corrector_run_config(cfg, opt.threads), corr_pairs);
      if (r.degenerate_pairs > 0 && opt.verbose) {
        std::fprintf(stderr, "note: %d of %zu drift pairs are already exact\n", r.degenerate_pairs, corr_pairs.size());
      }
      save_model(r.train, cfg.seed, dir / "corrector.vbck", dir / "corrector_trace.csv");
      corrector = std::move(r.train.params);
    });
  }

  stage(dir, "infer", opt.verbose, [&] {
    const fs::path final_dir = dir / "pred";
    infer_set<T>(base.params, corrector ? &*corrector : nullptr, eval_m, cfg.sampler, cfg.eval.resize_limit,
                 derive_seed(cfg.seed, 0x1f3), opt.threads, dir / "pred_base", corrector ? &final_dir : nullptr);
  });

  stage(dir, "eval", opt.verbose, [&] {
    summary.lq = evaluate_inputs(eval_m, opt.threads);
    summary.base = evaluate_set(dir / "pred_base", eval_m, opt.threads);
    summary.corrected = corrector.has_value();
    summary.final = corrector ? evaluate_set(dir / "pred", eval_m, opt.threads) : summary.base;
  });

  stage(dir, "report", opt.verbose, [&] {
    write_reports(summary.lq, dir, "report_lq");
    write_reports(summary.base, dir, "report_base");
    write_reports(summary.final, dir, "report");
    write_text(dir / "summary.csv", summary_header() + summary_row(summary));
  });
  return summary;
}

std::string sweep_dir_name(const std::string& key, const std::string& value) {
  std::string k = key.substr(key.find('.') + 1);
  return k + "=" + value;
}

}  // namespace

std::vector<TrainingPair> load_pairs(const Manifest& m, int threads) {
  std::vector<TrainingPair> pairs(m.entries.size());
  parallel_for(m.entries.size(), threads_of(threads), [&](std::size_t i) {
    const auto& e = m.entries[i];
    pairs[i] = {read_image(m.resolve(e.lq)), read_image(m.resolve(e.hq)), e.category};
    if (!pairs[i].lq.same_dims(pairs[i].hq)) throw ImageError("pair " + e.lq.string() + " has mismatched sizes");
  });
  return pairs;
}

EvalReport evaluate_inputs(const Manifest& m, int threads) {
  std::vector<ImageScore> scores(m.entries.size());
  parallel_for(m.entries.size(), threads_of(threads), [&](std::size_t i) {
    const auto& e = m.entries[i];
    const Image lq = read_image(m.resolve(e.lq));
    const Image hq = read_image(m.resolve(e.hq));
    scores[i] = {e.category, e.lq.filename().string(), psnr(hq, lq), ssim(hq, lq)};
  });
  return aggregate(scores);
}

template <typename T>
void infer_set(const ModelParams<T>& base, const ModelParams<T>* corrector, const Manifest& manifest,
               const SamplerConfig& sampler, int resize_limit, std::uint64_t seed, int threads,
               const fs::path& base_dir_out, const fs::path* final_dir_out) {
  fs::create_directories(base_dir_out);
  if (final_dir_out) fs::create_directories(*final_dir_out);
  const int p = base.config.patch_size;
  parallel_for(manifest.entries.size(), threads_of(threads), [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    Image lq = read_image(manifest.resolve(e.lq));
    if (lq.channels != base.config.channels) {
      throw ImageError(e.lq.string() + ": channel count does not match the model");
    }
    const PolicyResult policy = apply_resize_policy(lq, resize_limit);
    const Image work = resize(policy.working, round_to_multiple(policy.working.height, p),
                              round_to_multiple(policy.working.width, p));
    const std::uint64_t item_seed = derive_seed(seed, i);
    Rng base_rng(derive_seed(item_seed, 0));
    const Image base_out = sample_clip(base, work, sampler, base_rng).frames.back();
    const auto back = [&](const Image& img) {
      return resize(img, policy.plan.original_height, policy.plan.original_width);
    };
    write_image(back(base_out), base_dir_out / e.lq.filename());
    if (corrector && final_dir_out) {
      Rng corr_rng(derive_seed(item_seed, 1));
      const Image fixed = sample_clip(*corrector, base_out, sampler, corr_rng).frames.back();
      write_image(back(fixed), *final_dir_out / e.lq.filename());
    }
  });
}

std::string summary_header() { return "label,count,psnr_lq,ssim_lq,psnr_base,ssim_base,psnr_final,ssim_final\n"; }

std::string summary_row(const RunSummary& r) {
  int count = 0;
  for (const auto& c : r.final.categories) count += c.count;
  return r.label + "," + std::to_string(count) + "," + format_fixed(r.lq.psnr, 4) + "," + format_fixed(r.lq.ssim, 6) +
         "," + format_fixed(r.base.psnr, 4) + "," + format_fixed(r.base.ssim, 6) + "," + format_fixed(r.final.psnr, 4) +
         "," + format_fixed(r.final.ssim, 6) + "\n";
}

void write_provenance(const ExperimentConfig& config, const RunOptions& options, const fs::path& dir) {
  const std::string text = canonical_text(config);
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[64];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  std::ofstream out(dir / "provenance.txt");
  out << "config_fnv1a64=" << hash << "\nseed=" << config.seed << "\nversion=" << kVersion
      << "\nkernels=" << kernels::isa_name(kernels::selected())
      << "\nprecision=" << (options.precision == Precision::kF64 ? "f64" : "f32") << "\nthreads=" << options.threads
      << "\ncreated=" << stamp << "\n";
}

RunSummary run_pipeline(const ExperimentConfig& config, const fs::path& out_dir, const RunOptions& options) {
  validate(config);
  if (options.precision == Precision::kF64) return run_typed<double>(config, out_dir, options);
  return run_typed<float>(config, out_dir, options);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir, const RunOptions& options) {
  ExperimentResult result;
  if (config.sweep.key.empty()) {
    result.runs.push_back(run_pipeline(config, out_dir, options));
    return result;
  }
  const std::string& key = config.sweep.key;
  const auto dot = key.find('.');
  std::string combined = key + "," + summary_header();
  for (const auto& value : config.sweep.values) {
    ExperimentConfig c = config;
    c.sweep = {};
    set_config_value(c, key.substr(0, dot), key.substr(dot + 1), value);
    c.name = config.name + "/" + sweep_dir_name(key, value);
    RunSummary run = run_pipeline(c, out_dir / sweep_dir_name(key, value), options);
    combined += value + "," + summary_row(run);
    result.runs.push_back(std::move(run));
  }
  fs::create_directories(out_dir);
  write_text(out_dir / "sweep.csv", combined);
  return result;
}

ExperimentResult run_experiment(const fs::path& config_path, const fs::path& out_dir, const RunOptions& options,
                                std::optional<std::uint64_t> seed_override) {
  ExperimentConfig config = load_config(config_path);
  if (seed_override) config.seed = *seed_override;
  return run_experiment(config, out_dir, options);
}

template void infer_set<float>(const ModelParams<float>&, const ModelParams<float>*, const Manifest&,
                               const SamplerConfig&, int, std::uint64_t, int, const fs::path&, const fs::path*);
template void infer_set<double>(const ModelParams<double>&, const ModelParams<double>*, const Manifest&,
                                const SamplerConfig&, int, std::uint64_t, int, const fs::path&, const fs::path*);

}  // namespace trajrest
