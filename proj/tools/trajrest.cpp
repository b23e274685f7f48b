// Command-line front end: synth, train, train-corrector, infer, eval, report,
// experiment.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "trajrest/checkpoint.hpp"
#include "trajrest/config.hpp"
#include "trajrest/degrade.hpp"
#include "trajrest/experiment.hpp"
#include "trajrest/report.hpp"
#include "trajrest/synth.hpp"

namespace {

using namespace trajrest;
namespace fs = std::filesystem;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string precision = "f32";
  int threads = 1;
  bool verbose = false;

  RunOptions options() const {
    RunOptions o;
    o.threads = threads;
    o.precision = precision == "f64" ? Precision::kF64 : Precision::kF32;
    o.verbose = verbose;
    return o;
  }
};

ExperimentConfig load_with_seed(const std::string& path, const Globals& g) {
  ExperimentConfig c = path.empty() ? ExperimentConfig{} : load_config(path);
  if (g.seed) c.seed = *g.seed;
  return c;
}

template <typename T>
void save(const TrainResult<T>& r, std::uint64_t seed, const std::string& out, const std::string& trace) {
  write_checkpoint(make_checkpoint(r.params, seed, r.optimizer_steps), out);
  if (!trace.empty()) write_trace(r.trace, trace);
  std::printf("wrote %s (%lld steps, final loss %.6g)\n", out.c_str(), static_cast<long long>(r.optimizer_steps),
              r.trace.empty() ? 0.0 : r.trace.back().loss);
}

template <typename T>
void do_train(const ExperimentConfig& c, const Globals& g, const std::string& manifest, const std::string& out,
              const std::string& trace) {
  const auto pairs = load_pairs(parse_manifest(manifest), g.threads);
  save(train_run<T>(base_run_config(c, g.threads), pairs), c.seed, out, trace);
}

template <typename T>
void do_train_corrector(const ExperimentConfig& c, const Globals& g, const std::string& manifest,
                        const std::string& base_path, const std::string& out, const std::string& trace) {
  const auto pairs = load_pairs(parse_manifest(manifest), g.threads);
  const auto base = params_from_checkpoint<T>(read_checkpoint(base_path));
  auto r = train_drift_corrector<T>(base, c.sampler, corrector_run_config(c, g.threads), pairs);
  save(r.train, c.seed, out, trace);
}

template <typename T>
void do_infer(const ExperimentConfig& c, const Globals& g, const std::string& manifest, const std::string& base_path,
              const std::string& corr_path, const std::string& out) {
  const auto base = params_from_checkpoint<T>(read_checkpoint(base_path));
  std::optional<ModelParams<T>> corr;
  if (!corr_path.empty()) corr = params_from_checkpoint<T>(read_checkpoint(corr_path));
  const fs::path out_dir(out);
  const fs::path base_dir = corr ? out_dir / "base" : out_dir;
  infer_set<T>(base, corr ? &*corr : nullptr, parse_manifest(manifest), c.sampler, c.eval.resize_limit,
               derive_seed(c.seed, 0x1f3), g.threads, base_dir, corr ? &out_dir : nullptr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Restoration as trajectory generation, at desk scale"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Override the experiment seed");
  app.add_option("--precision", g.precision, "Arithmetic precision")->check(CLI::IsMember({"f32", "f64"}));
  app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", g.verbose, "Progress on stderr");

  SynthOptions so;
  std::string synth_cats;
  auto* synth = app.add_subcommand("synth", "Synthesize a paired dataset");
  synth->add_option("--out", so.out_dir, "Output directory")->required();
  synth->add_option("-n,--per-category", so.per_category, "Pairs per category");
  synth->add_option("--categories", synth_cats, "Comma list, default all");
  synth->add_option("--source", so.source, "'procedural' or a directory of clean images");
  synth->add_option("--source-count", so.source_count, "Procedural scenes to draw from");
  synth->add_option("--size", so.image_size, "Square image size");

  std::string config_path, manifest, out, trace, base_path, corr_path, pred_dir, csv_in, format = "markdown";
  auto* train = app.add_subcommand("train", "Train the base model on a manifest");
  train->add_option("--config", config_path, "Experiment config");
  train->add_option("--manifest", manifest, "Training manifest")->required();
  train->add_option("--out", out, "Checkpoint path")->required();
  train->add_option("--trace", trace, "Loss trace CSV");

  auto* train_corr = app.add_subcommand("train-corrector", "Train the drift corrector");
  train_corr->add_option("--config", config_path, "Experiment config");
  train_corr->add_option("--manifest", manifest, "Training manifest")->required();
  train_corr->add_option("--base", base_path, "Base checkpoint")->required();
  train_corr->add_option("--out", out, "Checkpoint path")->required();
  train_corr->add_option("--trace", trace, "Loss trace CSV");

  auto* infer = app.add_subcommand("infer", "Restore every LQ image of a manifest");
  infer->add_option("--config", config_path, "Experiment config (sampler, eval sections)");
  infer->add_option("--manifest", manifest, "Manifest")->required();
  infer->add_option("--base", base_path, "Base checkpoint")->required();
  infer->add_option("--corrector", corr_path, "Corrector checkpoint");
  infer->add_option("--out", out, "Prediction directory")->required();

  auto* eval = app.add_subcommand("eval", "Score predictions against a manifest");
  eval->add_option("--manifest", manifest, "Manifest")->required();
  eval->add_option("--pred", pred_dir, "Prediction directory")->required();
  eval->add_option("--out", out, "Report path prefix (writes .csv and .md)");

  auto* report = app.add_subcommand("report", "Render a report CSV");
  report->add_option("--csv", csv_in, "Report CSV from eval")->required();
  report->add_option("--format", format, "Output format")->check(CLI::IsMember({"markdown", "csv"}));
  report->add_option("--out", out, "Output path (stdout when omitted)");

  auto* experiment = app.add_subcommand("experiment", "Run a full experiment from a config");
  experiment->add_option("--config", config_path, "Experiment config")->required();
  experiment->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const bool f64 = g.precision == "f64";
    if (*synth) {
      std::stringstream ss(synth_cats);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) so.categories.push_back(item);
      }
      so.seed = g.seed.value_or(0);
      so.threads = g.threads;
      const Manifest m = synth_dataset(so);
      std::printf("wrote %zu pairs to %s\n", m.entries.size(), so.out_dir.string().c_str());
    } else if (*train) {
      const auto c = load_with_seed(config_path, g);
      f64 ? do_train<double>(c, g, manifest, out, trace) : do_train<float>(c, g, manifest, out, trace);
    } else if (*train_corr) {
      const auto c = load_with_seed(config_path, g);
      f64 ? do_train_corrector<double>(c, g, manifest, base_path, out, trace)
          : do_train_corrector<float>(c, g, manifest, base_path, out, trace);
    } else if (*infer) {
      const auto c = load_with_seed(config_path, g);
      f64 ? do_infer<double>(c, g, manifest, base_path, corr_path, out)
          : do_infer<float>(c, g, manifest, base_path, corr_path, out);
    } else if (*eval) {
      const EvalReport r = evaluate_set(pred_dir, parse_manifest(manifest), g.threads);
      if (!out.empty()) {
        emit_report(r, ReportFormat::kCsv, out + ".csv");
        emit_report(r, ReportFormat::kMarkdown, out + ".md");
      }
      std::cout << render_markdown(r);
    } else if (*report) {
      std::ifstream in(csv_in);
      if (!in) throw std::runtime_error("cannot open " + csv_in);
      std::stringstream ss;
      ss << in.rdbuf();
      const EvalReport r = parse_report_csv(ss.str());
      const ReportFormat f = format == "csv" ? ReportFormat::kCsv : ReportFormat::kMarkdown;
      if (out.empty()) {
        std::cout << (f == ReportFormat::kCsv ? render_csv(r) : render_markdown(r));
      } else {
        emit_report(r, f, out);
      }
    } else if (*experiment) {
      const auto result = run_experiment(config_path, out, g.options(), g.seed);
      std::cout << summary_header();
      for (const auto& run : result.runs) std::cout << summary_row(run);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
