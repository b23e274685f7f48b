#pragma once
// PSNR and SSIM on the 8-bit grid, the large-image resize policy, and
// per-category aggregation.

#include <filesystem>
#include <string>
#include <vector>

#include "trajrest/image.hpp"
#include "trajrest/manifest.hpp"

namespace trajrest {

constexpr double kPsnrCap = 100.0;

// Both images are quantized to round(v * 255) first. Zero error, or any value
// above the cap, reports kPsnrCap.
double psnr(const Image& gt, const Image& pred);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  // Normalized 1-D Gaussian taps; the 2-D window is their outer product.
  std::vector<double> taps() const;
};

// Mean local SSIM over all positions where the window fits, computed per
// channel on the 0..255 scale and averaged over channels.
double ssim(const Image& gt, const Image& pred, const SsimParams& params = {});

struct ResizePlan {
  int original_height = 0;
  int original_width = 0;
  bool resized = false;
  // Back to the original dimensions (a copy when nothing was resized).
  Image restore(const Image& img) const;
};

struct PolicyResult {
  Image working;
  ResizePlan plan;
};

// Scales so the longer side equals `limit` when it exceeds it.
PolicyResult apply_resize_policy(const Image& img, int limit = 2048);

struct ImageScore {
  std::string category;
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct CategoryStats {
  std::string category;
  int count = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  std::vector<CategoryStats> categories;  // report column order, present ones only
  double psnr = 0.0;                      // mean of category means
  double ssim = 0.0;
  std::string checkpoint_id;
  std::string dataset_id;
  std::string timestamp;
};

EvalReport aggregate(const std::vector<ImageScore>& scores);

// Scores every manifest entry against the prediction with the same file name
// as its LQ image inside pred_dir. All missing predictions are listed in one
// error before any scoring.
EvalReport evaluate_set(const std::filesystem::path& pred_dir, const Manifest& manifest, int threads = 1);

std::vector<ImageScore> score_set(const std::filesystem::path& pred_dir, const Manifest& manifest, int threads = 1);

}  // namespace trajrest
