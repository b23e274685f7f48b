#include "trajrest/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "trajrest/degrade.hpp"
#include "trajrest/parallel.hpp"

namespace trajrest {

namespace {

void require_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_dims(b)) {
    throw ImageError(std::string(what) + ": dimension mismatch " + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + "x" + std::to_string(a.channels) + " vs " + std::to_string(b.height) +
                     "x" + std::to_string(b.width) + "x" + std::to_string(b.channels));
  }
}

std::vector<double> to_u8_scale(const Image& img) {
  std::vector<double> out(img.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = quantize_u8(img.pixels[i]);
  return out;
}

// Valid-mode separable filtering of one channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1;
  const int oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * plane[static_cast<std::size_t>(r) * w + c + i];
      tmp[static_cast<std::size_t>(r) * ow + c] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * tmp[static_cast<std::size_t>(r + i) * ow + c];
      out[static_cast<std::size_t>(r) * ow + c] = acc;
    }
  }
  return out;
}

}  // namespace

double psnr(const Image& gt, const Image& pred) {
  require_same(gt, pred, "psnr");
  double sse = 0.0;
  for (std::size_t i = 0; i < gt.pixels.size(); ++i) {
    const double d = static_cast<double>(quantize_u8(gt.pixels[i])) - static_cast<double>(quantize_u8(pred.pixels[i]));
    sse += d * d;
  }
  if (sse == 0.0) return kPsnrCap;
  const double mse = sse / static_cast<double>(gt.pixels.size());
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

std::vector<double> SsimParams::taps() const {
  std::vector<double> k(window);
  const double c = (window - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < window; ++i) {
    k[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
    total += k[i];
  }
  for (double& v : k) v /= total;
  return k;
}

double ssim(const Image& gt, const Image& pred, const SsimParams& params) {
  require_same(gt, pred, "ssim");
  if (gt.height < params.window || gt.width < params.window) {
    throw ImageError("ssim: image " + std::to_string(gt.height) + "x" + std::to_string(gt.width) +
                     " is smaller than the " + std::to_string(params.window) + "-pixel window");
  }
  const auto k = params.taps();
  const auto x = to_u8_scale(gt);
  const auto y = to_u8_scale(pred);
  const int h = gt.height;
  const int w = gt.width;
  const int ch = gt.channels;
  const double c1 = params.c1();
  const double c2 = params.c2();
  const std::size_t plane_size = static_cast<std::size_t>(h) * w;
  double total = 0.0;
  for (int z = 0; z < ch; ++z) {
    std::vector<double> px(plane_size), py(plane_size), pxx(plane_size), pyy(plane_size), pxy(plane_size);
    for (std::size_t i = 0; i < plane_size; ++i) {
      px[i] = x[i * ch + z];
      py[i] = y[i * ch + z];
      pxx[i] = px[i] * px[i];
      pyy[i] = py[i] * py[i];
      pxy[i] = px[i] * py[i];
    }
    const auto mx = filter_valid(px, h, w, k);
    const auto my = filter_valid(py, h, w, k);
    const auto exx = filter_valid(pxx, h, w, k);
    const auto eyy = filter_valid(pyy, h, w, k);
    const auto exy = filter_valid(pxy, h, w, k);
    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double sxx = exx[i] - mx[i] * mx[i];
      const double syy = eyy[i] - my[i] * my[i];
      const double sxy = exy[i] - mx[i] * my[i];
      sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * sxy + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (sxx + syy + c2));
    }
    total += sum / static_cast<double>(mx.size());
  }
  return total / ch;
}

Image ResizePlan::restore(const Image& img) const { return resize(img, original_height, original_width); }

PolicyResult apply_resize_policy(const Image& img, int limit) {
  PolicyResult out;
  out.plan.original_height = img.height;
  out.plan.original_width = img.width;
  const int longer = std::max(img.height, img.width);
  if (longer <= limit) {
    out.working = img;
    return out;
  }
  const double s = static_cast<double>(limit) / longer;
  const int h = std::max(1, static_cast<int>(std::lround(img.height * s)));
  const int w = std::max(1, static_cast<int>(std::lround(img.width * s)));
  out.plan.resized = true;
  out.working = resize(img, h, w);
  return out;
}

EvalReport aggregate(const std::vector<ImageScore>& scores) {
  struct Acc {
    int n = 0;
    double psnr = 0.0;
    double ssim = 0.0;
  };
  std::map<std::string, Acc> by_cat;
  for (const auto& s : scores) {
    Acc& a = by_cat[s.category];
    ++a.n;
    a.psnr += s.psnr;
    a.ssim += s.ssim;
  }
  EvalReport report;
  for (const auto& name : all_categories()) {
    auto it = by_cat.find(name);
    if (it == by_cat.end()) continue;
    const Acc& a = it->second;
    report.categories.push_back({name, a.n, a.psnr / a.n, a.ssim / a.n});
    by_cat.erase(it);
  }
  if (!by_cat.empty()) throw std::invalid_argument("aggregate: unknown category '" + by_cat.begin()->first + "'");
  if (!report.categories.empty()) {
    for (const auto& c : report.categories) {
      report.psnr += c.psnr;
      report.ssim += c.ssim;
    }
    report.psnr /= static_cast<double>(report.categories.size());
    report.ssim /= static_cast<double>(report.categories.size());
  }
  return report;
}

std::vector<ImageScore> score_set(const std::filesystem::path& pred_dir, const Manifest& manifest, int threads) {
  std::string missing;
  for (const auto& e : manifest.entries) {
    const auto p = pred_dir / e.lq.filename();
    if (!std::filesystem::exists(p)) missing += "\n  " + p.string();
  }
  if (!missing.empty()) throw std::runtime_error("missing predictions:" + missing);
  std::vector<ImageScore> scores(manifest.entries.size());
  parallel_for(manifest.entries.size(), static_cast<std::size_t>(std::max(1, threads)), [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    const Image gt = read_image(manifest.resolve(e.hq));
    const Image pred = read_image(pred_dir / e.lq.filename());
    if (!gt.same_dims(pred)) throw ImageError("prediction for " + e.lq.string() + " has the wrong dimensions");
    scores[i] = {e.category, e.lq.filename().string(), psnr(gt, pred), ssim(gt, pred)};
  });
  return scores;
}

EvalReport evaluate_set(const std::filesystem::path& pred_dir, const Manifest& manifest, int threads) {
  return aggregate(score_set(pred_dir, manifest, threads));
}

}  // namespace trajrest
