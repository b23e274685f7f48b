#include "trajrest/sequence.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace trajrest {

std::vector<double> alpha_schedule(int T) {
  if (T < 1) throw std::invalid_argument("alpha_schedule: T must be >= 1, got " + std::to_string(T));
  std::vector<double> alphas(static_cast<std::size_t>(T) + 1);
  for (int t = 0; t <= T; ++t) alphas[t] = static_cast<double>(t) / T;
  return alphas;
}

namespace {

PseudoClip interpolate(const Image& from, const Image& to, int T, ClipKind kind) {
  if (!from.same_dims(to)) throw ImageError("clip endpoints differ in dimensions");
  PseudoClip clip;
  clip.kind = kind;
  clip.alphas = alpha_schedule(T);
  clip.frames.reserve(clip.alphas.size());
  clip.frames.push_back(from);
  for (int t = 1; t < T; ++t) {
    const float a = static_cast<float>(clip.alphas[t]);
    Image frame(from.height, from.width, from.channels);
    for (std::size_t i = 0; i < frame.pixels.size(); ++i) frame.pixels[i] = std::lerp(from.pixels[i], to.pixels[i], a);
    clip.frames.push_back(std::move(frame));
  }
  clip.frames.push_back(to);
  return clip;
}

}  // namespace

PseudoClip build_pseudo_clip(const Image& lq, const Image& hq, int T) {
  return interpolate(lq, hq, T, ClipKind::kBase);
}

PseudoClip build_drift_clip(const Image& base_output, const Image& hq, int K) {
  return interpolate(base_output, hq, K, ClipKind::kDrift);
}

std::string to_string(ClipKind kind) { return kind == ClipKind::kBase ? "base" : "drift"; }

void write_clip(const PseudoClip& clip, const std::filesystem::path& dir, const std::string& anchor_source,
                const std::string& target_source) {
  std::filesystem::create_directories(dir);
  for (std::size_t t = 0; t < clip.frames.size(); ++t) {
    char name[16];
    std::snprintf(name, sizeof(name), "f%03zu.png", t);
    write_image(clip.frames[t], dir / name);
  }
  std::ofstream meta(dir / "clip.txt");
  if (!meta) throw ImageError("cannot write clip metadata in " + dir.string());
  meta << "T=" << clip.intervals() << " kind=" << to_string(clip.kind) << " anchor=" << anchor_source
       << " target=" << target_source << '\n';
}

}  // namespace trajrest
