#pragma once
// Pseudo-temporal clips: linear interpolation from an anchor image to a target.

#include <filesystem>
#include <string>
#include <vector>

#include "trajrest/image.hpp"

namespace trajrest {

enum class ClipKind { kBase, kDrift };

struct PseudoClip {
  std::vector<Image> frames;   // T + 1 frames
  std::vector<double> alphas;  // T + 1 values, 0 .. 1
  ClipKind kind = ClipKind::kBase;

  int intervals() const { return static_cast<int>(frames.size()) - 1; }
  const Image& anchor() const { return frames.front(); }
  const Image& target() const { return frames.back(); }
};

// [0, 1/T, ..., 1]. The last entry is exactly 1.
std::vector<double> alpha_schedule(int T);

// frames[t] = (1 - a_t) * lq + a_t * hq, with both endpoints copied verbatim.
PseudoClip build_pseudo_clip(const Image& lq, const Image& hq, int T);

constexpr int kDriftIntervals = 4;

PseudoClip build_drift_clip(const Image& base_output, const Image& hq, int K = kDriftIntervals);

// Writes f000.png ... and clip.txt ("T=<n> kind=<base|drift> anchor=<..> target=<..>").
void write_clip(const PseudoClip& clip, const std::filesystem::path& dir, const std::string& anchor_source,
                const std::string& target_source);

std::string to_string(ClipKind kind);

}  // namespace trajrest
