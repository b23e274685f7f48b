#pragma once
// Synthetic paired datasets.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trajrest/image.hpp"
#include "trajrest/manifest.hpp"

namespace trajrest {

// Clean RGB scene: a two-color gradient, a few flat disks and rectangles, and
// a patch of oriented stripes. Deterministic in (size, seed).
Image procedural_scene(int height, int width, std::uint64_t seed);

struct SynthOptions {
  std::string source = "procedural";  // or a directory of clean images
  int source_count = 256;             // procedural scenes to draw from
  int image_size = 32;
  std::vector<std::string> categories;  // empty means all
  int per_category = 50;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  int threads = 1;
};

// Clean images the pairs are drawn from, each a centered image_size square.
std::vector<Image> load_sources(const SynthOptions& options);

// Item j (category j / per_category) draws its source index and then its
// recipe from Rng(derive_seed(seed, j)). Writes hq/, lq/, manifest.tsv and
// recipes.tsv under out_dir and returns the manifest.
Manifest synth_dataset(const SynthOptions& options);

}  // namespace trajrest
