#include "trajrest/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "trajrest/degrade.hpp"
#include "trajrest/parallel.hpp"
#include "trajrest/trainer.hpp"

namespace trajrest {

Image procedural_scene(int height, int width, std::uint64_t seed) {
  Rng rng(seed);
  Image img(height, width, 3);
  auto color = [&] {
    std::array<double, 3> c{};
    for (double& v : c) v = rng.uniform(0.05, 0.95);
    return c;
  };
  const auto c0 = color();
  const auto c1 = color();
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  const double span = std::abs(dx) * width + std::abs(dy) * height;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double t = std::clamp(0.5 + ((c - width / 2.0) * dx + (r - height / 2.0) * dy) / span, 0.0, 1.0);
      for (int z = 0; z < 3; ++z) img.at(r, c, z) = static_cast<float>(c0[z] + t * (c1[z] - c0[z]));
    }
  }
  const int shapes = 3 + static_cast<int>(rng.uniform_int(4));
  for (int s = 0; s < shapes; ++s) {
    const auto col = color();
    const bool disk = rng.bernoulli(0.5);
    const double cy = rng.uniform(0.0, height);
    const double cx = rng.uniform(0.0, width);
    const double a = rng.uniform(0.1, 0.35) * std::min(height, width);
    const double b = rng.uniform(0.1, 0.35) * std::min(height, width);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const double y = r + 0.5 - cy;
        const double x = c + 0.5 - cx;
        const bool inside = disk ? (x * x + y * y <= a * a) : (std::abs(x) <= a && std::abs(y) <= b);
        if (!inside) continue;
        for (int z = 0; z < 3; ++z) img.at(r, c, z) = static_cast<float>(col[z]);
      }
    }
  }
  // Oriented stripes over one rectangle.
  const auto sc = color();
  const double freq = rng.uniform(0.3, 1.2);
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const int r0 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(height / 2 + 1)));
  const int c0s = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(width / 2 + 1)));
  const int rh = std::max(1, height / 3);
  const int cw = std::max(1, width / 3);
  for (int r = r0; r < std::min(height, r0 + rh); ++r) {
    for (int c = c0s; c < std::min(width, c0s + cw); ++c) {
      const double w = 0.5 + 0.5 * std::sin(freq * (c * std::cos(theta) + r * std::sin(theta)));
      for (int z = 0; z < 3; ++z) img.at(r, c, z) = static_cast<float>(w * sc[z] + (1.0 - w) * img.at(r, c, z));
    }
  }
  img.clamp();
  return img;
}

namespace {

Image to_rgb(const Image& img) {
  if (img.channels == 3) return img;
  Image out(img.height, img.width, 3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    for (int z = 0; z < 3; ++z) out.pixels[i * 3 + z] = img.pixels[i];
  }
  return out;
}

std::string slug(const std::string& category) {
  std::string s;
  for (char ch : category) s += ch == '+' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

}  // namespace

std::vector<Image> load_sources(const SynthOptions& o) {
  std::vector<Image> sources;
  if (o.source == "procedural") {
    for (int i = 0; i < o.source_count; ++i) {
      sources.push_back(procedural_scene(o.image_size, o.image_size, derive_seed(o.seed ^ 0x5ce4e5ULL, i)));
    }
    return sources;
  }
  const std::filesystem::path dir(o.source);
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("source directory not found: " + o.source);
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && (ext == ".png" || ext == ".ppm" || ext == ".pgm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const Image img = read_image(f);
    if (std::min(img.height, img.width) < o.image_size) continue;
    sources.push_back(center_square(to_rgb(img), o.image_size));
  }
  return sources;
}

Manifest synth_dataset(const SynthOptions& o) {
  if (o.per_category < 0) throw std::invalid_argument("synth: per_category must be >= 0");
  const std::vector<std::string> cats = o.categories.empty() ? all_categories() : o.categories;
  for (const auto& c : cats) {
    if (!is_category(c)) throw std::invalid_argument("synth: unknown category '" + c + "'");
  }
  const std::size_t total = cats.size() * static_cast<std::size_t>(o.per_category);
  std::vector<Image> sources;
  if (total > 0) {
    sources = load_sources(o);
    if (sources.empty()) {
      throw std::runtime_error("synth: insufficient source images (need at least one of size >= " +
                               std::to_string(o.image_size) + ")");
    }
  }
  std::filesystem::create_directories(o.out_dir / "hq");
  std::filesystem::create_directories(o.out_dir / "lq");
  Manifest m;
  m.base_dir = o.out_dir;
  m.entries.resize(total);
  std::vector<std::string> recipes(total);
  parallel_for(total, static_cast<std::size_t>(std::max(1, o.threads)), [&](std::size_t j) {
    const std::string& cat = cats[j / o.per_category];
    Rng rng(derive_seed(o.seed, j));
    const Image& hq = sources[rng.uniform_int(sources.size())];
    const DegradationRecipe recipe = sample_recipe(cat, rng);
    const Image lq = apply_recipe(hq, recipe);
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%04zu.png", slug(cat).c_str(), j % o.per_category);
    write_image(hq, o.out_dir / "hq" / name);
    write_image(lq, o.out_dir / "lq" / name);
    m.entries[j] = {cat, std::filesystem::path("lq") / name, std::filesystem::path("hq") / name};
    recipes[j] = std::string(name) + "\t" + to_string(recipe);
  });
  write_manifest(m, o.out_dir / "manifest.tsv");
  std::ofstream rec(o.out_dir / "recipes.tsv", std::ios::binary);
  for (const auto& r : recipes) rec << r << '\n';
  return m;
}

}  // namespace trajrest
