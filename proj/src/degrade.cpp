#include "trajrest/degrade.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>

namespace trajrest {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw RecipeError("recipe parameter out of range: " + what);
}

// ---------------------------------------------------------------------------
// Formatting and parsing

std::string fmt(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string step_text(const DegradationStep& step) {
  return std::visit(
      Overloaded{
          [](const GaussianBlur& s) { return "blur(sigma=" + fmt(s.sigma) + ")"; },
          [](const GaussianNoise& s) { return "noise(sigma255=" + fmt(s.sigma_255) + ")"; },
          [](const BlockCompress& s) { return "jpeg(quality=" + std::to_string(s.quality) + ")"; },
          [](const Haze& s) {
            return "haze(beta=" + fmt(s.beta) + ",airlight=" + fmt(s.airlight) +
                   ",depth=" + (s.depth == DepthMode::kConstant ? "constant" : "gradient") + ")";
          },
          [](const RainStreaks& s) {
            return "rain(count=" + std::to_string(s.count) + ",length=" + fmt(s.length_px) +
                   ",angle=" + fmt(s.angle_deg) + ",intensity=" + fmt(s.intensity) + ")";
          },
          [](const Raindrop& s) {
            return "raindrop(count=" + std::to_string(s.count) + ",radius=" + fmt(s.radius_px) +
                   ",alpha=" + fmt(s.alpha) + ")";
          },
          [](const LowLight& s) {
            return "lowlight(gamma=" + fmt(s.gamma) + ",scale=" + fmt(s.scale) +
                   ",noise255=" + fmt(s.noise_sigma_255) + ")";
          },
      },
      step);
}

double parse_number(std::string_view text, const std::string& key) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw RecipeError("recipe: bad number for '" + key + "': " + std::string(text));
  }
  return v;
}

int parse_int(std::string_view text, const std::string& key) {
  int v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw RecipeError("recipe: bad integer for '" + key + "': " + std::string(text));
  }
  return v;
}

class KeyValues {
 public:
  KeyValues(std::string_view name, std::string_view body) : name_(name) {
    std::size_t pos = 0;
    while (pos < body.size()) {
      std::size_t comma = body.find(',', pos);
      if (comma == std::string_view::npos) comma = body.size();
      const std::string_view kv = body.substr(pos, comma - pos);
      const std::size_t eq = kv.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        throw RecipeError("recipe: malformed parameter '" + std::string(kv) + "' in " + std::string(name));
      }
      const std::string key(kv.substr(0, eq));
      if (!values_.emplace(key, kv.substr(eq + 1)).second) {
        throw RecipeError("recipe: duplicate key '" + key + "' in " + std::string(name));
      }
      pos = comma + 1;
    }
  }

  std::string_view take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) throw RecipeError("recipe: " + name_ + " is missing '" + key + "'");
    const std::string_view v = it->second;
    values_.erase(it);
    return v;
  }
  double number(const std::string& key) { return parse_number(take(key), key); }
  int integer(const std::string& key) { return parse_int(take(key), key); }

  void finish() const {
    if (!values_.empty()) throw RecipeError("recipe: unknown key '" + values_.begin()->first + "' in " + name_);
  }

 private:
  std::string name_;
  std::map<std::string, std::string_view> values_;
};

DegradationStep parse_step(std::string_view text) {
  const std::size_t open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') {
    throw RecipeError("recipe: malformed step '" + std::string(text) + "'");
  }
  const std::string name(text.substr(0, open));
  KeyValues kv(name, text.substr(open + 1, text.size() - open - 2));
  DegradationStep step;
  if (name == "blur") {
    step = GaussianBlur{kv.number("sigma")};
  } else if (name == "noise") {
    step = GaussianNoise{kv.number("sigma255")};
  } else if (name == "jpeg") {
    step = BlockCompress{kv.integer("quality")};
  } else if (name == "haze") {
    Haze h;
    h.beta = kv.number("beta");
    h.airlight = kv.number("airlight");
    const std::string_view depth = kv.take("depth");
    if (depth == "constant") {
      h.depth = DepthMode::kConstant;
    } else if (depth == "gradient") {
      h.depth = DepthMode::kVerticalGradient;
    } else {
      throw RecipeError("recipe: unknown haze depth '" + std::string(depth) + "'");
    }
    step = h;
  } else if (name == "rain") {
    RainStreaks r;
    r.count = kv.integer("count");
    r.length_px = kv.number("length");
    r.angle_deg = kv.number("angle");
    r.intensity = kv.number("intensity");
    step = r;
  } else if (name == "raindrop") {
    Raindrop r;
    r.count = kv.integer("count");
    r.radius_px = kv.number("radius");
    r.alpha = kv.number("alpha");
    step = r;
  } else if (name == "lowlight") {
    LowLight l;
    l.gamma = kv.number("gamma");
    l.scale = kv.number("scale");
    l.noise_sigma_255 = kv.number("noise255");
    step = l;
  } else {
    throw RecipeError("recipe: unknown step '" + name + "'");
  }
  kv.finish();
  validate(step);
  return step;
}

// ---------------------------------------------------------------------------
// Degradation kernels

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  if (radius == 0) {
    k[0] = 1.0;
    return k;
  }
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += k[i + radius];
  }
  for (double& v : k) v /= total;
  return k;
}

Image blur(const Image& img, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  if (radius == 0) return img;
  const int h = img.height;
  const int w = img.width;
  const int ch = img.channels;
  Image tmp(h, w, ch);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int z = 0; z < ch; ++z) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * img.at(r, std::clamp(c + i, 0, w - 1), z);
        tmp.at(r, c, z) = static_cast<float>(acc);
      }
    }
  }
  Image out(h, w, ch);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int z = 0; z < ch; ++z) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp.at(std::clamp(r + i, 0, h - 1), c, z);
        out.at(r, c, z) = static_cast<float>(acc);
      }
    }
  }
  out.clamp();
  return out;
}

Image add_noise(const Image& img, double sigma_255, Rng& rng) {
  Image out = img;
  const double s = sigma_255 / 255.0;
  for (float& v : out.pixels) v = static_cast<float>(v + s * rng.normal());
  out.clamp();
  return out;
}

Image block_compress(const Image& img, int quality) {
  const auto table = quantization_table(quality);
  const int bh = (img.height + 7) / 8;
  const int bw = (img.width + 7) / 8;
  Image out(img.height, img.width, img.channels);
  std::array<double, 64> block{};
  std::array<double, 64> coef{};
  std::array<double, 64> rec{};
  for (int z = 0; z < img.channels; ++z) {
    for (int by = 0; by < bh; ++by) {
      for (int bx = 0; bx < bw; ++bx) {
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) {
            // Edge replication pads partial blocks.
            const int r = std::min(by * 8 + y, img.height - 1);
            const int c = std::min(bx * 8 + x, img.width - 1);
            block[y * 8 + x] = static_cast<double>(img.at(r, c, z)) * 255.0 - 128.0;
          }
        }
        dct8x8(block.data(), coef.data());
        for (int i = 0; i < 64; ++i) coef[i] = std::nearbyint(coef[i] / table[i]) * table[i];
        idct8x8(coef.data(), rec.data());
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) {
            const int r = by * 8 + y;
            const int c = bx * 8 + x;
            if (r >= img.height || c >= img.width) continue;
            out.at(r, c, z) = static_cast<float>(std::clamp((rec[y * 8 + x] + 128.0) / 255.0, 0.0, 1.0));
          }
        }
      }
    }
  }
  return out;
}

Image haze(const Image& img, const Haze& p) {
  Image out(img.height, img.width, img.channels);
  for (int r = 0; r < img.height; ++r) {
    double d = 1.0;
    if (p.depth == DepthMode::kVerticalGradient && img.height > 1) d = 1.0 - static_cast<double>(r) / (img.height - 1);
    const double t = std::exp(-p.beta * d);
    for (int c = 0; c < img.width; ++c) {
      for (int z = 0; z < img.channels; ++z) {
        out.at(r, c, z) = static_cast<float>(img.at(r, c, z) * t + p.airlight * (1.0 - t));
      }
    }
  }
  out.clamp();
  return out;
}

Image rain(const Image& img, const RainStreaks& p, Rng& rng) {
  Image out = img;
  const double theta = p.angle_deg * std::numbers::pi / 180.0;
  const double dx = std::sin(theta);
  const double dy = std::cos(theta);
  const int steps = std::max(1, static_cast<int>(std::lround(p.length_px)));
  const float a = static_cast<float>(p.intensity);
  for (int s = 0; s < p.count; ++s) {
    const double r0 = rng.uniform(-p.length_px, img.height);
    const double c0 = rng.uniform(0.0, img.width);
    for (int t = 0; t < steps; ++t) {
      const int r = static_cast<int>(std::floor(r0 + t * dy));
      const int c = static_cast<int>(std::floor(c0 + t * dx));
      if (r < 0 || r >= img.height || c < 0 || c >= img.width) continue;
      for (int z = 0; z < img.channels; ++z) {
        float& v = out.at(r, c, z);
        v = (1.0f - a) * v + a;
      }
    }
  }
  out.clamp();
  return out;
}

Image raindrops(const Image& img, const Raindrop& p, Rng& rng) {
  Image out = img;
  for (int d = 0; d < p.count; ++d) {
    const double cy = rng.uniform(0.0, img.height);
    const double cx = rng.uniform(0.0, img.width);
    const double rad = p.radius_px;
    const int r_lo = std::max(0, static_cast<int>(std::floor(cy - rad)));
    const int r_hi = std::min(img.height - 1, static_cast<int>(std::ceil(cy + rad)));
    const int c_lo = std::max(0, static_cast<int>(std::floor(cx - rad)));
    const int c_hi = std::min(img.width - 1, static_cast<int>(std::ceil(cx + rad)));
    // A drop shows a smoothed, slightly brightened view of what lies beneath.
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    int n = 0;
    for (int r = r_lo; r <= r_hi; ++r) {
      for (int c = c_lo; c <= c_hi; ++c) {
        for (int z = 0; z < img.channels; ++z) mean[z] += out.at(r, c, z);
        ++n;
      }
    }
    if (n == 0) continue;
    for (int z = 0; z < img.channels; ++z) mean[z] = std::min(1.0, mean[z] / n + 0.1);
    for (int r = r_lo; r <= r_hi; ++r) {
      for (int c = c_lo; c <= c_hi; ++c) {
        const double dist = std::hypot(r + 0.5 - cy, c + 0.5 - cx) / rad;
        if (dist >= 1.0) continue;
        const double w = p.alpha * (1.0 - dist * dist);
        for (int z = 0; z < img.channels; ++z) {
          float& v = out.at(r, c, z);
          v = static_cast<float>((1.0 - w) * v + w * mean[z]);
        }
      }
    }
  }
  out.clamp();
  return out;
}

Image lowlight(const Image& img, const LowLight& p, Rng& rng) {
  Image out = img;
  for (float& v : out.pixels) v = static_cast<float>(std::pow(static_cast<double>(v) * p.scale, p.gamma));
  if (p.noise_sigma_255 > 0.0) return add_noise(out, p.noise_sigma_255, rng);
  out.clamp();
  return out;
}

// Matrix C with C[u][x] = c(u) cos((2x+1) u pi / 16), orthonormal.
const std::array<double, 64>& dct_matrix() {
  static const std::array<double, 64> m = [] {
    std::array<double, 64> out{};
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) out[u * 8 + x] = cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
    return out;
  }();
  return m;
}

}  // namespace

void dct8x8(const double* in, double* out) {
  const auto& m = dct_matrix();
  std::array<double, 64> tmp{};
  // rows: tmp = in * C^T ; cols: out = C * tmp
  for (int y = 0; y < 8; ++y) {
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x) acc += in[y * 8 + x] * m[u * 8 + x];
      tmp[y * 8 + u] = acc;
    }
  }
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int y = 0; y < 8; ++y) acc += m[v * 8 + y] * tmp[y * 8 + u];
      out[v * 8 + u] = acc;
    }
  }
}

void idct8x8(const double* in, double* out) {
  const auto& m = dct_matrix();
  std::array<double, 64> tmp{};
  for (int v = 0; v < 8; ++v) {
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int u = 0; u < 8; ++u) acc += in[v * 8 + u] * m[u * 8 + x];
      tmp[v * 8 + x] = acc;
    }
  }
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int v = 0; v < 8; ++v) acc += m[v * 8 + y] * tmp[v * 8 + x];
      out[y * 8 + x] = acc;
    }
  }
}

std::vector<int> quantization_table(int quality) {
  static constexpr std::array<int, 64> kLuminance = {
      16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
      14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
      18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
      49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
  require(quality >= 1 && quality <= 100, "jpeg quality " + std::to_string(quality));
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::vector<int> out(64);
  for (int i = 0; i < 64; ++i) out[i] = std::clamp((kLuminance[i] * scale + 50) / 100, 1, 255);
  return out;
}

void validate(const DegradationStep& step) {
  std::visit(Overloaded{
                 [](const GaussianBlur& s) { require(s.sigma >= 0.0 && s.sigma <= 5.0, "blur sigma " + fmt(s.sigma)); },
                 [](const GaussianNoise& s) {
                   require(s.sigma_255 >= 0.0 && s.sigma_255 <= 255.0, "noise sigma255 " + fmt(s.sigma_255));
                 },
                 [](const BlockCompress& s) {
                   require(s.quality >= 1 && s.quality <= 100, "jpeg quality " + std::to_string(s.quality));
                 },
                 [](const Haze& s) {
                   require(s.beta >= 0.0 && std::isfinite(s.beta), "haze beta " + fmt(s.beta));
                   require(s.airlight >= 0.0 && s.airlight <= 1.0, "haze airlight " + fmt(s.airlight));
                 },
                 [](const RainStreaks& s) {
                   require(s.count >= 0, "rain count");
                   require(s.length_px > 0.0 && s.length_px <= 4096.0, "rain length " + fmt(s.length_px));
                   require(std::abs(s.angle_deg) <= 90.0, "rain angle " + fmt(s.angle_deg));
                   require(s.intensity >= 0.0 && s.intensity <= 1.0, "rain intensity " + fmt(s.intensity));
                 },
                 [](const Raindrop& s) {
                   require(s.count >= 0, "raindrop count");
                   require(s.radius_px > 0.0 && s.radius_px <= 4096.0, "raindrop radius " + fmt(s.radius_px));
                   require(s.alpha >= 0.0 && s.alpha <= 1.0, "raindrop alpha " + fmt(s.alpha));
                 },
                 [](const LowLight& s) {
                   require(s.gamma >= 1.0 && std::isfinite(s.gamma), "lowlight gamma " + fmt(s.gamma));
                   require(s.scale > 0.0 && s.scale <= 1.0, "lowlight scale " + fmt(s.scale));
                   require(s.noise_sigma_255 >= 0.0 && s.noise_sigma_255 <= 255.0,
                           "lowlight noise255 " + fmt(s.noise_sigma_255));
                 },
             },
             step);
}

void validate(const DegradationRecipe& recipe) {
  for (const auto& s : recipe.steps) validate(s);
}

std::string to_string(const DegradationRecipe& recipe) {
  std::string out;
  for (std::size_t i = 0; i < recipe.steps.size(); ++i) {
    if (i) out += '|';
    out += step_text(recipe.steps[i]);
  }
  out += '#';
  out += std::to_string(recipe.seed);
  return out;
}

DegradationRecipe parse_recipe(std::string_view text) {
  const std::size_t hash = text.rfind('#');
  if (hash == std::string_view::npos) throw RecipeError("recipe: missing '#seed'");
  DegradationRecipe recipe;
  const std::string_view seed_text = text.substr(hash + 1);
  auto res = std::from_chars(seed_text.data(), seed_text.data() + seed_text.size(), recipe.seed);
  if (res.ec != std::errc() || res.ptr != seed_text.data() + seed_text.size() || seed_text.empty()) {
    throw RecipeError("recipe: bad seed '" + std::string(seed_text) + "'");
  }
  const std::string_view body = text.substr(0, hash);
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t bar = body.find('|', pos);
    if (bar == std::string_view::npos) bar = body.size();
    recipe.steps.push_back(parse_step(body.substr(pos, bar - pos)));
    pos = bar + 1;
    if (bar + 1 == body.size()) throw RecipeError("recipe: trailing '|'");
  }
  return recipe;
}

Image apply_step(const Image& img, const DegradationStep& step, Rng& rng) {
  validate(step);
  return std::visit(Overloaded{
                        [&](const GaussianBlur& s) { return blur(img, s.sigma); },
                        [&](const GaussianNoise& s) { return add_noise(img, s.sigma_255, rng); },
                        [&](const BlockCompress& s) { return block_compress(img, s.quality); },
                        [&](const Haze& s) { return haze(img, s); },
                        [&](const RainStreaks& s) { return rain(img, s, rng); },
                        [&](const Raindrop& s) { return raindrops(img, s, rng); },
                        [&](const LowLight& s) { return lowlight(img, s, rng); },
                    },
                    step);
}

Image apply_steps(const Image& img, std::span<const DegradationStep> steps, Rng& rng) {
  Image out = img;
  for (const auto& s : steps) out = apply_step(out, s, rng);
  out.clamp();
  return out;
}

Image apply_recipe(const Image& hq, const DegradationRecipe& recipe) {
  validate(recipe);
  Rng rng(recipe.seed);
  return apply_steps(hq, recipe.steps, rng);
}

DegradationRecipe compose(std::span<const DegradationRecipe> recipes) {
  if (recipes.empty()) throw RecipeError("compose: empty recipe list");
  DegradationRecipe out;
  out.seed = recipes.front().seed;
  for (const auto& r : recipes) out.steps.insert(out.steps.end(), r.steps.begin(), r.steps.end());
  return out;
}

const std::vector<std::string>& all_categories() {
  static const std::vector<std::string> kCategories = {
      "Blur", "Noise", "JPEG", "Haze", "Rain", "Raindrop", "Lowlight", "B+N", "B+J", "N+J",
      "R+H",  "L+H",   "L+R",  "L+B",  "L+N",  "L+J",      "L+B+N",    "L+B+J", "L+N+J", "B+N+J"};
  return kCategories;
}

bool is_category(std::string_view name) {
  const auto& all = all_categories();
  return std::find(all.begin(), all.end(), name) != all.end();
}

bool is_isolated_category(std::string_view name) {
  const auto& all = all_categories();
  const auto it = std::find(all.begin(), all.end(), name);
  return it != all.end() && it - all.begin() < 7;
}

DegradationRecipe sample_recipe(std::string_view category, Rng& rng) {
  if (!is_category(category)) throw RecipeError("unknown category '" + std::string(category) + "'");
  std::vector<char> letters;
  if (category == "Blur") {
    letters = {'B'};
  } else if (category == "Noise") {
    letters = {'N'};
  } else if (category == "JPEG") {
    letters = {'J'};
  } else if (category == "Haze") {
    letters = {'H'};
  } else if (category == "Rain") {
    letters = {'R'};
  } else if (category == "Raindrop") {
    letters = {'D'};
  } else if (category == "Lowlight") {
    letters = {'L'};
  } else {
    for (char ch : category) {
      if (ch != '+') letters.push_back(ch);
    }
  }
  DegradationRecipe recipe;
  for (char letter : letters) {
    switch (letter) {
      case 'B':
        recipe.steps.push_back(GaussianBlur{rng.uniform(1.0, 3.0)});
        break;
      case 'N':
        recipe.steps.push_back(GaussianNoise{rng.uniform(5.0, 50.0)});
        break;
      case 'J':
        recipe.steps.push_back(BlockCompress{10 + static_cast<int>(rng.uniform_int(41))});
        break;
      case 'H': {
        Haze h;
        h.beta = rng.uniform(0.5, 2.0);
        h.airlight = rng.uniform(0.7, 1.0);
        h.depth = rng.bernoulli(0.5) ? DepthMode::kVerticalGradient : DepthMode::kConstant;
        recipe.steps.push_back(h);
        break;
      }
      case 'R': {
        RainStreaks r;
        r.count = 8 + static_cast<int>(rng.uniform_int(13));
        r.length_px = rng.uniform(4.0, 12.0);
        r.angle_deg = rng.uniform(-25.0, 25.0);
        r.intensity = rng.uniform(0.3, 0.7);
        recipe.steps.push_back(r);
        break;
      }
      case 'D': {
        Raindrop d;
        d.count = 2 + static_cast<int>(rng.uniform_int(4));
        d.radius_px = rng.uniform(3.0, 7.0);
        d.alpha = rng.uniform(0.3, 0.6);
        recipe.steps.push_back(d);
        break;
      }
      case 'L': {
        LowLight l;
        l.gamma = rng.uniform(2.0, 3.0);
        l.scale = rng.uniform(0.2, 0.5);
        l.noise_sigma_255 = rng.uniform(2.0, 10.0);
        recipe.steps.push_back(l);
        break;
      }
      default:
        throw RecipeError("unknown degradation letter in category " + std::string(category));
    }
  }
  recipe.seed = rng.next_u64();
  return recipe;
}

}  // namespace trajrest
