#pragma once
// Seeded synthetic degradations standing in for captured low-quality data.
//
// Recipe text form (one line):
//
//   recipe := [step ('|' step)*] '#' seed
//   step   := name '(' [key '=' value (',' key '=' value)*] ')'
//
// Steps and keys:
//   blur(sigma)                       Gaussian blur, sigma in [0, 5]
//   noise(sigma255)                   additive Gaussian noise, std in 8-bit units
//   jpeg(quality)                     8x8 DCT block quantization, quality in [1, 100]
//   haze(beta,airlight,depth)         x*t + A*(1-t), t = exp(-beta*d(row));
//                                     depth=constant (d=1) or depth=gradient
//                                     (d falls linearly from 1 at the top to 0)
//   rain(count,length,angle,intensity)   bright oriented 1-px streaks
//   raindrop(count,radius,alpha)      soft disk occlusions
//   lowlight(gamma,scale,noise255)    (x*scale)^gamma plus Gaussian noise
//
// Every key is required. Numbers use the shortest representation that parses back to the same
// double, so text round-trips exactly.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "trajrest/image.hpp"
#include "trajrest/rng.hpp"

namespace trajrest {

class RecipeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class DepthMode { kConstant = 0, kVerticalGradient = 1 };

struct GaussianBlur {
  double sigma = 0.0;
  bool operator==(const GaussianBlur&) const = default;
};
struct GaussianNoise {
  double sigma_255 = 0.0;
  bool operator==(const GaussianNoise&) const = default;
};
struct BlockCompress {
  int quality = 100;
  bool operator==(const BlockCompress&) const = default;
};
struct Haze {
  double beta = 0.0;
  double airlight = 1.0;
  DepthMode depth = DepthMode::kConstant;
  bool operator==(const Haze&) const = default;
};
struct RainStreaks {
  int count = 0;
  double length_px = 1.0;
  double angle_deg = 0.0;
  double intensity = 0.0;
  bool operator==(const RainStreaks&) const = default;
};
struct Raindrop {
  int count = 0;
  double radius_px = 1.0;
  double alpha = 0.0;
  bool operator==(const Raindrop&) const = default;
};
struct LowLight {
  double gamma = 1.0;
  double scale = 1.0;
  double noise_sigma_255 = 0.0;
  bool operator==(const LowLight&) const = default;
};

using DegradationStep = std::variant<GaussianBlur, GaussianNoise, BlockCompress, Haze, RainStreaks, Raindrop, LowLight>;

struct DegradationRecipe {
  std::vector<DegradationStep> steps;
  std::uint64_t seed = 0;
  bool operator==(const DegradationRecipe&) const = default;
};

// Throws RecipeError when a parameter is outside its documented range.
void validate(const DegradationStep& step);
void validate(const DegradationRecipe& recipe);

std::string to_string(const DegradationRecipe& recipe);
DegradationRecipe parse_recipe(std::string_view text);

// Applies steps in order, all drawing from one generator seeded with
// recipe.seed. Output is clamped to [0, 1].
Image apply_recipe(const Image& hq, const DegradationRecipe& recipe);

// The same, continuing an existing random stream. apply_recipe(x, r) equals
// apply_steps(x, r.steps, Rng(r.seed)).
Image apply_steps(const Image& img, std::span<const DegradationStep> steps, Rng& rng);
Image apply_step(const Image& img, const DegradationStep& step, Rng& rng);

// Concatenates step lists; the first recipe's seed is kept.
DegradationRecipe compose(std::span<const DegradationRecipe> recipes);

// The 7 isolated and 13 coupled categories, in report column order.
const std::vector<std::string>& all_categories();
bool is_category(std::string_view name);
bool is_isolated_category(std::string_view name);

// One step per degradation in the label, parameters drawn uniformly from the
// sampling ranges, seed drawn last.
DegradationRecipe sample_recipe(std::string_view category, Rng& rng);

// Standard JPEG luminance table scaled for `quality` (IJG convention).
std::vector<int> quantization_table(int quality);

// Orthonormal 8x8 DCT-II and its inverse, row-major blocks.
void dct8x8(const double* in, double* out);
void idct8x8(const double* in, double* out);

}  // namespace trajrest
