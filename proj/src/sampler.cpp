#include "trajrest/sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace trajrest {

void SamplerConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("sampler: steps must be >= 1");
  if (!(guidance_scale >= 0.0) || !std::isfinite(guidance_scale)) {
    throw std::invalid_argument("sampler: guidance_scale must be >= 0");
  }
  if (!(shift > 0.0) || !std::isfinite(shift)) throw std::invalid_argument("sampler: shift must be > 0");
}

std::vector<double> shift_timesteps(const std::vector<double>& ts, double shift) {
  if (!(shift > 0.0)) throw std::invalid_argument("shift_timesteps: shift must be > 0");
  std::vector<double> out(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double t = ts[i];
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("shift_timesteps: t outside [0, 1]");
    // s t / (1 + (s - 1) t) rearranged so that t = 1 maps to exactly 1 and
    // rounding stays monotone in t.
    if (shift == 1.0 || t == 0.0) {
      out[i] = t;
    } else {
      out[i] = 1.0 / (1.0 + (1.0 - t) / (shift * t));
    }
  }
  return out;
}

std::vector<double> sampling_grid(int steps, double shift) {
  if (steps < 1) throw std::invalid_argument("sampling_grid: steps must be >= 1");
  std::vector<double> noise(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) noise[i] = 1.0 - static_cast<double>(i) / steps;
  noise.back() = 0.0;
  std::vector<double> tau = shift_timesteps(noise, shift);
  for (double& t : tau) t = 1.0 - t;
  return tau;
}

template <typename T>
std::vector<T> cfg_combine(const std::vector<T>& uncond, const std::vector<T>& cond, double g) {
  if (uncond.size() != cond.size()) throw ShapeError("cfg_combine: operand sizes differ");
  const T gu = static_cast<T>(1.0 - g);
  const T gc = static_cast<T>(g);
  std::vector<T> out(cond.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gu * uncond[i] + gc * cond[i];
  return out;
}

template <typename T>
std::vector<T> integrate_flow(std::vector<T> x, int steps, double shift, const VelocityFn<T>& velocity) {
  const auto grid = sampling_grid(steps, shift);
  for (int i = 0; i < steps; ++i) {
    const std::vector<T> v = velocity(x, grid[i]);
    if (v.size() != x.size()) throw ShapeError("integrate_flow: velocity size mismatch");
    const T dt = static_cast<T>(grid[i + 1] - grid[i]);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += dt * v[j];
    check_finite<T>(x, ("flow integration step " + std::to_string(i)).c_str());
  }
  return x;
}

template <typename T>
PseudoClip sample_clip(const ModelParams<T>& params, const Image& anchor, const SamplerConfig& config, Rng& rng) {
  config.validate();
  const ModelConfig& mc = params.config;
  if (anchor.channels != mc.channels) throw ShapeError("sample_clip: anchor channel count does not match model");
  const Tensor<T> a = image_to_tensor<T>(anchor);
  Tensor<T> out;
  if (mc.mode == ModelMode::kRegress) {
    out = forward_regress(params, a);
  } else {
    const Shape shape{static_cast<std::size_t>(mc.frame_count), static_cast<std::size_t>(anchor.height),
                      static_cast<std::size_t>(anchor.width), static_cast<std::size_t>(anchor.channels)};
    std::vector<T> x(shape_numel(shape));
    for (T& v : x) v = static_cast<T>(rng.normal());
    const Tensor<T> zero = Tensor<T>::zeros(a.shape());
    const double g = config.guidance_scale;
    const VelocityFn<T> field = [&](const std::vector<T>& state, double tau) {
      const auto xt = Tensor<T>::from_values(shape, state);
      const Tensor<T> cond = forward_flow(params, a, xt, tau);
      std::vector<T> c(cond.values().begin(), cond.values().end());
      if (g == 1.0) return c;
      const Tensor<T> unc = forward_flow(params, zero, xt, tau);
      return cfg_combine(std::vector<T>(unc.values().begin(), unc.values().end()), c, g);
    };
    out = Tensor<T>::from_values(shape, integrate_flow(std::move(x), config.steps, config.shift, field));
  }
  PseudoClip clip;
  clip.alphas = alpha_schedule(mc.frame_count - 1);
  for (std::size_t f = 0; f < static_cast<std::size_t>(mc.frame_count); ++f) clip.frames.push_back(tensor_to_image(out, f));
  return clip;
}

#define TRAJREST_INSTANTIATE_SAMPLER(T)                                                                        \
  template std::vector<T> cfg_combine<T>(const std::vector<T>&, const std::vector<T>&, double);                \
  template std::vector<T> integrate_flow<T>(std::vector<T>, int, double, const VelocityFn<T>&);                \
  template PseudoClip sample_clip<T>(const ModelParams<T>&, const Image&, const SamplerConfig&, Rng&);

TRAJREST_INSTANTIATE_SAMPLER(float)
TRAJREST_INSTANTIATE_SAMPLER(double)

}  // namespace trajrest
