#pragma once
// Trajectory generation at inference time.

#include <functional>
#include <vector>

#include "trajrest/image.hpp"
#include "trajrest/model.hpp"
#include "trajrest/rng.hpp"
#include "trajrest/sequence.hpp"

namespace trajrest {

struct SamplerConfig {
  int steps = 50;
  double guidance_scale = 5.0;
  double shift = 5.0;

  void validate() const;
};

// t' = s t / (1 + (s - 1) t). Fixes 0 and 1 and preserves order.
std::vector<double> shift_timesteps(const std::vector<double>& ts, double shift);

// The tau grid walked by the integrator: tau_i = 1 - shift(1 - i / steps),
// so the shift concentrates steps at high noise. Runs 0 -> 1, length steps + 1.
std::vector<double> sampling_grid(int steps, double shift);

// (1 - g) u + g c, which equals u + g (c - u) and returns u or c exactly at
// g = 0 or g = 1.
template <typename T>
std::vector<T> cfg_combine(const std::vector<T>& uncond, const std::vector<T>& cond, double g);

template <typename T>
using VelocityFn = std::function<std::vector<T>(const std::vector<T>& x, double tau)>;

// Forward Euler along sampling_grid(steps, shift). Throws NumericError on a
// non-finite state.
template <typename T>
std::vector<T> integrate_flow(std::vector<T> x, int steps, double shift, const VelocityFn<T>& velocity);

// Regress mode: one forward pass. Flow mode: Gaussian start, guided Euler
// integration with a zeroed anchor as the unconditional branch. Frames are
// clamped to [0, 1] only at the end.
template <typename T>
PseudoClip sample_clip(const ModelParams<T>& params, const Image& anchor, const SamplerConfig& config, Rng& rng);

}  // namespace trajrest
