#pragma once
// Small conditional transformer over image patches.
//
// Regress mode: the anchor is cut into patches, run through the encoder, and
// read out once per frame as a residual on the anchor patches. Frame f is
// anchor + head(y + pos_temporal[f]) + alpha_f * head_delta(y), where y is
// the normalized encoder output and alpha_f the frame's place on the clip
// schedule.
// Flow mode: every frame of the noisy clip is paired with the anchor
// (channel concatenation) and all frames' tokens attend jointly; a sinusoidal
// embedding of tau conditions the stack, and the output is a velocity clip.
//
// Positional embeddings live on the grid of `image_size`. Other resolutions
// read them through a fixed bilinear resampling matrix.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "trajrest/image.hpp"
#include "trajrest/rng.hpp"
#include "trajrest/sequence.hpp"
#include "trajrest/tensor.hpp"

namespace trajrest {

enum class ModelMode { kRegress, kFlow };

std::string to_string(ModelMode mode);
ModelMode parse_model_mode(const std::string& text);

struct ModelConfig {
  int patch_size = 4;
  int embed_dim = 64;
  int layers = 4;
  int heads = 4;
  int frame_count = 9;
  int image_size = 32;
  int channels = 3;
  ModelMode mode = ModelMode::kRegress;
  double condition_dropout_prob = 0.1;

  // Throws std::invalid_argument.
  void validate() const;
  int grid() const { return image_size / patch_size; }
  int patch_dim() const { return patch_size * patch_size * channels; }
  bool operator==(const ModelConfig&) const = default;
};

// Closed-form parameter count for a configuration.
std::size_t parameter_count(const ModelConfig& config);

template <typename T>
struct ModelParams {
  ModelConfig config;
  std::vector<std::string> names;
  std::vector<Tensor<T>> tensors;

  const Tensor<T>& get(const std::string& name) const;
  std::size_t count() const;
  // Same values, separate gradient buffers.
  ModelParams aliased() const;
  ModelParams clone() const;
};

// Projections ~ N(0, 0.02^2), biases 0, norm gains 1, output head 0.
template <typename T>
ModelParams<T> init_model(const ModelConfig& config, std::uint64_t seed);

// [H, W, C] tensor with no gradient.
template <typename T>
Tensor<T> image_to_tensor(const Image& img);
// [F, H, W, C]
template <typename T>
Tensor<T> clip_to_tensor(const PseudoClip& clip);
// Frame `index` of a [F, H, W, C] tensor, or the whole of a [H, W, C] one.
// Values are clamped to [0, 1].
template <typename T>
Image tensor_to_image(const Tensor<T>& t, std::size_t index = 0);

// anchor [H, W, C] -> frames [F, H, W, C].
template <typename T>
Tensor<T> forward_regress(const ModelParams<T>& params, const Tensor<T>& anchor);

// anchor [H, W, C], noisy [F, H, W, C], tau in [0, 1] -> velocity [F, H, W, C].
template <typename T>
Tensor<T> forward_flow(const ModelParams<T>& params, const Tensor<T>& anchor, const Tensor<T>& noisy, double tau);

template <typename T>
struct LossResult {
  Tensor<T> loss;
  bool anchor_dropped = false;
  double tau = 0.0;
};

// Regress: mse(forward, clip) over all frames, frame 0 included.
// Flow: draws condition dropout, tau ~ U(0, 1) and eps ~ N(0, 1) from rng,
// then mse(forward(x_tau), clip - eps) with x_tau = (1 - tau) eps + tau clip.
template <typename T>
LossResult<T> training_loss(const ModelParams<T>& params, const PseudoClip& clip, Rng& rng);

extern template struct ModelParams<float>;
extern template struct ModelParams<double>;

}  // namespace trajrest
