#pragma once
// AdamW with decoupled weight decay, constant-with-warmup learning rate and
// global-norm gradient clipping.

#include <cstdint>
#include <span>
#include <vector>

#include "trajrest/tensor.hpp"

namespace trajrest {

struct OptimizerConfig {
  double base_lr = 2e-5;
  double weight_decay = 3e-2;
  double epsilon = 1e-10;
  std::int64_t warmup_steps = 100;
  double max_grad_norm = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
};

// base_lr * min(1, step / warmup_steps); base_lr when warmup_steps is 0.
double lr_at_step(const OptimizerConfig& config, std::int64_t step);

// Scales all gradients by max_norm / g when the global L2 norm g exceeds
// max_norm. Returns the applied factor (1.0 when nothing was clipped).
// Parameters without a gradient count as zero.
template <typename T>
double clip_grad_norm(std::span<Tensor<T>> params, double max_norm);

template <typename T>
double global_grad_norm(std::span<const Tensor<T>> params);

template <typename T>
class AdamW {
 public:
  AdamW(OptimizerConfig config, std::vector<Tensor<T>> params);

  // One update with the given learning rate; increments step_count().
  // Every parameter must carry a gradient.
  void step(double lr);

  // Update number k (counting from 1) uses lr_at_step(config, k), so the
  // first update is already non-zero.
  double step_scheduled();

  std::int64_t step_count() const { return step_count_; }
  const OptimizerConfig& config() const { return config_; }
  const std::vector<Tensor<T>>& params() const { return params_; }
  const std::vector<std::vector<T>>& first_moments() const { return m_; }
  const std::vector<std::vector<T>>& second_moments() const { return v_; }

  // Restores state saved from a checkpoint. Shapes must match the parameters.
  void load_state(std::int64_t step_count, std::vector<std::vector<T>> m, std::vector<std::vector<T>> v);

 private:
  OptimizerConfig config_;
  std::vector<Tensor<T>> params_;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
  std::int64_t step_count_ = 0;
};

extern template class AdamW<float>;
extern template class AdamW<double>;

}  // namespace trajrest
