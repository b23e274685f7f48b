#include "trajrest/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace trajrest {

double lr_at_step(const OptimizerConfig& config, std::int64_t step) {
  if (step < 0) throw std::invalid_argument("lr_at_step: negative step");
  if (config.warmup_steps <= 0 || step >= config.warmup_steps) return config.base_lr;
  return config.base_lr * static_cast<double>(step) / static_cast<double>(config.warmup_steps);
}

template <typename T>
double global_grad_norm(std::span<const Tensor<T>> params) {
  double total = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (T g : p.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient encountered while clipping");
      total += static_cast<double>(g) * static_cast<double>(g);
    }
  }
  return std::sqrt(total);
}

template <typename T>
double clip_grad_norm(std::span<Tensor<T>> params, double max_norm) {
  const double norm = global_grad_norm<T>(std::span<const Tensor<T>>(params.data(), params.size()));
  // The slack keeps clipping idempotent: a second pass sees a norm equal to
  // max_norm up to rounding and leaves it alone.
  if (!(norm > max_norm * (1.0 + 1e-6))) return 1.0;
  const double factor = max_norm / norm;
  for (auto& p : params) {
    if (!p.has_grad()) continue;
    for (T& g : p.mutable_grad()) g = static_cast<T>(static_cast<double>(g) * factor);
  }
  return factor;
}

template <typename T>
AdamW<T>::AdamW(OptimizerConfig config, std::vector<Tensor<T>> params)
    : config_(config), params_(std::move(params)) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), T(0));
    v_.emplace_back(p.numel(), T(0));
  }
}

template <typename T>
void AdamW<T>::step(double lr) {
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double t = static_cast<double>(step_count_ + 1);
  const double bias1 = 1.0 - std::pow(b1, t);
  const double bias2 = 1.0 - std::pow(b2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    if (!p.has_grad()) throw std::logic_error("AdamW::step: parameter " + std::to_string(k) + " has no gradient");
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    auto values = p.mutable_values();
    const auto grad = p.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      const double mi = b1 * static_cast<double>(m[i]) + (1.0 - b1) * g;
      const double vi = b2 * static_cast<double>(v[i]) + (1.0 - b2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double m_hat = mi / bias1;
      const double v_hat = vi / bias2;
      const double p_old = values[i];
      const double update = m_hat / (std::sqrt(v_hat) + config_.epsilon) + config_.weight_decay * p_old;
      const double p_new = p_old - lr * update;
      if (!std::isfinite(p_new)) throw NumericError("AdamW produced a non-finite parameter");
      values[i] = static_cast<T>(p_new);
    }
  }
  ++step_count_;
}

template <typename T>
double AdamW<T>::step_scheduled() {
  const double lr = lr_at_step(config_, step_count_ + 1);
  step(lr);
  return lr;
}

template <typename T>
void AdamW<T>::load_state(std::int64_t step_count, std::vector<std::vector<T>> m, std::vector<std::vector<T>> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw std::invalid_argument("AdamW::load_state: moment count does not match parameters");
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (m[k].size() != params_[k].numel() || v[k].size() != params_[k].numel()) {
      throw std::invalid_argument("AdamW::load_state: moment shape mismatch");
    }
  }
  step_count_ = step_count;
  m_ = std::move(m);
  v_ = std::move(v);
}

template class AdamW<float>;
template class AdamW<double>;
template double clip_grad_norm<float>(std::span<Tensor<float>>, double);
template double clip_grad_norm<double>(std::span<Tensor<double>>, double);
template double global_grad_norm<float>(std::span<const Tensor<float>>);
template double global_grad_norm<double>(std::span<const Tensor<double>>);

}  // namespace trajrest
