#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "covnmt/grad_check.hpp"

namespace covnmt {

struct AdaDeltaConfig {
  double rho = 0.95;
  double epsilon = 1e-6;
};

// One AdaDelta update of a single entry:
//   E[g^2] <- rho E[g^2] + (1 - rho) g^2
//   dx = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
//   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
//   x <- x + dx
template <typename T>
void adadelta_update(T& x, T& mean_sq_grad, T& mean_sq_delta, T g, T rho, T eps) {
  mean_sq_grad = rho * mean_sq_grad + (T(1) - rho) * g * g;
  const T delta = -std::sqrt(mean_sq_delta + eps) / std::sqrt(mean_sq_grad + eps) * g;
  mean_sq_delta = rho * mean_sq_delta + (T(1) - rho) * delta * delta;
  x += delta;
}

template <typename T>
class AdaDelta {
 public:
  struct Slot {
    std::string name;
    std::vector<T> mean_sq_grad;
    std::vector<T> mean_sq_delta;
  };

  explicit AdaDelta(AdaDeltaConfig config = {}) : config_(config) {}

  // Applies the accumulated gradients of params. A non-finite gradient
  // anywhere skips the whole update and returns false.
  bool step(std::span<const NamedParam<T>> params) {
    for (const auto& p : params) {
      if (!p.tensor.has_grad()) continue;
      for (T g : p.tensor.grad())
        if (!std::isfinite(static_cast<double>(g))) return false;
    }
    if (slots_.empty()) {
      for (const auto& p : params)
        slots_.push_back({p.name, std::vector<T>(p.tensor.size(), T(0)), std::vector<T>(p.tensor.size(), T(0))});
    }
    if (slots_.size() != params.size()) throw DimensionError("AdaDelta: parameter set changed between steps");
    const T rho = static_cast<T>(config_.rho), eps = static_cast<T>(config_.epsilon);
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor<T> tensor = params[k].tensor;
      auto& slot = slots_[k];
      if (slot.name != params[k].name || slot.mean_sq_grad.size() != tensor.size())
        throw DimensionError("AdaDelta: parameter '" + params[k].name + "' does not match its accumulators");
      auto x = tensor.values();
      auto g = tensor.grad();
      for (std::size_t i = 0; i < x.size(); ++i)
        adadelta_update(x[i], slot.mean_sq_grad[i], slot.mean_sq_delta[i], g[i], rho, eps);
    }
    return true;
  }

  const std::vector<Slot>& slots() const { return slots_; }
  const AdaDeltaConfig& config() const { return config_; }

 private:
  AdaDeltaConfig config_;
  std::vector<Slot> slots_;
};

}  // namespace covnmt
