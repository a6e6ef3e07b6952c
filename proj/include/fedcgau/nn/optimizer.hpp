#pragma once

#include <optional>

#include "fedcgau/nn/model.hpp"

namespace fedcgau::nn {

// Heavy-ball momentum buffer. The caller decides when to reset it.
class MomentumState {
 public:
  explicit MomentumState(double coefficient) : coefficient_(coefficient) {}

  double coefficient() const noexcept { return coefficient_; }
  bool initialized() const noexcept { return velocity_.has_value(); }
  const ModelParams* velocity() const noexcept { return velocity_ ? &*velocity_ : nullptr; }
  void reset() noexcept { velocity_.reset(); }

 private:
  friend void sgd_step(ModelParams&, const ModelParams&, double, MomentumState*);
  double coefficient_;
  std::optional<ModelParams> velocity_;
};

// Plain SGD: p <- p - lr * g. With momentum: v <- mu * v + g, p <- p - lr * v.
void sgd_step(ModelParams& params, const ModelParams& grads, double learning_rate,
              MomentumState* momentum = nullptr);

}  // namespace fedcgau::nn
