#include "fedcgau/nn/optimizer.hpp"

#include "fedcgau/simd/kernels.hpp"

namespace fedcgau::nn {

void sgd_step(ModelParams& params, const ModelParams& grads, double learning_rate, MomentumState* momentum) {
  require_same_structure(params, grads);
  auto p_blocks = param_blocks(params);
  const auto g_blocks = param_blocks(grads);

  if (momentum == nullptr) {
    for (std::size_t b = 0; b < p_blocks.size(); ++b) {
      simd::axpy(-learning_rate, g_blocks[b].values.data(), p_blocks[b].values.data(), p_blocks[b].values.size());
    }
    return;
  }

  if (!momentum->velocity_) momentum->velocity_ = zeros_like(params);
  require_same_structure(params, *momentum->velocity_);
  auto v_blocks = param_blocks(*momentum->velocity_);
  const double mu = momentum->coefficient_;
  for (std::size_t b = 0; b < p_blocks.size(); ++b) {
    auto v = v_blocks[b].values;
    const auto g = g_blocks[b].values;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = mu * v[i] + g[i];
    simd::axpy(-learning_rate, v.data(), p_blocks[b].values.data(), v.size());
  }
}

}  // namespace fedcgau::nn
