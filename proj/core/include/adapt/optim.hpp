// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace adapt {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// First and second moments per parameter tensor, plus the step counter.
struct AdamWState {
  std::uint64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;

  static AdamWState zeros_like(std::span<const std::size_t> sizes);
};

/// One decoupled-decay AdamW step over every tensor:
///   p <- p (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps)
/// params[i] and grads[i] must have equal sizes, matching state.m[i].
void adamw_step(std::span<const std::span<float>> params,
                std::span<const std::span<const float>> grads, AdamWState& state, double lr,
                const AdamWOptions& options = {});

/// base_lr (1 + cos(pi step / total)) / 2; step is clamped to [0, total].
double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double base_lr);

}  // namespace adapt
