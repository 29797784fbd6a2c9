// SPDX-License-Identifier: Apache-2.0

#include "adapt/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "adapt/error.hpp"

namespace adapt {

AdamWState AdamWState::zeros_like(std::span<const std::size_t> sizes) {
  AdamWState s;
  for (auto n : sizes) {
    s.m.emplace_back(n, 0.0f);
    s.v.emplace_back(n, 0.0f);
  }
  return s;
}

void adamw_step(std::span<const std::span<float>> params,
                std::span<const std::span<const float>> grads, AdamWState& state, double lr,
                const AdamWOptions& o) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw DimensionError("adamw: " + std::to_string(params.size()) + " parameters, " +
                         std::to_string(grads.size()) + " gradients, " +
                         std::to_string(state.m.size()) + " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size() || params[i].size() != state.m[i].size() ||
        params[i].size() != state.v[i].size()) {
      throw DimensionError("adamw: size mismatch at tensor " + std::to_string(i) + " (" +
                           std::to_string(params[i].size()) + " vs " +
                           std::to_string(grads[i].size()) + ")");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  const double shrink = 1.0 - lr * o.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    auto g = grads[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      const double mj = o.beta1 * m[j] + (1.0 - o.beta1) * gj;
      const double vj = o.beta2 * v[j] + (1.0 - o.beta2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double step = (mj / c1) / (std::sqrt(vj / c2) + o.eps);
      p[j] = static_cast<float>(p[j] * shrink - lr * step);
    }
  }
}

double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double base_lr) {
  if (total_steps == 0) return base_lr;
  const double frac = static_cast<double>(std::min(step, total_steps)) /
                      static_cast<double>(total_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace adapt
