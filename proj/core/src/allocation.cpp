// SPDX-License-Identifier: Apache-2.0

#include "adapt/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adapt/error.hpp"

namespace adapt {

SliceAllocation proportional_allocation(const std::array<double, 3>& scores,
                                        const SliceAllocation& bounds) {
  SliceAllocation::check_bounds(bounds.total, bounds.min, bounds.max);
  double sum = 0.0;
  for (double s : scores) {
    if (!std::isfinite(s) || s < 0.0) {
      throw InputError("allocation scores must be finite and nonnegative, got " + std::to_string(s));
    }
    sum += s;
  }
  if (sum <= 0.0) throw InputError("allocation scores are all zero");

  SliceAllocation out = bounds;
  std::array<long, 3> n{};
  for (std::size_t v = 0; v < 3; ++v) {
    const long r = std::lround(scores[v] / sum * bounds.total);
    n[v] = std::clamp<long>(r, bounds.min, bounds.max);
  }
  long residual = static_cast<long>(bounds.total) - (n[0] + n[1] + n[2]);
  while (residual != 0) {
    int pick = -1;
    for (int v = 0; v < 3; ++v) {
      if (residual > 0 && n[v] >= static_cast<long>(bounds.max)) continue;
      if (residual < 0 && n[v] <= static_cast<long>(bounds.min)) continue;
      if (pick < 0) {
        pick = v;
        continue;
      }
      const double sv = scores[v], sp = scores[pick];
      const bool better = residual > 0 ? (sv > sp || (sv == sp && n[v] < n[pick]))
                                       : (sv < sp || (sv == sp && n[v] > n[pick]));
      if (better) pick = v;
    }
    // check_bounds guarantees a feasible dimension exists.
    const long step = residual > 0 ? 1 : -1;
    n[pick] += step;
    residual -= step;
  }
  for (std::size_t v = 0; v < 3; ++v) out.counts[v] = static_cast<std::uint32_t>(n[v]);
  return out;
}

SliceAllocation update_allocation(const std::array<double, 3>& scores,
                                  const SliceAllocation& current, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("reallocation probability must lie in [0, 1]");
  SliceAllocation::check_bounds(current.total, current.min, current.max);
  if (bernoulli(rng, p)) return proportional_allocation(scores, current);
  return SliceAllocation::uniform(current.total, current.min, current.max);
}

}  // namespace adapt
