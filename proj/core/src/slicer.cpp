// SPDX-License-Identifier: Apache-2.0

#include "adapt/slicer.hpp"

#include <cmath>
#include <set>

#include "adapt/error.hpp"

namespace adapt {

void SliceAllocation::check_bounds(std::uint32_t total, std::uint32_t min, std::uint32_t max) {
  if (min > max || 3ull * min > total || total > 3ull * max) {
    throw ConfigError("infeasible slice bounds: total " + std::to_string(total) + ", min " +
                      std::to_string(min) + ", max " + std::to_string(max));
  }
}

SliceAllocation SliceAllocation::uniform(std::uint32_t total, std::uint32_t min, std::uint32_t max) {
  check_bounds(total, min, max);
  SliceAllocation a;
  a.total = total;
  a.min = min;
  a.max = max;
  for (std::size_t v = 0; v < 3; ++v) a.counts[v] = total / 3 + (v < total % 3 ? 1 : 0);
  a.validate();
  return a;
}

SliceAllocation SliceAllocation::uniform(std::uint32_t total) {
  const auto [min, max] = default_bounds(total);
  return uniform(total, min, max);
}

std::pair<std::uint32_t, std::uint32_t> SliceAllocation::default_bounds(std::uint32_t total) {
  const std::uint32_t min = (total + 11) / 12;
  return {min, total - 2 * min};
}

void SliceAllocation::validate() const {
  check_bounds(total, min, max);
  std::uint64_t sum = 0;
  for (auto c : counts) {
    if (c < min || c > max) {
      throw ConfigError("slice count " + std::to_string(c) + " outside [" + std::to_string(min) +
                        "," + std::to_string(max) + "]");
    }
    sum += c;
  }
  if (sum != total) {
    throw ConfigError("slice counts sum to " + std::to_string(sum) + ", expected " +
                      std::to_string(total));
  }
}

std::pair<std::size_t, std::size_t> important_window(std::size_t extent) {
  if (extent == 0) throw InputError("empty extent");
  const auto scale = [extent](double index) {
    return static_cast<std::size_t>(std::lround(index / 224.0 * static_cast<double>(extent)));
  };
  const std::size_t lo = scale(52.0);
  const std::size_t hi = std::min(scale(172.0), extent - 1);
  return {lo, std::max(lo, hi)};
}

std::vector<std::size_t> important_indices(std::size_t extent, std::size_t n, std::size_t lo,
                                           std::size_t hi) {
  if (lo > hi || hi >= extent) {
    throw InputError("invalid slice window [" + std::to_string(lo) + "," + std::to_string(hi) +
                     "] for extent " + std::to_string(extent));
  }
  if (n == 0 || n > hi - lo + 1) {
    throw InputError("cannot pick " + std::to_string(n) + " distinct slices from [" +
                     std::to_string(lo) + "," + std::to_string(hi) + "]");
  }
  if (n == 1) return {static_cast<std::size_t>(std::lround((lo + hi) / 2.0))};

  std::set<std::size_t> used;
  std::vector<std::size_t> picks;
  const double step = static_cast<double>(hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ideal = static_cast<std::ptrdiff_t>(std::lround(static_cast<double>(lo) + i * step));
    // Nearest unused index in [lo, hi]; ties go to the lower index.
    for (std::ptrdiff_t d = 0;; ++d) {
      const std::ptrdiff_t below = ideal - d, above = ideal + d;
      if (below >= static_cast<std::ptrdiff_t>(lo) && !used.count(static_cast<std::size_t>(below))) {
        used.insert(static_cast<std::size_t>(below));
        break;
      }
      if (above <= static_cast<std::ptrdiff_t>(hi) && !used.count(static_cast<std::size_t>(above))) {
        used.insert(static_cast<std::size_t>(above));
        break;
      }
    }
  }
  return {used.begin(), used.end()};
}

std::size_t SliceStack::group_begin(View view) const {
  std::size_t begin = 0;
  for (std::size_t v = 0; v < static_cast<std::size_t>(view); ++v) begin += allocation.counts[v];
  return begin;
}

SliceStack extract_slices(const Volume& volume, const SliceAllocation& allocation) {
  allocation.validate();
  const auto& e = volume.extents();
  if (!e.cubic()) {
    throw DimensionError("slicing needs a cubic volume, got " + std::to_string(e.x) + "x" +
                         std::to_string(e.y) + "x" + std::to_string(e.z));
  }
  const auto [lo, hi] = important_window(e.x);
  SliceStack stack;
  stack.allocation = allocation;
  for (View view : kViews) {
    for (auto idx : important_indices(e.x, allocation.count(view), lo, hi)) {
      stack.slices.push_back(extract_plane(volume, view, idx));
      stack.info.push_back({view, idx});
    }
  }
  return stack;
}

}  // namespace adapt
