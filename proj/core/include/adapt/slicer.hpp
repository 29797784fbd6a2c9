// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "adapt/volumes.hpp"

namespace adapt {

/// Per-view slice budget (sagittal, coronal, axial) with its bounds.
struct SliceAllocation {
  std::array<std::uint32_t, 3> counts{};
  std::uint32_t total = 0;
  std::uint32_t min = 0;
  std::uint32_t max = 0;

  /// Throws ConfigError unless the bounds are feasible.
  static void check_bounds(std::uint32_t total, std::uint32_t min, std::uint32_t max);

  /// Even split of total; any remainder goes to the earliest views.
  static SliceAllocation uniform(std::uint32_t total, std::uint32_t min, std::uint32_t max);
  static SliceAllocation uniform(std::uint32_t total);

  /// min = ceil(total / 12), max = total - 2 * min.
  static std::pair<std::uint32_t, std::uint32_t> default_bounds(std::uint32_t total);

  std::uint32_t count(View view) const { return counts[static_cast<std::size_t>(view)]; }
  void validate() const;
  friend bool operator==(const SliceAllocation&, const SliceAllocation&) = default;
};

/// The informative window [lo, hi]: 52..172 at extent 224, scaled
/// proportionally (rounded) for other extents.
std::pair<std::size_t, std::size_t> important_window(std::size_t extent);

/// n sorted, distinct, equidistant indices spanning [lo, hi]. n == 1 yields
/// the rounded midpoint; rounding collisions move to the nearest unused index.
std::vector<std::size_t> important_indices(std::size_t extent, std::size_t n, std::size_t lo,
                                           std::size_t hi);

struct SliceInfo {
  View view;
  std::size_t source_index;
};

/// Slices grouped sagittal, then coronal, then axial.
struct SliceStack {
  std::vector<Image2D> slices;
  std::vector<SliceInfo> info;
  SliceAllocation allocation;

  std::size_t size() const { return slices.size(); }
  std::size_t extent() const { return slices.empty() ? 0 : slices.front().rows; }
  /// Position of the first slice of `view` within the stack.
  std::size_t group_begin(View view) const;
};

/// Requires a cubic volume; takes allocation.count(v) important slices per view.
SliceStack extract_slices(const Volume& volume, const SliceAllocation& allocation);

}  // namespace adapt
