// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "adapt/random.hpp"
#include "adapt/slicer.hpp"

namespace adapt {

/// Score-proportional split: n_v = round(s_v / sum(s) * total), clamped to
/// [min, max], then repaired one slice at a time until the counts sum to
/// total. Additions go to the highest-scoring dimension below max, removals
/// come from the lowest-scoring dimension above min; ties prefer the smaller
/// current count (larger when removing), then sagittal < coronal < axial.
SliceAllocation proportional_allocation(const std::array<double, 3>& scores,
                                        const SliceAllocation& bounds);

/// With probability p the proportional split, otherwise the uniform list.
/// Consumes exactly one uniform draw.
SliceAllocation update_allocation(const std::array<double, 3>& scores,
                                  const SliceAllocation& current, double p, Rng& rng);

}  // namespace adapt
