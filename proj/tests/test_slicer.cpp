// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "adapt/error.hpp"
#include "adapt/slicer.hpp"

using namespace adapt;

TEST(Allocation, UniformAndDefaults) {
  const auto a = SliceAllocation::uniform(48);
  EXPECT_EQ(a.counts, (std::array<std::uint32_t, 3>{16, 16, 16}));
  EXPECT_EQ(SliceAllocation::default_bounds(48), std::make_pair(4u, 40u));
  EXPECT_EQ(SliceAllocation::default_bounds(12), std::make_pair(1u, 10u));
  EXPECT_EQ(SliceAllocation::uniform(13, 1, 11).counts, (std::array<std::uint32_t, 3>{5, 4, 4}));
  EXPECT_THROW(SliceAllocation::check_bounds(12, 5, 10), ConfigError);
  EXPECT_THROW(SliceAllocation::check_bounds(40, 1, 10), ConfigError);
}

TEST(Allocation, ValidateCatchesBadCounts) {
  auto a = SliceAllocation::uniform(12, 1, 10);
  a.counts = {11, 1, 0};
  EXPECT_THROW(a.validate(), ConfigError);
  a.counts = {5, 5, 5};
  EXPECT_THROW(a.validate(), ConfigError);
}

TEST(ImportantSampling, WindowAt224) {
  EXPECT_EQ(important_window(224), std::make_pair(std::size_t{52}, std::size_t{172}));
  EXPECT_EQ(important_window(64), std::make_pair(std::size_t{15}, std::size_t{49}));
  const auto idx = important_indices(224, 16, 52, 172);
  ASSERT_EQ(idx.size(), 16u);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(idx[i], 52 + 8 * i);
}

TEST(ImportantSampling, EndpointsAndMidpoint) {
  EXPECT_EQ(important_indices(224, 2, 52, 172), (std::vector<std::size_t>{52, 172}));
  EXPECT_EQ(important_indices(224, 1, 52, 172), (std::vector<std::size_t>{112}));
  EXPECT_EQ(important_indices(64, 1, 15, 50), (std::vector<std::size_t>{33}));
}

TEST(ImportantSampling, DenseRequestIsDistinctAndSorted) {
  const auto idx = important_indices(64, 35, 15, 49);
  ASSERT_EQ(idx.size(), 35u);
  for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(idx[i], 15 + i);
  EXPECT_THROW(important_indices(64, 36, 15, 49), InputError);
  EXPECT_THROW(important_indices(64, 2, 50, 49), InputError);
}

TEST(ExtractSlices, AllocationsAt224) {
  const Volume v = Volume::filled({224, 224, 224}, 0.5f);
  const auto stack = extract_slices(v, SliceAllocation::uniform(48));
  ASSERT_EQ(stack.size(), 48u);
  for (const auto& s : stack.slices) {
    EXPECT_EQ(s.rows, 224u);
    EXPECT_EQ(s.cols, 224u);
    for (float p : s.pixels) ASSERT_EQ(p, 0.5f);
  }
  auto a = SliceAllocation::uniform(48);
  a.counts = {10, 19, 19};
  const auto uneven = extract_slices(v, a);
  std::array<std::size_t, 3> groups{};
  for (const auto& info : uneven.info) ++groups[static_cast<std::size_t>(info.view)];
  EXPECT_EQ(groups, (std::array<std::size_t, 3>{10, 19, 19}));
  EXPECT_EQ(uneven.group_begin(View::Coronal), 10u);
  EXPECT_EQ(uneven.group_begin(View::Axial), 29u);
}

TEST(ExtractSlices, ProvenanceAndNonCubicRejection) {
  Volume v = Volume::filled({16, 16, 16}, 0.0f);
  for (std::size_t z = 0; z < 16; ++z)
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t x = 0; x < 16; ++x) v.at(x, y, z) = static_cast<float>(x + 100 * y + 10000 * z);
  const auto stack = extract_slices(v, SliceAllocation::uniform(6, 1, 4));
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const auto& info = stack.info[i];
    const auto expected = extract_plane(v, info.view, info.source_index);
    EXPECT_EQ(stack.slices[i], expected);
  }
  EXPECT_THROW(extract_slices(Volume::filled({16, 16, 8}, 0.0f), SliceAllocation::uniform(6, 1, 4)),
               DimensionError);
}
