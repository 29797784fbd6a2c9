// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "adapt/allocation.hpp"
#include "adapt/error.hpp"

using namespace adapt;

namespace {

SliceAllocation bounds(std::uint32_t total, std::uint32_t lo, std::uint32_t hi) {
  return SliceAllocation::uniform(total, lo, hi);
}

using Counts = std::array<std::uint32_t, 3>;

}  // namespace

TEST(UpdateAllocation, EqualScores) {
  EXPECT_EQ(proportional_allocation({1, 1, 1}, bounds(48, 4, 40)).counts, (Counts{16, 16, 16}));
}

TEST(UpdateAllocation, ProportionalArithmetic) {
  EXPECT_EQ(proportional_allocation({0.5, 0.25, 0.25}, bounds(48, 4, 40)).counts, (Counts{24, 12, 12}));
}

TEST(UpdateAllocation, ClampThenRoundRobinRepair) {
  EXPECT_EQ(proportional_allocation({0.9, 0.05, 0.05}, bounds(48, 8, 24)).counts, (Counts{24, 12, 12}));
}

TEST(UpdateAllocation, RemovalTakesFromLowestScore) {
  // 5 + 5 + clamp(1 -> 3) = 13; the tied leaders lose one, earliest view first.
  EXPECT_EQ(proportional_allocation({0.45, 0.45, 0.1}, bounds(12, 3, 6)).counts, (Counts{4, 5, 3}));
}

TEST(UpdateAllocation, ScaleInvariant) {
  const auto b = bounds(48, 4, 40);
  EXPECT_EQ(proportional_allocation({2, 1, 3}, b), proportional_allocation({20, 10, 30}, b));
}

TEST(UpdateAllocation, RejectsBadScores) {
  const auto b = bounds(12, 1, 10);
  EXPECT_THROW(proportional_allocation({0, 0, 0}, b), InputError);
  EXPECT_THROW(proportional_allocation({-1, 1, 1}, b), InputError);
  EXPECT_THROW(proportional_allocation({std::nan(""), 1, 1}, b), InputError);
}

TEST(UpdateAllocation, ResetBranchIsUniform) {
  Rng rng(1);
  auto current = bounds(48, 4, 40);
  current.counts = {30, 10, 8};
  EXPECT_EQ(update_allocation({5, 1, 1}, current, 0.0, rng).counts, (Counts{16, 16, 16}));
  EXPECT_EQ(update_allocation({5, 1, 1}, current, 1.0, rng).counts,
            proportional_allocation({5, 1, 1}, current).counts);
  EXPECT_THROW(update_allocation({1, 1, 1}, current, 1.5, rng), ConfigError);
}

TEST(UpdateAllocation, InvariantsOnRandomScores) {
  Rng rng(2);
  for (auto [total, lo, hi] : {std::array<std::uint32_t, 3>{48, 4, 40}, {12, 1, 10}, {48, 8, 24}, {13, 2, 9}}) {
    const auto b = bounds(total, lo, hi);
    for (int i = 0; i < 2000; ++i) {
      const std::array<double, 3> s{uniform01(rng), uniform01(rng), uniform01(rng)};
      const auto a = proportional_allocation(s, b);
      EXPECT_NO_THROW(a.validate());
      for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y)
          if (s[x] > s[y]) EXPECT_GE(a.counts[x], a.counts[y]);
    }
  }
}
