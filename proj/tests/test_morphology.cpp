// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "adapt/error.hpp"
#include "adapt/morphology.hpp"
#include "support/fixtures.hpp"
#include "support/morph_oracle.hpp"

using namespace adapt;
using namespace adapt::morphology;
using namespace adapt::testing;

TEST(StructuringElement, FlatSquare) {
  const auto se = StructuringElement::flat_square(1);
  EXPECT_EQ(se.offsets().size(), 9u);
  EXPECT_TRUE(se.flat());
  EXPECT_TRUE(se.contains_origin());
  EXPECT_EQ(StructuringElement::flat_square(0).offsets().size(), 1u);
  EXPECT_THROW(StructuringElement({}, {}), InputError);
}

TEST(Morphology, ConstantImageUnchanged) {
  const Image2D f(6, 6, 3.0f);
  EXPECT_EQ(erode(f, StructuringElement::flat_square(1)), f);
  EXPECT_EQ(dilate(f, StructuringElement::flat_square(2)), f);
}

TEST(Morphology, SingleBrightPixel) {
  Image2D f(7, 7, 0.0f);
  f.at(3, 3) = 1.0f;
  const auto se = StructuringElement::flat_square(1);
  EXPECT_EQ(erode(f, se), Image2D(7, 7, 0.0f));
  const auto d = dilate(f, se);
  for (std::size_t r = 0; r < 7; ++r)
    for (std::size_t c = 0; c < 7; ++c) {
      const bool block = r >= 2 && r <= 4 && c >= 2 && c <= 4;
      EXPECT_EQ(d.at(r, c), block ? 1.0f : 0.0f);
    }
}

TEST(Morphology, MatchesBruteForce) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_image(13, rng);
    for (int radius : {1, 2}) {
      const auto se = StructuringElement::flat_square(radius);
      EXPECT_EQ(erode(f, se), brute_erode(f, radius));
      EXPECT_EQ(dilate(f, se), brute_dilate(f, radius));
    }
  }
}

TEST(Morphology, NonFlatElementOffsetsValues) {
  const StructuringElement se({{0, 0}, {0, 1}}, {0.5f, 1.0f});
  Image2D f(1, 3);
  f.pixels = {1.0f, 4.0f, 2.0f};
  // erode: min(f(x) - 0.5, f(x+1) - 1)
  EXPECT_EQ(erode(f, se).pixels, (std::vector<float>{0.5f, 1.0f, 1.0f}));
  // dilate: max(f(x) + 0.5, f(x-1) + 1)
  EXPECT_EQ(dilate(f, se).pixels, (std::vector<float>{2.0f, 4.5f, 5.0f}));
}

TEST(Morphology, AlgebraicProperties) {
  Rng rng(2);
  const auto se = StructuringElement::flat_square(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = random_image(11, rng);
    EXPECT_EQ(dilate(negate(f), se.reflected()), negate(erode(f, se)));
    EXPECT_TRUE(leq(erode(f, se), f));
    EXPECT_TRUE(leq(f, dilate(f, se)));
    const auto open = dilate(erode(f, se), se);
    EXPECT_EQ(dilate(erode(open, se), se), open);
    const auto close = erode(dilate(f, se), se);
    EXPECT_EQ(erode(dilate(close, se), se), close);
    auto g = f;
    for (auto& p : g.pixels) p += static_cast<float>(std::abs(standard_normal(rng)));
    EXPECT_TRUE(leq(erode(f, se), erode(g, se)));
    EXPECT_TRUE(leq(dilate(f, se), dilate(g, se)));
  }
}

TEST(Augment, PolicyLabels) {
  Rng rng(3);
  const auto mci = phantom(Label::MCI, 4, 24);
  const auto out = augment_sample(mci, rng);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].label, Label::AD);
  EXPECT_EQ(out[1].label, Label::NC);
  for (auto label : {Label::AD, Label::NC}) {
    const auto one = augment_sample(phantom(label, 5, 24), rng);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].label, label);
  }
}

TEST(Augment, NoAugmentBranchKeepsVoxels) {
  Rng rng(6);
  const auto ad = phantom(Label::AD, 7, 24);
  const auto out = augment_sample(ad, rng, {1, 0.0});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].label, Label::AD);
  EXPECT_TRUE(std::equal(ad.voxels().begin(), ad.voxels().end(), out[0].volume.voxels().begin()));
}

TEST(Augment, ExpansionGrowsDarkRegion) {
  Rng gen(8);
  const auto v = generate_phantom(PhantomSpec::for_size(32, 0.0), Label::AD, gen);
  Rng rng(9);
  const auto expanded = atrophy_expansion(v, StructuringElement::flat_square(1), rng);
  const auto reduced = atrophy_reduction(v, StructuringElement::flat_square(1), rng);
  const auto below = [](const Volume& x) {
    std::size_t n = 0;
    for (float p : x.voxels()) n += p < 0.5f ? 1 : 0;
    return n;
  };
  EXPECT_GT(below(expanded), below(v));
  EXPECT_LT(below(reduced), below(v));
}

TEST(Augment, UnlabeledRejected) {
  Rng rng(10);
  EXPECT_THROW(augment_sample(Volume::filled({4, 4, 4}, 1.0f), rng), InputError);
}

TEST(Augment, DeterministicGivenSeed) {
  const auto v = phantom(Label::MCI, 11, 24);
  Rng a(12), b(12);
  const auto x = augment_sample(v, a);
  const auto y = augment_sample(v, b);
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_TRUE(std::equal(x[i].volume.voxels().begin(), x[i].volume.voxels().end(),
                           y[i].volume.voxels().begin()));
}
