// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>

#include "adapt/error.hpp"
#include "adapt/visualize.hpp"
#include "support/fixtures.hpp"

using namespace adapt;

TEST(Pgm, EncodeDecodeRoundTrip) {
  Gray8 g{2, 3, {0, 10, 20, 30, 40, 255}};
  const auto bytes = encode_pgm(g);
  const std::string header(bytes.begin(), bytes.begin() + 11);
  EXPECT_EQ(header, "P5\n3 2\n255\n");
  EXPECT_EQ(decode_pgm(bytes), g);
  auto bad = bytes;
  bad[1] = '2';
  EXPECT_THROW(decode_pgm(bad), BadMagicError);
  bad = bytes;
  bad.pop_back();
  EXPECT_THROW(decode_pgm(bad), TruncatedPayloadError);
}

TEST(Pgm, GrayStretchAndConstant) {
  Image2D img(1, 3);
  img.pixels = {-1.0f, 0.0f, 3.0f};
  EXPECT_EQ(to_gray(img).pixels, (std::vector<std::uint8_t>{0, 64, 255}));
  EXPECT_EQ(to_gray(Image2D(2, 2, 0.25f)).pixels, std::vector<std::uint8_t>(4, 0));
}

TEST(Upsample, CornersAndLinearity) {
  Image2D img(2, 2);
  img.pixels = {0.0f, 1.0f, 2.0f, 3.0f};
  const auto up = upsample_bilinear(img, 3, 3);
  EXPECT_FLOAT_EQ(up.at(0, 0), 0.0f);
  EXPECT_FLOAT_EQ(up.at(0, 2), 1.0f);
  EXPECT_FLOAT_EQ(up.at(2, 2), 3.0f);
  EXPECT_FLOAT_EQ(up.at(1, 1), 1.5f);
  const auto flat = upsample_bilinear(Image2D(4, 4, 0.5f), 16, 16);
  for (float p : flat.pixels) EXPECT_FLOAT_EQ(p, 0.5f);
}

TEST(AttentionMaps, TwelvePanelsAtSliceExtent) {
  const auto c = model::AdaptConfig::desk();
  const model::AdaptModel<float> m(c, 3);
  model::AttentionRecord rec;
  m.forward(adapt::testing::desk_stack(c, 4), &rec);
  const auto maps = attention_maps(rec, c);
  ASSERT_EQ(maps.size(), 12u);
  for (const auto& map : maps) {
    EXPECT_EQ(map.map.rows, 64u);
    EXPECT_EQ(map.map.cols, 64u);
    const auto g = to_gray(map.map);
    const auto [lo, hi] = std::minmax_element(g.pixels.begin(), g.pixels.end());
    EXPECT_EQ(*lo, 0);
    EXPECT_EQ(*hi, 255);
  }
}

TEST(AttentionMaps, UniformAttentionGivesConstantMap) {
  auto c = model::AdaptConfig::desk();
  model::AttentionRecord rec;
  for (auto stage : model::kStages) {
    auto& s = rec.open(stage);
    for (View v : kViews) {
      model::SequenceAttention seq{v, {}, {}};
      for (int h = 0; h < 4; ++h) seq.rows.emplace_back(c.tokens(), 1.0f / c.tokens());
      s.sequences.push_back(seq);
    }
  }
  for (const auto& map : attention_maps(rec, c)) {
    const auto g = to_gray(map.map);
    EXPECT_TRUE(std::all_of(g.pixels.begin(), g.pixels.end(), [&](auto p) { return p == g.pixels[0]; }));
  }
}
