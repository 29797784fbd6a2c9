// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "adapt/model.hpp"
#include "adapt/slicer.hpp"
#include "adapt/volumes.hpp"

namespace adapt {

struct Gray8 {
  std::size_t rows = 0, cols = 0;
  std::vector<std::uint8_t> pixels;
  friend bool operator==(const Gray8&, const Gray8&) = default;
};

/// Binary P5 with maxval 255.
std::vector<std::uint8_t> encode_pgm(const Gray8& image);
Gray8 decode_pgm(std::span<const std::uint8_t> bytes);
void save_pgm(const Gray8& image, const std::filesystem::path& path);

/// Min-max stretch to 0..255; a constant image maps to all zeros.
Gray8 to_gray(const Image2D& image);

/// Corner-aligned bilinear resampling to rows x cols.
Image2D upsample_bilinear(const Image2D& image, std::size_t rows, std::size_t cols);

struct AttentionMap {
  model::Stage stage;
  View view;
  Image2D map;  // slice extent, raw head-averaged attention
};

/// Class-token attention over patch tokens, averaged over heads, for the
/// middle sequence of each view in the last layer of each stage, reshaped to
/// the patch grid and upsampled to the slice extent. 4 stages x 3 views.
std::vector<AttentionMap> attention_maps(const model::AttentionRecord& record,
                                         const model::AdaptConfig& config);

}  // namespace adapt
