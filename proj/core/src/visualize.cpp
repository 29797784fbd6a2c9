// SPDX-License-Identifier: Apache-2.0

#include "adapt/visualize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adapt/error.hpp"
#include "adapt/io.hpp"

namespace adapt {

using io::write_file_atomic;

std::vector<std::uint8_t> encode_pgm(const Gray8& image) {
  if (image.pixels.size() != image.rows * image.cols) {
    throw DimensionError("pgm pixel count does not match " + std::to_string(image.rows) + "x" +
                         std::to_string(image.cols));
  }
  const auto header =
      "P5\n" + std::to_string(image.cols) + " " + std::to_string(image.rows) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

Gray8 decode_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  if (token() != "P5") throw BadMagicError("not a binary PGM (expected P5)");
  Gray8 g;
  try {
    g.cols = std::stoul(token());
    g.rows = std::stoul(token());
    if (std::stoul(token()) != 255) throw FormatError("pgm maxval must be 255");
  } catch (const std::logic_error&) {
    throw FormatError("malformed pgm header");
  }
  ++pos;  // single whitespace after maxval
  if (bytes.size() < pos || bytes.size() - pos != g.rows * g.cols) {
    throw TruncatedPayloadError("truncated payload: pgm pixel data does not match header");
  }
  g.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return g;
}

void save_pgm(const Gray8& image, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pgm(image));
}

Gray8 to_gray(const Image2D& image) {
  Gray8 g{image.rows, image.cols, std::vector<std::uint8_t>(image.pixels.size(), 0)};
  if (image.pixels.empty()) return g;
  const auto [lo, hi] = std::minmax_element(image.pixels.begin(), image.pixels.end());
  const double range = static_cast<double>(*hi) - *lo;
  if (!(range > 0.0)) return g;
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const double t = (image.pixels[i] - static_cast<double>(*lo)) / range;
    g.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
  }
  return g;
}

Image2D upsample_bilinear(const Image2D& image, std::size_t rows, std::size_t cols) {
  if (image.rows == 0 || image.cols == 0 || rows == 0 || cols == 0) {
    throw DimensionError("bilinear resampling of an empty image");
  }
  auto coord = [](std::size_t i, std::size_t out, std::size_t in) {
    return out == 1 ? 0.0 : static_cast<double>(i) * static_cast<double>(in - 1) / (out - 1);
  };
  Image2D out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = coord(r, rows, image.rows);
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const auto y1 = std::min(y0 + 1, image.rows - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = coord(c, cols, image.cols);
      const auto x0 = static_cast<std::size_t>(std::floor(x));
      const auto x1 = std::min(x0 + 1, image.cols - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = image.at(y0, x0) * (1 - fx) + image.at(y0, x1) * fx;
      const double bottom = image.at(y1, x0) * (1 - fx) + image.at(y1, x1) * fx;
      out.at(r, c) = static_cast<float>(top * (1 - fy) + bottom * fy);
    }
  }
  return out;
}

std::vector<AttentionMap> attention_maps(const model::AttentionRecord& record,
                                         const model::AdaptConfig& config) {
  const std::size_t g = config.grid();
  std::vector<AttentionMap> out;
  for (auto stage : model::kStages) {
    const auto& sequences = record.stage(stage).sequences;
    for (View view : kViews) {
      std::vector<const model::SequenceAttention*> group;
      for (const auto& s : sequences)
        if (s.view == view) group.push_back(&s);
      if (group.empty()) {
        throw InputError("no " + to_string(view) + " sequence recorded for stage " +
                         model::to_string(stage));
      }
      const auto& seq = *group[group.size() / 2];
      Image2D grid(g, g);
      for (const auto& row : seq.rows) {
        if (row.size() != g * g + 1) {
          throw DimensionError("attention row of length " + std::to_string(row.size()) +
                               " does not fit a " + std::to_string(g) + "x" + std::to_string(g) +
                               " grid");
        }
        for (std::size_t k = 0; k < g * g; ++k) grid.pixels[k] += row[k + 1];
      }
      for (auto& v : grid.pixels) v /= static_cast<float>(seq.rows.size());
      out.push_back({stage, view, upsample_bilinear(grid, config.image_extent, config.image_extent)});
    }
  }
  return out;
}

}  // namespace adapt
