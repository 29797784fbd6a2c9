// SPDX-License-Identifier: Apache-2.0
// Brute-force neighbourhood min/max filters written directly from the
// definitions, used as an independent oracle for the morphology module.

#pragma once

#include <algorithm>
#include <limits>

#include "adapt/morphology.hpp"
#include "adapt/random.hpp"

namespace adapt::testing {

inline float clamped(const Image2D& f, long r, long c) {
  r = std::clamp<long>(r, 0, static_cast<long>(f.rows) - 1);
  c = std::clamp<long>(c, 0, static_cast<long>(f.cols) - 1);
  return f.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
}

inline Image2D brute_erode(const Image2D& f, int radius) {
  Image2D out(f.rows, f.cols);
  for (long r = 0; r < static_cast<long>(f.rows); ++r)
    for (long c = 0; c < static_cast<long>(f.cols); ++c) {
      float m = std::numeric_limits<float>::infinity();
      for (int s = -radius; s <= radius; ++s)
        for (int t = -radius; t <= radius; ++t) m = std::min(m, clamped(f, r + s, c + t));
      out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m;
    }
  return out;
}

inline Image2D brute_dilate(const Image2D& f, int radius) {
  Image2D out(f.rows, f.cols);
  for (long r = 0; r < static_cast<long>(f.rows); ++r)
    for (long c = 0; c < static_cast<long>(f.cols); ++c) {
      float m = -std::numeric_limits<float>::infinity();
      for (int s = -radius; s <= radius; ++s)
        for (int t = -radius; t <= radius; ++t) m = std::max(m, clamped(f, r - s, c - t));
      out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m;
    }
  return out;
}

inline Image2D random_image(std::size_t n, Rng& rng) {
  Image2D img(n, n);
  for (auto& p : img.pixels) p = static_cast<float>(standard_normal(rng));
  return img;
}

inline Image2D negate(Image2D f) {
  for (auto& p : f.pixels) p = -p;
  return f;
}

inline bool leq(const Image2D& a, const Image2D& b) {
  for (std::size_t i = 0; i < a.pixels.size(); ++i)
    if (!(a.pixels[i] <= b.pixels[i])) return false;
  return true;
}

}  // namespace adapt::testing
