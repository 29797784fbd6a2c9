// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "adapt/random.hpp"
#include "adapt/volumes.hpp"

namespace adapt::morphology {

struct Offset {
  int ds = 0;  // row offset
  int dt = 0;  // column offset
  friend bool operator==(const Offset&, const Offset&) = default;
};

/// Neighbourhood b_N: offsets with an additive value each (0 for flat).
class StructuringElement {
 public:
  StructuringElement(std::vector<Offset> offsets, std::vector<float> values);

  /// Flat (2r+1)x(2r+1) square; radius 0 is the origin alone.
  static StructuringElement flat_square(int radius);

  /// Point reflection: (s,t) -> (-s,-t), values carried along.
  StructuringElement reflected() const;

  const std::vector<Offset>& offsets() const { return offsets_; }
  const std::vector<float>& values() const { return values_; }
  bool flat() const;
  bool contains_origin() const;

 private:
  std::vector<Offset> offsets_;
  std::vector<float> values_;
};

/// out(x,y) = min_{(s,t)} f(x+s, y+t) - b(s,t), replicate padding.
Image2D erode(const Image2D& image, const StructuringElement& se);

/// out(x,y) = max_{(s,t)} f(x-s, y-t) + b(s,t), replicate padding.
Image2D dilate(const Image2D& image, const StructuringElement& se);

/// Apply the 2D operator to every plane perpendicular to `view`.
Volume erode_slices(const Volume& volume, const StructuringElement& se, View view);
Volume dilate_slices(const Volume& volume, const StructuringElement& se, View view);

// Atrophy expansion grows dark (CSF-like) regions, i.e. erodes intensity;
// atrophy reduction is the dual dilation. The slicing axis is drawn from rng.
Volume atrophy_expansion(const Volume& volume, const StructuringElement& se, Rng& rng);
Volume atrophy_reduction(const Volume& volume, const StructuringElement& se, Rng& rng);

struct AugmentOptions {
  int se_radius = 1;
  double probability = 0.5;
};

struct LabeledVolume {
  Volume volume;
  Label label;
};

/// Label-aware policy: MCI yields an expanded AD copy and a reduced NC copy;
/// AD is expanded and NC reduced with the given probability, otherwise
/// passed through unchanged.
std::vector<LabeledVolume> augment_sample(const Volume& volume, Rng& rng,
                                          const AugmentOptions& options = {});

}  // namespace adapt::morphology
