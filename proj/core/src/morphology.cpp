// SPDX-License-Identifier: Apache-2.0

#include "adapt/morphology.hpp"

#include <algorithm>
#include <limits>

#include "adapt/error.hpp"

namespace adapt::morphology {

StructuringElement::StructuringElement(std::vector<Offset> offsets, std::vector<float> values)
    : offsets_(std::move(offsets)), values_(std::move(values)) {
  if (offsets_.empty()) throw InputError("structuring element is empty");
  if (offsets_.size() != values_.size()) {
    throw InputError("structuring element needs one value per offset");
  }
}

StructuringElement StructuringElement::flat_square(int radius) {
  if (radius < 0) throw InputError("structuring element radius must be >= 0");
  std::vector<Offset> offsets;
  for (int s = -radius; s <= radius; ++s)
    for (int t = -radius; t <= radius; ++t) offsets.push_back({s, t});
  std::vector<float> values(offsets.size(), 0.0f);
  return StructuringElement(std::move(offsets), std::move(values));
}

StructuringElement StructuringElement::reflected() const {
  std::vector<Offset> offsets;
  offsets.reserve(offsets_.size());
  for (const auto& o : offsets_) offsets.push_back({-o.ds, -o.dt});
  return StructuringElement(std::move(offsets), values_);
}

bool StructuringElement::flat() const {
  return std::all_of(values_.begin(), values_.end(), [](float v) { return v == 0.0f; });
}

bool StructuringElement::contains_origin() const {
  return std::find(offsets_.begin(), offsets_.end(), Offset{0, 0}) != offsets_.end();
}

namespace {

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (static_cast<std::size_t>(i) >= n) return n - 1;
  return static_cast<std::size_t>(i);
}

template <typename Combine>
Image2D neighbourhood_filter(const Image2D& image, const StructuringElement& se, int sign,
                             float init, Combine combine) {
  if (image.rows == 0 || image.cols == 0) throw InputError("morphology on an empty image");
  Image2D out(image.rows, image.cols);
  const auto& offsets = se.offsets();
  const auto& values = se.values();
  for (std::size_t r = 0; r < image.rows; ++r)
    for (std::size_t c = 0; c < image.cols; ++c) {
      float acc = init;
      for (std::size_t k = 0; k < offsets.size(); ++k) {
        const auto rr = clamp_index(static_cast<std::ptrdiff_t>(r) + sign * offsets[k].ds, image.rows);
        const auto cc = clamp_index(static_cast<std::ptrdiff_t>(c) + sign * offsets[k].dt, image.cols);
        acc = combine(acc, image.at(rr, cc), values[k]);
      }
      out.at(r, c) = acc;
    }
  return out;
}

template <typename PlaneOp>
Volume slicewise(const Volume& volume, View view, PlaneOp op) {
  Volume out = volume;
  const auto n = volume.extents().along(view);
  for (std::size_t i = 0; i < n; ++i) store_plane(out, view, i, op(extract_plane(volume, view, i)));
  return out;
}

View draw_view(Rng& rng) { return kViews[uniform_index(rng, kViews.size())]; }

}  // namespace

Image2D erode(const Image2D& image, const StructuringElement& se) {
  return neighbourhood_filter(image, se, +1, std::numeric_limits<float>::infinity(),
                              [](float acc, float f, float b) { return std::min(acc, f - b); });
}

Image2D dilate(const Image2D& image, const StructuringElement& se) {
  return neighbourhood_filter(image, se, -1, -std::numeric_limits<float>::infinity(),
                              [](float acc, float f, float b) { return std::max(acc, f + b); });
}

Volume erode_slices(const Volume& volume, const StructuringElement& se, View view) {
  return slicewise(volume, view, [&](const Image2D& p) { return erode(p, se); });
}

Volume dilate_slices(const Volume& volume, const StructuringElement& se, View view) {
  return slicewise(volume, view, [&](const Image2D& p) { return dilate(p, se); });
}

Volume atrophy_expansion(const Volume& volume, const StructuringElement& se, Rng& rng) {
  const View view = draw_view(rng);
  return erode_slices(volume, se, view);
}

Volume atrophy_reduction(const Volume& volume, const StructuringElement& se, Rng& rng) {
  const View view = draw_view(rng);
  return dilate_slices(volume, se, view);
}

std::vector<LabeledVolume> augment_sample(const Volume& volume, Rng& rng,
                                          const AugmentOptions& options) {
  if (!volume.label()) throw InputError("augmentation needs a labelled volume");
  const auto se = StructuringElement::flat_square(options.se_radius);
  std::vector<LabeledVolume> out;
  switch (*volume.label()) {
    case Label::MCI: {
      Volume expanded = atrophy_expansion(volume, se, rng);
      expanded.set_label(Label::AD);
      Volume reduced = atrophy_reduction(volume, se, rng);
      reduced.set_label(Label::NC);
      out.push_back({std::move(expanded), Label::AD});
      out.push_back({std::move(reduced), Label::NC});
      break;
    }
    case Label::AD: {
      Volume v = bernoulli(rng, options.probability) ? atrophy_expansion(volume, se, rng) : volume;
      out.push_back({std::move(v), Label::AD});
      break;
    }
    case Label::NC: {
      Volume v = bernoulli(rng, options.probability) ? atrophy_reduction(volume, se, rng) : volume;
      out.push_back({std::move(v), Label::NC});
      break;
    }
  }
  return out;
}

}  // namespace adapt::morphology
