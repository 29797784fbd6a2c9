// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adapt/random.hpp"

namespace adapt {

enum class Label : std::int32_t { NC = 0, AD = 1, MCI = 2 };

std::string to_string(Label label);
Label label_from_string(const std::string& name);

/// Slicing axis. Sagittal planes are fixed-x, coronal fixed-y, axial fixed-z.
enum class View : std::uint8_t { Sagittal = 0, Coronal = 1, Axial = 2 };

inline constexpr std::array<View, 3> kViews{View::Sagittal, View::Coronal, View::Axial};
std::string to_string(View view);

struct Extents {
  std::uint32_t x = 0, y = 0, z = 0;
  std::size_t voxels() const { return std::size_t{x} * y * z; }
  bool cubic() const { return x == y && y == z; }
  std::uint32_t along(View view) const;
  friend bool operator==(const Extents&, const Extents&) = default;
};

/// Row-major 2D scalar field, columns fastest.
struct Image2D {
  std::size_t rows = 0, cols = 0;
  std::vector<float> pixels;

  Image2D() = default;
  Image2D(std::size_t r, std::size_t c, float fill = 0.0f) : rows(r), cols(c), pixels(r * c, fill) {}

  float& at(std::size_t r, std::size_t c) { return pixels[r * cols + c]; }
  float at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
  friend bool operator==(const Image2D&, const Image2D&) = default;
};

/// 3D scalar field stored with x fastest, then y, then z.
class Volume {
 public:
  Volume() = default;
  Volume(Extents extents, std::vector<float> voxels, std::optional<Label> label = std::nullopt);
  static Volume filled(Extents extents, float value, std::optional<Label> label = std::nullopt);

  const Extents& extents() const { return extents_; }
  std::span<const float> voxels() const { return voxels_; }
  std::span<float> voxels() { return voxels_; }

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + extents_.x * (y + std::size_t{extents_.y} * z);
  }
  float at(std::size_t x, std::size_t y, std::size_t z) const { return voxels_[index(x, y, z)]; }
  float& at(std::size_t x, std::size_t y, std::size_t z) { return voxels_[index(x, y, z)]; }

  const std::optional<Label>& label() const { return label_; }
  void set_label(std::optional<Label> label) { label_ = label; }

  std::map<std::string, std::string>& meta() { return meta_; }
  const std::map<std::string, std::string>& meta() const { return meta_; }

 private:
  Extents extents_;
  std::vector<float> voxels_;
  std::optional<Label> label_;
  std::map<std::string, std::string> meta_;
};

/// Plane `index` perpendicular to the view axis. Orientation: sagittal
/// (row=z, col=y), coronal (row=z, col=x), axial (row=y, col=x).
Image2D extract_plane(const Volume& volume, View view, std::size_t index);
void store_plane(Volume& volume, View view, std::size_t index, const Image2D& plane);

// Binary volume file: "ADVL" | version u32 | X,Y,Z u32 | label i32 (-1 none)
// | X*Y*Z float32, all little-endian, x fastest.
inline constexpr std::uint32_t kVolumeFormatVersion = 1;

std::vector<std::uint8_t> encode_volume(const Volume& volume);
Volume decode_volume(std::span<const std::uint8_t> bytes);
Volume load_volume(const std::filesystem::path& path);
void save_volume(const Volume& volume, const std::filesystem::path& path);

/// Corner-aligned trilinear resampling: output sample i maps to input
/// coordinate i * (in - 1) / (out - 1) on each axis.
Volume resize_trilinear(const Volume& volume, Extents target);

/// Zero-mean, unit-variance intensity normalization (population variance).
Volume normalize_zmuv(const Volume& volume);

struct RadiusRange {
  double lo = 0.0, hi = 0.0;
};

/// Parameters of the synthetic head phantom: an ellipsoidal bright "brain"
/// around a dark spherical "ventricle" whose radius depends on the class.
struct PhantomSpec {
  std::uint32_t size = 64;
  RadiusRange nc_radius;
  RadiusRange mci_radius;
  RadiusRange ad_radius;
  double noise_sd = 0.1;
  std::uint64_t seed = 0;

  /// Class intervals scaled to the cube size.
  static PhantomSpec for_size(std::uint32_t size, double noise_sd = 0.1, std::uint64_t seed = 0);
  const RadiusRange& radius_range(Label label) const;
  void validate() const;
};

Volume generate_phantom(const PhantomSpec& spec, Label label, Rng& rng);

enum class Split { Train, Val, Test };
std::string to_string(Split split);
Split split_from_string(const std::string& name);

struct DatasetEntry {
  std::string filename;
  Split split;
};

inline constexpr const char* kManifestName = "manifest.tsv";

/// Manifest lines: `filename<TAB>split`.
std::vector<DatasetEntry> read_manifest(const std::filesystem::path& dir);
std::string format_manifest(std::span<const DatasetEntry> entries);
std::vector<Volume> load_split(const std::filesystem::path& dir, Split split);

}  // namespace adapt
