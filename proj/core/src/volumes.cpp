// SPDX-License-Identifier: Apache-2.0

#include "adapt/volumes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "adapt/error.hpp"
#include "adapt/io.hpp"

namespace adapt {

namespace {

constexpr std::array<std::uint8_t, 4> kVolumeMagic{'A', 'D', 'V', 'L'};
constexpr std::size_t kVolumeHeaderBytes = 4 + 4 + 12 + 4;

}  // namespace

std::string to_string(Label label) {
  switch (label) {
    case Label::NC: return "NC";
    case Label::AD: return "AD";
    case Label::MCI: return "MCI";
  }
  return "?";
}

Label label_from_string(const std::string& name) {
  if (name == "NC") return Label::NC;
  if (name == "AD") return Label::AD;
  if (name == "MCI") return Label::MCI;
  throw InputError("unknown label '" + name + "'");
}

std::string to_string(View view) {
  switch (view) {
    case View::Sagittal: return "sagittal";
    case View::Coronal: return "coronal";
    case View::Axial: return "axial";
  }
  return "?";
}

std::uint32_t Extents::along(View view) const {
  switch (view) {
    case View::Sagittal: return x;
    case View::Coronal: return y;
    case View::Axial: return z;
  }
  return 0;
}

Volume::Volume(Extents extents, std::vector<float> voxels, std::optional<Label> label)
    : extents_(extents), voxels_(std::move(voxels)), label_(label) {
  if (extents.x == 0 || extents.y == 0 || extents.z == 0) {
    throw DimensionError("volume extents must be positive");
  }
  if (extents.voxels() != voxels_.size()) {
    throw ExtentMismatchError("volume extents " + std::to_string(extents.x) + "x" +
                              std::to_string(extents.y) + "x" + std::to_string(extents.z) +
                              " do not match " + std::to_string(voxels_.size()) + " voxels");
  }
}

Volume Volume::filled(Extents extents, float value, std::optional<Label> label) {
  return Volume(extents, std::vector<float>(extents.voxels(), value), label);
}

Image2D extract_plane(const Volume& volume, View view, std::size_t index) {
  const auto& e = volume.extents();
  if (index >= e.along(view)) {
    throw InputError("plane index " + std::to_string(index) + " outside " + to_string(view) +
                     " extent " + std::to_string(e.along(view)));
  }
  switch (view) {
    case View::Sagittal: {
      Image2D img(e.z, e.y);
      for (std::size_t z = 0; z < e.z; ++z)
        for (std::size_t y = 0; y < e.y; ++y) img.at(z, y) = volume.at(index, y, z);
      return img;
    }
    case View::Coronal: {
      Image2D img(e.z, e.x);
      for (std::size_t z = 0; z < e.z; ++z)
        for (std::size_t x = 0; x < e.x; ++x) img.at(z, x) = volume.at(x, index, z);
      return img;
    }
    case View::Axial: {
      Image2D img(e.y, e.x);
      const auto src = volume.voxels().subspan(volume.index(0, 0, index), std::size_t{e.x} * e.y);
      std::copy(src.begin(), src.end(), img.pixels.begin());
      return img;
    }
  }
  return {};
}

void store_plane(Volume& volume, View view, std::size_t index, const Image2D& plane) {
  const auto& e = volume.extents();
  const Image2D shape_probe = [&] {
    switch (view) {
      case View::Sagittal: return Image2D{e.z, e.y};
      case View::Coronal: return Image2D{e.z, e.x};
      default: return Image2D{e.y, e.x};
    }
  }();
  if (index >= e.along(view) || plane.rows != shape_probe.rows || plane.cols != shape_probe.cols) {
    throw DimensionError("plane does not fit " + to_string(view) + " index " + std::to_string(index));
  }
  switch (view) {
    case View::Sagittal:
      for (std::size_t z = 0; z < e.z; ++z)
        for (std::size_t y = 0; y < e.y; ++y) volume.at(index, y, z) = plane.at(z, y);
      break;
    case View::Coronal:
      for (std::size_t z = 0; z < e.z; ++z)
        for (std::size_t x = 0; x < e.x; ++x) volume.at(x, index, z) = plane.at(z, x);
      break;
    case View::Axial:
      std::copy(plane.pixels.begin(), plane.pixels.end(),
                volume.voxels().begin() + static_cast<std::ptrdiff_t>(volume.index(0, 0, index)));
      break;
  }
}

std::vector<std::uint8_t> encode_volume(const Volume& volume) {
  io::ByteWriter w;
  w.bytes(kVolumeMagic);
  w.u32(kVolumeFormatVersion);
  w.u32(volume.extents().x);
  w.u32(volume.extents().y);
  w.u32(volume.extents().z);
  w.i32(volume.label() ? static_cast<std::int32_t>(*volume.label()) : -1);
  w.f32s(volume.voxels());
  return w.buffer();
}

Volume decode_volume(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (bytes.size() < 4 || !std::equal(kVolumeMagic.begin(), kVolumeMagic.end(), bytes.begin())) {
    throw BadMagicError("bad magic: not an ADVL volume file");
  }
  r.bytes(4);
  if (bytes.size() < kVolumeHeaderBytes) {
    throw TruncatedPayloadError("truncated payload: volume header is incomplete");
  }
  const auto version = r.u32();
  if (version != kVolumeFormatVersion) {
    throw VersionError("unsupported volume format version " + std::to_string(version));
  }
  Extents e{r.u32(), r.u32(), r.u32()};
  const auto raw_label = r.i32();
  if (raw_label < -1 || raw_label > 2) throw FormatError("invalid label " + std::to_string(raw_label));
  if (r.remaining() % 4 != 0) {
    throw TruncatedPayloadError("truncated payload: " + std::to_string(r.remaining()) +
                                " payload bytes is not a whole number of float32 values");
  }
  const std::size_t count = r.remaining() / 4;
  if (e.x == 0 || e.y == 0 || e.z == 0 || count != e.voxels()) {
    throw ExtentMismatchError("extent/payload mismatch: header " + std::to_string(e.x) + "x" +
                              std::to_string(e.y) + "x" + std::to_string(e.z) + " but " +
                              std::to_string(count) + " values");
  }
  std::vector<float> voxels(count);
  for (auto& v : voxels) v = r.f32();
  std::optional<Label> label;
  if (raw_label >= 0) label = static_cast<Label>(raw_label);
  return Volume(e, std::move(voxels), label);
}

Volume load_volume(const std::filesystem::path& path) {
  return decode_volume(io::read_file(path));
}

void save_volume(const Volume& volume, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_volume(volume));
}

Volume resize_trilinear(const Volume& volume, Extents target) {
  const auto& src = volume.extents();
  if (src.x < 2 || src.y < 2 || src.z < 2 || target.x < 2 || target.y < 2 || target.z < 2) {
    throw DimensionError("trilinear resize needs every extent >= 2");
  }
  struct Tap {
    std::size_t i0, i1;
    double w;
  };
  auto taps = [](std::uint32_t in, std::uint32_t out) {
    std::vector<Tap> t(out);
    const double step = static_cast<double>(in - 1) / static_cast<double>(out - 1);
    for (std::uint32_t i = 0; i < out; ++i) {
      const double pos = i * step;
      auto i0 = static_cast<std::size_t>(std::floor(pos));
      i0 = std::min<std::size_t>(i0, in - 1);
      const std::size_t i1 = std::min<std::size_t>(i0 + 1, in - 1);
      t[i] = {i0, i1, pos - static_cast<double>(i0)};
    }
    return t;
  };
  const auto tx = taps(src.x, target.x), ty = taps(src.y, target.y), tz = taps(src.z, target.z);
  std::vector<float> out(target.voxels());
  std::size_t n = 0;
  for (const auto& cz : tz)
    for (const auto& cy : ty)
      for (const auto& cx : tx) {
        auto lerp_x = [&](std::size_t y, std::size_t z) {
          return (1.0 - cx.w) * volume.at(cx.i0, y, z) + cx.w * volume.at(cx.i1, y, z);
        };
        const double c0 = (1.0 - cy.w) * lerp_x(cy.i0, cz.i0) + cy.w * lerp_x(cy.i1, cz.i0);
        const double c1 = (1.0 - cy.w) * lerp_x(cy.i0, cz.i1) + cy.w * lerp_x(cy.i1, cz.i1);
        out[n++] = static_cast<float>((1.0 - cz.w) * c0 + cz.w * c1);
      }
  Volume result(target, std::move(out), volume.label());
  result.meta() = volume.meta();
  return result;
}

Volume normalize_zmuv(const Volume& volume) {
  const auto v = volume.voxels();
  double mean = 0.0;
  for (float x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (float x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  if (!(var > 1e-12)) throw DegenerateInputError("cannot normalize a constant volume");
  const double inv_sd = 1.0 / std::sqrt(var);
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>((v[i] - mean) * inv_sd);
  Volume result(volume.extents(), std::move(out), volume.label());
  result.meta() = volume.meta();
  return result;
}

PhantomSpec PhantomSpec::for_size(std::uint32_t size, double noise_sd, std::uint64_t seed) {
  PhantomSpec spec;
  spec.size = size;
  const double s = size;
  spec.nc_radius = {0.06 * s, 0.10 * s};
  spec.mci_radius = {0.115 * s, 0.145 * s};
  spec.ad_radius = {0.16 * s, 0.22 * s};
  spec.noise_sd = noise_sd;
  spec.seed = seed;
  return spec;
}

const RadiusRange& PhantomSpec::radius_range(Label label) const {
  switch (label) {
    case Label::NC: return nc_radius;
    case Label::AD: return ad_radius;
    case Label::MCI: return mci_radius;
  }
  throw InputError("unknown label");
}

void PhantomSpec::validate() const {
  if (size < 8) throw ConfigError("phantom size must be >= 8");
  if (noise_sd < 0.0) throw ConfigError("phantom noise must be >= 0");
  for (const auto* r : {&nc_radius, &mci_radius, &ad_radius}) {
    if (!(r->lo > 0.0 && r->lo <= r->hi)) throw ConfigError("phantom radius interval is empty");
  }
  if (!(ad_radius.lo > nc_radius.hi)) throw ConfigError("AD radius interval must lie above NC");
  if (mci_radius.lo < nc_radius.hi || mci_radius.hi > ad_radius.lo) {
    throw ConfigError("MCI radius interval must lie between NC and AD");
  }
}

Volume generate_phantom(const PhantomSpec& spec, Label label, Rng& rng) {
  spec.validate();
  const double s = spec.size;
  const double center = (s - 1.0) / 2.0;
  const double cx = center + uniform(rng, -1.0, 1.0);
  const double cy = center + uniform(rng, -1.0, 1.0);
  const double cz = center + uniform(rng, -1.0, 1.0);
  const double ax = 0.40 * s * uniform(rng, 0.96, 1.04);
  const double ay = 0.44 * s * uniform(rng, 0.96, 1.04);
  const double az = 0.38 * s * uniform(rng, 0.96, 1.04);
  const double brightness = uniform(rng, 0.9, 1.1);
  const auto& range = spec.radius_range(label);
  const double radius = uniform(rng, range.lo, range.hi);

  Extents e{spec.size, spec.size, spec.size};
  std::vector<float> voxels(e.voxels(), 0.0f);
  std::size_t n = 0;
  for (std::uint32_t z = 0; z < e.z; ++z)
    for (std::uint32_t y = 0; y < e.y; ++y)
      for (std::uint32_t x = 0; x < e.x; ++x, ++n) {
        const double dx = x - cx, dy = y - cy, dz = z - cz;
        const double q = dx * dx / (ax * ax) + dy * dy / (ay * ay) + dz * dz / (az * az);
        if (q > 1.0) continue;
        double v = brightness * (0.85 + 0.15 * (1.0 - q));
        if (dx * dx + dy * dy + dz * dz <= radius * radius) v = 0.15 * brightness;
        voxels[n] = static_cast<float>(v);
      }
  if (spec.noise_sd > 0.0) {
    for (auto& v : voxels) v += static_cast<float>(spec.noise_sd * standard_normal(rng));
  }
  Volume vol(e, std::move(voxels), label);
  std::ostringstream r;
  r << radius;
  vol.meta()["ventricle_radius"] = r.str();
  return vol;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw FormatError("unknown split '" + name + "'");
}

std::vector<DatasetEntry> read_manifest(const std::filesystem::path& dir) {
  const auto bytes = io::read_file(dir / kManifestName);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::vector<DatasetEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": expected filename<TAB>split");
    }
    entries.push_back({line.substr(0, tab), split_from_string(line.substr(tab + 1))});
  }
  return entries;
}

std::string format_manifest(std::span<const DatasetEntry> entries) {
  std::string out;
  for (const auto& e : entries) out += e.filename + "\t" + to_string(e.split) + "\n";
  return out;
}

std::vector<Volume> load_split(const std::filesystem::path& dir, Split split) {
  std::vector<Volume> volumes;
  for (const auto& entry : read_manifest(dir)) {
    if (entry.split != split) continue;
    auto vol = load_volume(dir / entry.filename);
    vol.meta()["file"] = entry.filename;
    volumes.push_back(std::move(vol));
  }
  return volumes;
}

}  // namespace adapt
