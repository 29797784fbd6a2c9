// SPDX-License-Identifier: Apache-2.0

#include "adapt/checkpoint.hpp"

#include <cstring>

#include "adapt/error.hpp"
#include "adapt/io.hpp"

namespace adapt {

using namespace io;

namespace {

constexpr char kMagic[4] = {'A', 'D', 'P', 'T'};

void write_table(ByteWriter& w, const std::vector<NamedTensor>& table) {
  w.u32(static_cast<std::uint32_t>(table.size()));
  for (const auto& t : table) {
    if (t.name.size() > UINT16_MAX) throw InputError("tensor name too long: " + t.name);
    if (t.shape.size() > UINT8_MAX) throw InputError("tensor rank too large: " + t.name);
    if (nn::element_count(t.shape) != t.values.size()) {
      throw DimensionError("tensor '" + t.name + "' has " + std::to_string(t.values.size()) +
                           " values for shape " + nn::to_string(t.shape));
    }
    w.u16(static_cast<std::uint16_t>(t.name.size()));
    w.text(t.name);
    w.u8(static_cast<std::uint8_t>(t.shape.size()));
    for (auto e : t.shape) w.u32(static_cast<std::uint32_t>(e));
    w.f32s(t.values);
  }
}

std::vector<NamedTensor> read_table(ByteReader& r) {
  const auto count = r.u32();
  std::vector<NamedTensor> table;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.text(r.u16());
    const auto rank = r.u8();
    for (std::uint8_t k = 0; k < rank; ++k) t.shape.push_back(r.u32());
    const auto n = nn::element_count(t.shape);
    if (n > r.remaining() / 4) {
      throw TruncatedPayloadError("truncated payload: tensor '" + t.name + "' needs " +
                                  std::to_string(n) + " values");
    }
    t.values.resize(n);
    for (auto& v : t.values) v = r.f32();
    table.push_back(std::move(t));
  }
  return table;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  ByteWriter w;
  w.text(std::string_view(kMagic, 4));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(c.config_text.size()));
  w.text(c.config_text);
  write_table(w, c.tensors);
  write_table(w, c.moments);
  for (auto n : c.allocation) w.u32(n);
  w.u32(static_cast<std::uint32_t>(c.rng_state.size()));
  w.text(c.rng_state);
  return w.buffer();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw BadMagicError("not a checkpoint: bad magic (expected \"ADPT\")");
  }
  ByteReader r(bytes.subspan(4));
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  c.config_text = r.text(r.u32());
  c.tensors = read_table(r);
  c.moments = read_table(r);
  for (auto& n : c.allocation) n = r.u32();
  c.rng_state = r.text(r.u32());
  if (r.remaining() != 0) {
    throw FormatError("checkpoint has " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace adapt
