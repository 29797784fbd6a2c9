// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adapt/numerics/tensor.hpp"

namespace adapt {

// "ADPT" | version u32 | config text (u32 length + bytes)
// | tensor table: count u32, per tensor name (u16 length + bytes), rank u8,
//   extents u32 each, float32 values
// | moment table, same format | allocation as three u32 | rng state (u32 length + bytes).
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  nn::Shape shape;
  std::vector<float> values;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

struct Checkpoint {
  std::string config_text;
  std::vector<NamedTensor> tensors;
  std::vector<NamedTensor> moments;
  std::array<std::uint32_t, 3> allocation{};
  std::string rng_state;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
/// Throws BadMagicError, VersionError or TruncatedPayloadError on corrupt input.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace adapt
