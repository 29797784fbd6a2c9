// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adapt/trainer.hpp"

namespace adapt::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kNumeric = 3;

struct GenOptions {
  std::uint32_t count = 30;
  std::uint32_t size = 64;
  double noise = 0.1;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

enum class AugmentMode { Expand, Reduce, Policy };

struct AugmentCliOptions {
  std::filesystem::path in, out;
  AugmentMode mode = AugmentMode::Policy;
  int se_radius = 1;
  double probability = 0.5;
  std::uint64_t seed = 0;
};

struct TrainCliOptions {
  std::filesystem::path data, config, out;
  std::vector<std::string> overrides;  // key=value, applied after the config file
};

struct EvalOptions {
  std::filesystem::path checkpoint, data;
  Split split = Split::Test;
};

struct AttnOptions {
  std::filesystem::path checkpoint, volume, out_dir;
};

struct SliceDumpOptions {
  std::filesystem::path volume, out_dir;
  std::uint32_t n_total = 12;
};

void gen_phantoms(const GenOptions& o);
void augment(const AugmentCliOptions& o);
void train(const TrainCliOptions& o);
void eval(const EvalOptions& o);
void attn_map(const AttnOptions& o);
void slice_dump(const SliceDumpOptions& o);

/// Config file, then overrides; image_extent defaults to the data extent.
TrainConfig resolve_train_config(const TrainCliOptions& o, std::uint32_t data_extent);

/// Parses arguments, dispatches, maps exceptions to exit statuses.
int run(int argc, char** argv);

}  // namespace adapt::cli
