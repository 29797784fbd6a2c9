// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "adapt/model.hpp"
#include "adapt/slicer.hpp"
#include "adapt/trainer.hpp"
#include "adapt/volumes.hpp"

namespace adapt::testing {

inline Volume phantom(Label label, std::uint64_t seed, std::uint32_t size = 64) {
  Rng rng(seed);
  return generate_phantom(PhantomSpec::for_size(size), label, rng);
}

inline SliceStack desk_stack(const model::AdaptConfig& c, std::uint64_t seed,
                             std::optional<SliceAllocation> alloc = std::nullopt) {
  const auto a = alloc.value_or(SliceAllocation::uniform(c.n_total, c.n_min, c.n_max));
  return extract_slices(prepare_volume(phantom(Label::AD, seed, c.image_extent), c.image_extent), a);
}

inline std::vector<Volume> phantom_set(std::size_t n, std::uint64_t seed, std::uint32_t size = 64) {
  Rng rng(seed);
  const auto spec = PhantomSpec::for_size(size);
  std::vector<Volume> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate_phantom(spec, static_cast<Label>(i % 3), rng));
  return out;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("adapt_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace adapt::testing
