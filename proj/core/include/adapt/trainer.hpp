// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adapt/checkpoint.hpp"
#include "adapt/config.hpp"
#include "adapt/model.hpp"
#include "adapt/morphology.hpp"
#include "adapt/optim.hpp"
#include "adapt/random.hpp"
#include "adapt/slicer.hpp"
#include "adapt/volumes.hpp"

namespace adapt {

struct TrainConfig {
  model::AdaptConfig model = model::AdaptConfig::desk();
  double learning_rate = 5e-5;
  /// Cosine horizon in optimizer steps; 0 means epochs * batches per epoch.
  std::uint64_t schedule_steps = 0;
  std::uint32_t batch_size = 4;
  std::uint32_t epochs = 15;
  double realloc_probability = 0.8;
  std::uint64_t seed = 0;
  bool augment = true;
  double augment_probability = 0.5;
  std::int32_t se_radius = 1;
  double weight_decay = 0.01;

  void validate() const;
  KeyValues to_key_values() const;
  /// Model keys are forwarded; unknown keys throw ConfigError.
  void apply(const std::string& key, const std::string& value);
  static TrainConfig from_key_values(const KeyValues& entries, TrainConfig base);
};

struct EpochMetrics {
  std::uint32_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  SliceAllocation allocation;  // used during this epoch
  SliceAllocation next_allocation;
  std::array<double, 3> scores{};
  double lr = 0.0;  // last learning rate applied
};

/// "epoch\ttrain_loss\tval_acc\tn_sag\tn_cor\tn_ax\tlr"
std::string format_metrics_line(const EpochMetrics& m);

struct EvalResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t skipped = 0;  // volumes without a binary label (MCI, unlabeled)
  /// confusion[true][predicted], NC = 0, AD = 1.
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

/// Extent-matched (trilinear resize when needed), intensity-normalized copy.
Volume prepare_volume(const Volume& volume, std::uint32_t extent);

/// Argmax of logits for every binary-labelled volume.
EvalResult evaluate(const model::AdaptModel<float>& model, std::span<const Volume> volumes,
                    const SliceAllocation& allocation);

class Trainer {
 public:
  explicit Trainer(TrainConfig config);

  const TrainConfig& config() const { return config_; }
  const model::AdaptModel<float>& model() const { return model_; }
  const SliceAllocation& allocation() const { return allocation_; }
  std::uint32_t epoch() const { return epoch_; }
  const AdamWState& optimizer() const { return adam_; }
  /// Batch-mean losses of every optimizer step run by this trainer.
  const std::vector<double>& step_losses() const { return step_losses_; }

  /// Total optimizer steps of the schedule for a training set of size n.
  std::uint64_t schedule_steps(std::size_t n) const;

  EpochMetrics run_epoch(std::span<const Volume> train, std::span<const Volume> val);
  /// Runs remaining epochs up to config.epochs.
  std::vector<EpochMetrics> train(std::span<const Volume> train, std::span<const Volume> val,
                                  const std::function<void(const EpochMetrics&)>& on_epoch = {});
  EvalResult evaluate(std::span<const Volume> volumes) const;

  Checkpoint checkpoint() const;
  static Trainer restore(const Checkpoint& checkpoint);
  void save(const std::filesystem::path& path) const;
  static Trainer load(const std::filesystem::path& path);

 private:
  Trainer(TrainConfig config, model::AdaptModel<float> model);

  // One optimizer step over the given items; returns the batch-mean loss.
  double step(std::span<const morphology::LabeledVolume> items, std::uint64_t total_steps,
              std::array<double, 3>& score_sum, double& lr);

  TrainConfig config_;
  model::AdaptModel<float> model_;
  AdamWState adam_;
  SliceAllocation allocation_;
  Rng rng_;
  std::uint32_t epoch_ = 0;
  std::vector<double> step_losses_;
};

}  // namespace adapt
