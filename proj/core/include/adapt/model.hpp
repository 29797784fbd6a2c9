// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adapt/config.hpp"
#include "adapt/numerics/ops.hpp"
#include "adapt/numerics/tensor.hpp"
#include "adapt/slicer.hpp"
#include "adapt/volumes.hpp"

namespace adapt::model {

using nn::Tensor;

struct LayerCounts {
  std::uint32_t sae = 1;
  std::uint32_t dsae = 1;
  std::uint32_t intra = 2;
  std::uint32_t inter = 2;
  friend bool operator==(const LayerCounts&, const LayerCounts&) = default;
};

struct AdaptConfig {
  std::uint32_t image_extent = 64;
  std::uint32_t patch_size = 8;
  std::uint32_t embed_dim = 32;
  std::uint32_t heads = 4;
  LayerCounts layers;
  std::uint32_t mlp_ratio = 4;
  std::uint32_t n_total = 12;
  std::uint32_t n_min = 1;
  std::uint32_t n_max = 10;
  std::uint32_t classes = 2;

  /// 64^3 volumes, patch 8, D=32, 4 heads, layers 1+1+2+2, 12 slices.
  static AdaptConfig desk();
  /// 224^3 volumes, patch 16, D=256, 4 heads, layers 1+1+2+2, 48 slices.
  static AdaptConfig full();

  std::uint32_t grid() const { return image_extent / patch_size; }
  std::size_t patches() const { return std::size_t{grid()} * grid(); }
  std::size_t tokens() const { return patches() + 1; }
  std::uint32_t head_dim() const { return embed_dim / heads; }

  void validate() const;
  KeyValues to_key_values() const;
  /// Returns false if key is not a model setting.
  bool apply(const std::string& key, const std::string& value);

  friend bool operator==(const AdaptConfig&, const AdaptConfig&) = default;
};

enum class Stage : std::uint8_t { SAE = 0, DSAE = 1, IntraCAE = 2, InterCAE = 3 };
inline constexpr std::array<Stage, 4> kStages{Stage::SAE, Stage::DSAE, Stage::IntraCAE,
                                              Stage::InterCAE};
std::string to_string(Stage stage);

/// Class-token attention of one sequence in the last layer of a stage.
struct SequenceAttention {
  View view;
  std::vector<std::vector<float>> rows;     // [head][key token], post-softmax
  std::vector<std::vector<float>> outputs;  // [head][head_dim], softmax(q_cls K^T / sqrt(d)) V
};

struct StageAttention {
  std::vector<SequenceAttention> sequences;
};

struct AttentionRecord {
  std::array<std::optional<StageAttention>, 4> stages;

  const StageAttention& stage(Stage s) const;
  StageAttention& open(Stage s);
};

/// Per-view score: mean over heads of the Euclidean norm of the class
/// token's attended output in the final inter-dimension layer.
std::array<double, 3> attention_scores(const AttentionRecord& record);

struct ParamGroup {
  std::string name;
  std::uint64_t count;
};

/// Closed-form parameter count, split by component.
std::vector<ParamGroup> param_breakdown(const AdaptConfig& config);
std::uint64_t param_count(const AdaptConfig& config);

template <typename T>
struct ParameterSet {
  std::vector<std::string> names;
  std::vector<Tensor<T>> tensors;

  std::size_t size() const { return tensors.size(); }
  std::size_t element_count() const;
  std::size_t index_of(const std::string& name) const;
  const Tensor<T>& operator[](const std::string& name) const { return tensors[index_of(name)]; }
  Tensor<T>& operator[](const std::string& name) { return tensors[index_of(name)]; }
  /// Shares values, fresh gradient slots.
  ParameterSet aliases() const;
  void zero_grad();
};

template <typename T>
struct EncoderWeights {
  Tensor<T> ln1_gain, ln1_bias;
  Tensor<T> qkv_weight, qkv_bias;
  Tensor<T> proj_weight, proj_bias;
  Tensor<T> ln2_gain, ln2_bias;
  Tensor<T> fc1_weight, fc1_bias;
  Tensor<T> fc2_weight, fc2_bias;
};

/// Pre-norm transformer block on [B, T, D]: x += MSA(LN(x)); x += MLP(LN(x)).
/// When record is set, the class-token (token 0) attention rows and attended
/// outputs of every batch member are appended, tagged with views[b].
template <typename T>
Tensor<T> encoder_layer(const Tensor<T>& x, const EncoderWeights<T>& w, std::size_t heads,
                        StageAttention* record = nullptr, std::span<const View> views = {});

/// Fusion across a group stacked as [n, T, D]: member s becomes
/// [class_s ; sum over all members of their patch tokens].
template <typename T>
Tensor<T> fuse_group(const Tensor<T>& stacked);

template <typename T>
struct FusionMember {
  std::size_t index;
  Tensor<T> sequence;  // [T, D]
};

/// Same as fuse_group for loose members; the patch sum runs in ascending
/// member index regardless of the order members are passed in. Results are
/// returned in input order.
template <typename T>
std::vector<Tensor<T>> fuse_members(const std::vector<FusionMember<T>>& members);

/// Positionwise mean over the members of [n, T, D] -> [1, T, D].
template <typename T>
Tensor<T> reduce_dimension(const Tensor<T>& stacked);

/// Non-overlapping patches flattened row-major: [N, P*P].
std::vector<float> patchify(const Image2D& image, std::size_t patch);

template <typename T>
class AdaptModel {
 public:
  /// Fresh parameters: truncated normal (sd 0.02) weights, zero biases,
  /// unit layer-norm gains.
  AdaptModel(const AdaptConfig& config, std::uint64_t seed);
  /// Adopt existing parameters; names and shapes must match the layout.
  AdaptModel(const AdaptConfig& config, ParameterSet<T> parameters);

  const AdaptConfig& config() const { return config_; }
  ParameterSet<T>& parameters() { return params_; }
  const ParameterSet<T>& parameters() const { return params_; }

  /// Logits of shape (classes,).
  Tensor<T> forward(const SliceStack& stack, AttentionRecord* record = nullptr) const;
  Tensor<T> forward(const SliceStack& stack, const ParameterSet<T>& params,
                    AttentionRecord* record) const;
  /// Inference over a batch, one worker thread per member up to `threads`;
  /// returns (B, classes).
  Tensor<T> forward_batch(std::span<const SliceStack> stacks, std::size_t threads = 1) const;

  Tensor<T> patch_embed(const Image2D& slice) const;
  Tensor<T> guide_embed(const SliceStack& stack) const;
  EncoderWeights<T> encoder(Stage stage, View view, std::size_t layer) const;
  EncoderWeights<T> encoder(const ParameterSet<T>& params, Stage stage, View view,
                            std::size_t layer) const;

  template <typename U>
  AdaptModel<U> cast() const {
    ParameterSet<U> converted;
    converted.names = params_.names;
    for (const auto& t : params_.tensors) converted.tensors.push_back(t.template cast<U>(true));
    return AdaptModel<U>(config_, std::move(converted));
  }

  /// Names and shapes of every parameter tensor, in storage order.
  static std::vector<std::pair<std::string, nn::Shape>> layout(const AdaptConfig& config);

 private:
  void check_stack(const SliceStack& stack) const;
  Tensor<T> run_stage(const ParameterSet<T>& params, Tensor<T> x, Stage stage, View view,
                      std::uint32_t layers, AttentionRecord* record,
                      std::span<const View> views) const;

  AdaptConfig config_;
  ParameterSet<T> params_;
};

extern template class AdaptModel<float>;
extern template class AdaptModel<double>;

}  // namespace adapt::model
