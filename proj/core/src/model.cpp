// SPDX-License-Identifier: Apache-2.0

#include "adapt/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "adapt/error.hpp"
#include "adapt/random.hpp"

namespace adapt::model {

namespace nnops = adapt::nn;

AdaptConfig AdaptConfig::desk() { return AdaptConfig{}; }

AdaptConfig AdaptConfig::full() {
  AdaptConfig c;
  c.image_extent = 224;
  c.patch_size = 16;
  c.embed_dim = 256;
  c.heads = 4;
  c.layers = {1, 1, 2, 2};
  c.mlp_ratio = 4;
  c.n_total = 48;
  std::tie(c.n_min, c.n_max) = SliceAllocation::default_bounds(48);
  return c;
}

void AdaptConfig::validate() const {
  if (patch_size == 0 || image_extent == 0 || image_extent % patch_size != 0) {
    throw ConfigError("image extent " + std::to_string(image_extent) +
                      " is not divisible by patch size " + std::to_string(patch_size));
  }
  if (embed_dim == 0 || heads == 0 || embed_dim % heads != 0) {
    throw ConfigError("embed_dim " + std::to_string(embed_dim) + " is not divisible by heads " +
                      std::to_string(heads));
  }
  if (mlp_ratio == 0 || classes < 2) throw ConfigError("mlp_ratio must be >= 1 and classes >= 2");
  if (layers.intra == 0 && layers.inter == 0 && layers.sae == 0 && layers.dsae == 0) {
    throw ConfigError("model needs at least one encoder layer");
  }
  if (layers.inter == 0) throw ConfigError("inter-dimension stage needs at least one layer");
  if (n_min == 0) throw ConfigError("n_min must be >= 1 so every view contributes a slice");
  SliceAllocation::check_bounds(n_total, n_min, n_max);
}

KeyValues AdaptConfig::to_key_values() const {
  auto s = [](auto v) { return std::to_string(v); };
  return {{"image_extent", s(image_extent)}, {"patch_size", s(patch_size)},
          {"embed_dim", s(embed_dim)},       {"heads", s(heads)},
          {"layers_sae", s(layers.sae)},     {"layers_dsae", s(layers.dsae)},
          {"layers_intra", s(layers.intra)}, {"layers_inter", s(layers.inter)},
          {"mlp_ratio", s(mlp_ratio)},       {"n_total", s(n_total)},
          {"n_min", s(n_min)},               {"n_max", s(n_max)},
          {"classes", s(classes)}};
}

bool AdaptConfig::apply(const std::string& key, const std::string& value) {
  auto u32 = [&](std::uint32_t& field) {
    const auto v = parse_uint(key, value);
    if (v > UINT32_MAX) throw ConfigError(key + ": value too large");
    field = static_cast<std::uint32_t>(v);
    return true;
  };
  if (key == "image_extent") return u32(image_extent);
  if (key == "patch_size") return u32(patch_size);
  if (key == "embed_dim") return u32(embed_dim);
  if (key == "heads") return u32(heads);
  if (key == "layers_sae") return u32(layers.sae);
  if (key == "layers_dsae") return u32(layers.dsae);
  if (key == "layers_intra") return u32(layers.intra);
  if (key == "layers_inter") return u32(layers.inter);
  if (key == "mlp_ratio") return u32(mlp_ratio);
  if (key == "n_total") return u32(n_total);
  if (key == "n_min") return u32(n_min);
  if (key == "n_max") return u32(n_max);
  if (key == "classes") return u32(classes);
  return false;
}

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::SAE: return "sae";
    case Stage::DSAE: return "dsae";
    case Stage::IntraCAE: return "intra";
    case Stage::InterCAE: return "inter";
  }
  return "?";
}

const StageAttention& AttentionRecord::stage(Stage s) const {
  const auto& slot = stages[static_cast<std::size_t>(s)];
  if (!slot) throw InputError("attention record has no entry for stage " + to_string(s));
  return *slot;
}

StageAttention& AttentionRecord::open(Stage s) {
  auto& slot = stages[static_cast<std::size_t>(s)];
  if (!slot) slot.emplace();
  return *slot;
}

std::array<double, 3> attention_scores(const AttentionRecord& record) {
  const auto& inter = record.stage(Stage::InterCAE);
  if (inter.sequences.size() != 3) {
    throw InputError("inter-dimension record must hold exactly three sequences");
  }
  std::array<double, 3> scores{};
  for (const auto& seq : inter.sequences) {
    double total = 0.0;
    for (const auto& out : seq.outputs) {
      double sq = 0.0;
      for (float v : out) sq += static_cast<double>(v) * v;
      total += std::sqrt(sq);
    }
    scores[static_cast<std::size_t>(seq.view)] = total / static_cast<double>(seq.outputs.size());
  }
  return scores;
}

std::vector<ParamGroup> param_breakdown(const AdaptConfig& c) {
  const std::uint64_t d = c.embed_dim, p2 = std::uint64_t{c.patch_size} * c.patch_size;
  const std::uint64_t n = c.patches(), r = c.mlp_ratio, s = c.n_total;
  // ln1 + ln2: 4D; qkv: 3D^2 + 3D; proj: D^2 + D; fc1: rD^2 + rD; fc2: rD^2 + D.
  const std::uint64_t per_layer = (4 + 2 * r) * d * d + (9 + r) * d;
  return {
      {"patch_embed", p2 * d + d},
      {"guide_embed", s * p2 * d + d},
      {"pos_embed", s * (n + 1) * d},
      {"class_tokens", 3 * d},
      {"sae", c.layers.sae * per_layer},
      {"dsae", 3ull * c.layers.dsae * per_layer},
      {"intra", 3ull * c.layers.intra * per_layer},
      {"inter", 3ull * c.layers.inter * per_layer},
      {"norm", 2 * 3 * d},
      {"head", 3 * d * c.classes + c.classes},
  };
}

std::uint64_t param_count(const AdaptConfig& config) {
  std::uint64_t total = 0;
  for (const auto& g : param_breakdown(config)) total += g.count;
  return total;
}

template <typename T>
std::size_t ParameterSet<T>::element_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.numel();
  return n;
}

template <typename T>
std::size_t ParameterSet<T>::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InputError("no parameter named '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

template <typename T>
ParameterSet<T> ParameterSet<T>::aliases() const {
  ParameterSet out;
  out.names = names;
  for (const auto& t : tensors) out.tensors.push_back(t.alias());
  return out;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& t : tensors) t.zero_grad();
}

template <typename T>
Tensor<T> encoder_layer(const Tensor<T>& x, const EncoderWeights<T>& w, std::size_t heads,
                        StageAttention* record, std::span<const View> views) {
  if (x.rank() != 3) throw DimensionError("encoder layer expects [B,T,D], got " + nn::to_string(x.shape()));
  const std::size_t b = x.dim(0), t = x.dim(1), d = x.dim(2);
  if (heads == 0 || d % heads != 0) throw DimensionError("embedding dim not divisible by heads");
  const std::size_t dh = d / heads;

  auto split_heads = [&](const Tensor<T>& m) {
    return nnops::transpose(nnops::reshape(m, {b, t, heads, dh}), 1, 2);  // [B,H,T,dh]
  };
  const auto h = nnops::layer_norm(x, w.ln1_gain, w.ln1_bias);
  const auto qkv = nnops::linear(h, w.qkv_weight, w.qkv_bias);
  const auto q = split_heads(nnops::slice(qkv, 2, 0, d));
  const auto k = split_heads(nnops::slice(qkv, 2, d, 2 * d));
  const auto v = split_heads(nnops::slice(qkv, 2, 2 * d, 3 * d));
  const auto scores = nnops::scale(nnops::matmul(q, nnops::transpose(k, 2, 3)),
                                   static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh))));
  const auto attn = nnops::softmax(scores, 3);
  const auto ctx = nnops::matmul(attn, v);  // [B,H,T,dh]

  if (record != nullptr) {
    const auto a = attn.data();
    const auto c = ctx.data();
    for (std::size_t bi = 0; bi < b; ++bi) {
      SequenceAttention seq;
      seq.view = bi < views.size() ? views[bi] : View::Sagittal;
      for (std::size_t hi = 0; hi < heads; ++hi) {
        const std::size_t bh = bi * heads + hi;
        const auto* row = a.data() + bh * t * t;
        const auto* out = c.data() + bh * t * dh;
        seq.rows.emplace_back(row, row + t);
        seq.outputs.emplace_back(out, out + dh);
      }
      record->sequences.push_back(std::move(seq));
    }
  }

  const auto merged = nnops::reshape(nnops::transpose(ctx, 1, 2), {b, t, d});
  const auto attended = nnops::add(x, nnops::linear(merged, w.proj_weight, w.proj_bias));
  const auto h2 = nnops::layer_norm(attended, w.ln2_gain, w.ln2_bias);
  const auto mlp = nnops::linear(nnops::gelu(nnops::linear(h2, w.fc1_weight, w.fc1_bias)),
                                 w.fc2_weight, w.fc2_bias);
  return nnops::add(attended, mlp);
}

template <typename T>
Tensor<T> fuse_group(const Tensor<T>& stacked) {
  if (stacked.rank() != 3 || stacked.dim(1) < 2) {
    throw DimensionError("fusion expects [n, 1+N, D], got " + nn::to_string(stacked.shape()));
  }
  const std::size_t n = stacked.dim(0), t = stacked.dim(1);
  const auto cls = nnops::slice(stacked, 1, 0, 1);
  const auto patch_sum = nnops::sum_axis(nnops::slice(stacked, 1, 1, t), 0, true);
  return nnops::concat<T>({cls, nnops::repeat(patch_sum, 0, n)}, 1);
}

template <typename T>
std::vector<Tensor<T>> fuse_members(const std::vector<FusionMember<T>>& members) {
  if (members.empty()) throw DimensionError("fusion of an empty group");
  std::vector<std::size_t> order(members.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return members[a].index < members[b].index; });
  const auto& shape = members.front().sequence.shape();
  std::vector<Tensor<T>> sorted;
  for (auto i : order) {
    const auto& seq = members[i].sequence;
    if (seq.shape() != shape || seq.rank() != 2) {
      throw DimensionError("fusion members must share one [T, D] shape, got " +
                           nn::to_string(shape) + " and " + nn::to_string(seq.shape()));
    }
    sorted.push_back(nnops::reshape(seq, {1, shape[0], shape[1]}));
  }
  const auto fused = fuse_group(nnops::concat(sorted, 0));
  std::vector<Tensor<T>> out(members.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    out[order[pos]] = nnops::reshape(nnops::slice(fused, 0, pos, pos + 1), shape);
  }
  return out;
}

template <typename T>
Tensor<T> reduce_dimension(const Tensor<T>& stacked) {
  if (stacked.rank() != 3 || stacked.dim(0) == 0) {
    throw DimensionError("reduce_dimension expects [n, T, D], got " + nn::to_string(stacked.shape()));
  }
  return nnops::mean_axis(stacked, 0, true);
}

std::vector<float> patchify(const Image2D& image, std::size_t patch) {
  if (patch == 0 || image.rows != image.cols || image.rows % patch != 0) {
    throw DimensionError("slice " + std::to_string(image.rows) + "x" + std::to_string(image.cols) +
                         " is not divisible into " + std::to_string(patch) + "x" +
                         std::to_string(patch) + " patches");
  }
  const std::size_t g = image.rows / patch;
  std::vector<float> out(image.pixels.size());
  std::size_t n = 0;
  for (std::size_t gr = 0; gr < g; ++gr)
    for (std::size_t gc = 0; gc < g; ++gc)
      for (std::size_t py = 0; py < patch; ++py)
        for (std::size_t px = 0; px < patch; ++px)
          out[n++] = image.at(gr * patch + py, gc * patch + px);
  return out;
}

namespace {

std::string layer_prefix(Stage stage, View view, std::size_t layer) {
  if (stage == Stage::SAE) return "sae." + std::to_string(layer);
  return to_string(stage) + "." + to_string(view) + "." + std::to_string(layer);
}

}  // namespace

template <typename T>
std::vector<std::pair<std::string, nn::Shape>> AdaptModel<T>::layout(const AdaptConfig& c) {
  c.validate();
  const std::size_t d = c.embed_dim, p2 = std::size_t{c.patch_size} * c.patch_size;
  const std::size_t hidden = std::size_t{c.mlp_ratio} * d;
  std::vector<std::pair<std::string, nn::Shape>> out{
      {"patch.weight", {p2, d}},
      {"patch.bias", {d}},
      {"guide.weight", {c.n_total * p2, d}},
      {"guide.bias", {d}},
      {"pos_embed", {c.n_total * c.tokens(), d}},
      {"class_tokens", {3, d}},
  };
  auto add_layer = [&](const std::string& prefix) {
    out.push_back({prefix + ".ln1.weight", {d}});
    out.push_back({prefix + ".ln1.bias", {d}});
    out.push_back({prefix + ".attn.qkv.weight", {d, 3 * d}});
    out.push_back({prefix + ".attn.qkv.bias", {3 * d}});
    out.push_back({prefix + ".attn.proj.weight", {d, d}});
    out.push_back({prefix + ".attn.proj.bias", {d}});
    out.push_back({prefix + ".ln2.weight", {d}});
    out.push_back({prefix + ".ln2.bias", {d}});
    out.push_back({prefix + ".mlp.fc1.weight", {d, hidden}});
    out.push_back({prefix + ".mlp.fc1.bias", {hidden}});
    out.push_back({prefix + ".mlp.fc2.weight", {hidden, d}});
    out.push_back({prefix + ".mlp.fc2.bias", {d}});
  };
  for (std::size_t l = 0; l < c.layers.sae; ++l) add_layer(layer_prefix(Stage::SAE, View::Sagittal, l));
  const std::array<std::pair<Stage, std::uint32_t>, 3> staged{
      {{Stage::DSAE, c.layers.dsae}, {Stage::IntraCAE, c.layers.intra}, {Stage::InterCAE, c.layers.inter}}};
  for (const auto& [stage, count] : staged)
    for (View view : kViews)
      for (std::size_t l = 0; l < count; ++l) add_layer(layer_prefix(stage, view, l));
  out.push_back({"norm.weight", {3 * d}});
  out.push_back({"norm.bias", {3 * d}});
  out.push_back({"head.weight", {3 * d, c.classes}});
  out.push_back({"head.bias", {c.classes}});
  return out;
}

template <typename T>
AdaptModel<T>::AdaptModel(const AdaptConfig& config, std::uint64_t seed) : config_(config) {
  Rng rng(seed);
  for (auto& [name, shape] : layout(config_)) {
    const auto n = nn::element_count(shape);
    std::vector<T> values(n, T{});
    const bool is_bias = name.ends_with(".bias");
    const bool is_norm_gain = name.ends_with("ln1.weight") || name.ends_with("ln2.weight") ||
                              name == "norm.weight";
    if (is_norm_gain) {
      std::fill(values.begin(), values.end(), T{1});
    } else if (!is_bias) {
      for (auto& v : values) v = static_cast<T>(truncated_normal(rng, 0.02));
    }
    params_.names.push_back(name);
    params_.tensors.emplace_back(shape, std::move(values), true);
  }
}

template <typename T>
AdaptModel<T>::AdaptModel(const AdaptConfig& config, ParameterSet<T> parameters)
    : config_(config), params_(std::move(parameters)) {
  const auto expected = layout(config_);
  if (expected.size() != params_.size()) {
    throw FormatError("parameter count mismatch: expected " + std::to_string(expected.size()) +
                      " tensors, got " + std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].first != params_.names[i] || expected[i].second != params_.tensors[i].shape()) {
      throw FormatError("parameter '" + params_.names[i] + "' " +
                        nn::to_string(params_.tensors[i].shape()) + " does not match expected '" +
                        expected[i].first + "' " + nn::to_string(expected[i].second));
    }
  }
}

template <typename T>
EncoderWeights<T> AdaptModel<T>::encoder(Stage stage, View view, std::size_t layer) const {
  return encoder(params_, stage, view, layer);
}

template <typename T>
EncoderWeights<T> AdaptModel<T>::encoder(const ParameterSet<T>& p, Stage stage, View view,
                                         std::size_t layer) const {
  const auto prefix = layer_prefix(stage, view, layer);
  // Layer tensors are stored contiguously in layout order.
  const std::size_t i = p.index_of(prefix + ".ln1.weight");
  const auto& t = p.tensors;
  return {t[i],     t[i + 1], t[i + 2], t[i + 3], t[i + 4],  t[i + 5],
          t[i + 6], t[i + 7], t[i + 8], t[i + 9], t[i + 10], t[i + 11]};
}

template <typename T>
void AdaptModel<T>::check_stack(const SliceStack& stack) const {
  if (stack.size() != config_.n_total || stack.allocation.total != config_.n_total) {
    throw DimensionError("stack holds " + std::to_string(stack.size()) + " slices, model expects " +
                         std::to_string(config_.n_total));
  }
  for (auto c : stack.allocation.counts) {
    if (c == 0) throw DimensionError("every view needs at least one slice");
  }
  for (const auto& s : stack.slices) {
    if (s.rows != config_.image_extent || s.cols != config_.image_extent) {
      throw DimensionError("slice extent " + std::to_string(s.rows) + "x" + std::to_string(s.cols) +
                           " does not match model extent " + std::to_string(config_.image_extent));
    }
  }
}

template <typename T>
Tensor<T> AdaptModel<T>::patch_embed(const Image2D& slice) const {
  const auto raw = patchify(slice, config_.patch_size);
  const std::size_t p2 = std::size_t{config_.patch_size} * config_.patch_size;
  Tensor<T> patches({raw.size() / p2, p2}, std::vector<T>(raw.begin(), raw.end()));
  return nnops::linear(patches, params_["patch.weight"], params_["patch.bias"]);
}

namespace {

// [N, S*P*P]: for each patch, every slice's pixels as consecutive channels.
template <typename T>
std::vector<T> guide_input(const SliceStack& stack, std::size_t patch) {
  const std::size_t p2 = patch * patch;
  const std::size_t s = stack.size();
  std::vector<T> out;
  std::size_t n = 0;
  for (std::size_t c = 0; c < s; ++c) {
    const auto flat = patchify(stack.slices[c], patch);
    const std::size_t count = flat.size() / p2;
    if (out.empty()) {
      n = count;
      out.resize(n * s * p2);
    }
    for (std::size_t pi = 0; pi < n; ++pi)
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pi * p2), p2,
                  out.begin() + static_cast<std::ptrdiff_t>((pi * s + c) * p2));
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> AdaptModel<T>::guide_embed(const SliceStack& stack) const {
  if (stack.size() != config_.n_total) {
    throw DimensionError("guide embedding expects " + std::to_string(config_.n_total) +
                         " slices, got " + std::to_string(stack.size()));
  }
  const std::size_t p2 = std::size_t{config_.patch_size} * config_.patch_size;
  Tensor<T> input({config_.patches(), stack.size() * p2}, guide_input<T>(stack, config_.patch_size));
  return nnops::linear(input, params_["guide.weight"], params_["guide.bias"]);
}

template <typename T>
Tensor<T> AdaptModel<T>::run_stage(const ParameterSet<T>& params, Tensor<T> x, Stage stage,
                                   View view, std::uint32_t layers, AttentionRecord* record,
                                   std::span<const View> views) const {
  for (std::uint32_t l = 0; l < layers; ++l) {
    StageAttention* sink = (record != nullptr && l + 1 == layers) ? &record->open(stage) : nullptr;
    x = encoder_layer(x, encoder(params, stage, view, l), config_.heads, sink, views);
  }
  return x;
}

template <typename T>
Tensor<T> AdaptModel<T>::forward(const SliceStack& stack, AttentionRecord* record) const {
  return forward(stack, params_, record);
}

template <typename T>
Tensor<T> AdaptModel<T>::forward(const SliceStack& stack, const ParameterSet<T>& p,
                                 AttentionRecord* record) const {
  check_stack(stack);
  const std::size_t s = stack.size(), n = config_.patches(), t = config_.tokens();
  const std::size_t d = config_.embed_dim, p2 = std::size_t{config_.patch_size} * config_.patch_size;

  std::vector<T> raw;
  raw.reserve(s * n * p2);
  for (const auto& slice : stack.slices) {
    const auto flat = patchify(slice, config_.patch_size);
    raw.insert(raw.end(), flat.begin(), flat.end());
  }
  const Tensor<T> patches({s, n, p2}, std::move(raw));
  const Tensor<T> guide_in({n, s * p2}, guide_input<T>(stack, config_.patch_size));

  // x_p(i) + x_guide for every slice i.
  auto tokens = nnops::linear(patches, p["patch.weight"], p["patch.bias"]);
  tokens = nnops::add(tokens, nnops::linear(guide_in, p["guide.weight"], p["guide.bias"]));

  // Each slice starts from the class token of its view.
  std::vector<Tensor<T>> cls_parts;
  std::vector<std::size_t> counts;
  for (View view : kViews) {
    const auto v = static_cast<std::size_t>(view);
    const auto count = stack.allocation.counts[v];
    counts.push_back(count);
    const auto row = nnops::reshape(nnops::slice(p["class_tokens"], 0, v, v + 1), {1, 1, d});
    cls_parts.push_back(nnops::repeat(row, 0, count));
  }
  auto seq = nnops::concat<T>({nnops::concat(cls_parts, 0), tokens}, 1);
  seq = nnops::add(seq, nnops::reshape(p["pos_embed"], {s, t, d}));

  std::vector<View> slice_views;
  for (const auto& info : stack.info) slice_views.push_back(info.view);

  seq = run_stage(p, seq, Stage::SAE, View::Sagittal, config_.layers.sae, record, slice_views);

  auto groups = nnops::split(seq, 0, counts);
  std::vector<Tensor<T>> per_view;
  for (View view : kViews) {
    auto& g = groups[static_cast<std::size_t>(view)];
    const std::vector<View> views(g.dim(0), view);
    g = run_stage(p, g, Stage::DSAE, view, config_.layers.dsae, record, views);
  }
  for (View view : kViews) {
    auto& g = groups[static_cast<std::size_t>(view)];
    const std::vector<View> views(g.dim(0), view);
    g = run_stage(p, fuse_group(g), Stage::IntraCAE, view, config_.layers.intra, record, views);
    per_view.push_back(reduce_dimension(g));
  }

  const auto fused = nnops::split(fuse_group(nnops::concat(per_view, 0)), 0, {1, 1, 1});
  std::vector<Tensor<T>> class_states;
  for (View view : kViews) {
    const std::array<View, 1> views{view};
    const auto out = run_stage(p, fused[static_cast<std::size_t>(view)], Stage::InterCAE, view,
                               config_.layers.inter, record, views);
    class_states.push_back(nnops::reshape(nnops::slice(out, 1, 0, 1), {1, d}));
  }
  const auto features =
      nnops::layer_norm(nnops::concat(class_states, 1), p["norm.weight"], p["norm.bias"]);
  const auto logits = nnops::linear(features, p["head.weight"], p["head.bias"]);
  return nnops::reshape(logits, {config_.classes});
}

template <typename T>
Tensor<T> AdaptModel<T>::forward_batch(std::span<const SliceStack> stacks,
                                       std::size_t threads) const {
  const std::size_t b = stacks.size();
  const std::size_t c = config_.classes;
  std::vector<T> out(b * c);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < b; i += stride) {
      const auto logits = forward(stacks[i], params_, nullptr);
      std::copy(logits.data().begin(), logits.data().end(), out.begin() + static_cast<std::ptrdiff_t>(i * c));
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(b, 1));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w, threads);
  }
  return Tensor<T>({b, c}, std::move(out));
}

#define ADAPT_INSTANTIATE(T)                                                                   \
  template struct ParameterSet<T>;                                                             \
  template Tensor<T> encoder_layer(const Tensor<T>&, const EncoderWeights<T>&, std::size_t,    \
                                   StageAttention*, std::span<const View>);                    \
  template Tensor<T> fuse_group(const Tensor<T>&);                                             \
  template std::vector<Tensor<T>> fuse_members(const std::vector<FusionMember<T>>&);           \
  template Tensor<T> reduce_dimension(const Tensor<T>&);                                       \
  template class AdaptModel<T>;

ADAPT_INSTANTIATE(float)
ADAPT_INSTANTIATE(double)

#undef ADAPT_INSTANTIATE

}  // namespace adapt::model
