// SPDX-License-Identifier: Apache-2.0

#include "adapt/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "adapt/allocation.hpp"
#include "adapt/error.hpp"
#include "adapt/numerics/ops.hpp"

namespace adapt {

void TrainConfig::validate() const {
  model.validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (!(realloc_probability >= 0.0 && realloc_probability <= 1.0)) {
    throw ConfigError("reallocation probability must lie in [0, 1]");
  }
  if (!(augment_probability >= 0.0 && augment_probability <= 1.0)) {
    throw ConfigError("augment probability must lie in [0, 1]");
  }
  if (se_radius < 0) throw ConfigError("se_radius must be >= 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

KeyValues TrainConfig::to_key_values() const {
  KeyValues kv = model.to_key_values();
  kv.insert(kv.end(), {{"learning_rate", format_double(learning_rate)},
                       {"schedule_steps", std::to_string(schedule_steps)},
                       {"batch_size", std::to_string(batch_size)},
                       {"epochs", std::to_string(epochs)},
                       {"realloc_probability", format_double(realloc_probability)},
                       {"seed", std::to_string(seed)},
                       {"augment", augment ? "true" : "false"},
                       {"augment_probability", format_double(augment_probability)},
                       {"se_radius", std::to_string(se_radius)},
                       {"weight_decay", format_double(weight_decay)}});
  return kv;
}

void TrainConfig::apply(const std::string& key, const std::string& value) {
  if (model.apply(key, value)) return;
  if (key == "learning_rate") {
    learning_rate = parse_double(key, value);
  } else if (key == "schedule_steps") {
    schedule_steps = parse_uint(key, value);
  } else if (key == "batch_size") {
    batch_size = static_cast<std::uint32_t>(parse_uint(key, value));
  } else if (key == "epochs") {
    epochs = static_cast<std::uint32_t>(parse_uint(key, value));
  } else if (key == "realloc_probability") {
    realloc_probability = parse_double(key, value);
  } else if (key == "seed") {
    seed = parse_uint(key, value);
  } else if (key == "augment") {
    augment = parse_bool(key, value);
  } else if (key == "augment_probability") {
    augment_probability = parse_double(key, value);
  } else if (key == "se_radius") {
    se_radius = static_cast<std::int32_t>(parse_int(key, value));
  } else if (key == "weight_decay") {
    weight_decay = parse_double(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

TrainConfig TrainConfig::from_key_values(const KeyValues& entries, TrainConfig base) {
  for (const auto& [k, v] : entries) base.apply(k, v);
  return base;
}

std::string format_metrics_line(const EpochMetrics& m) {
  std::ostringstream os;
  os << m.epoch << '\t' << format_double(m.train_loss) << '\t' << format_double(m.val_accuracy)
     << '\t' << m.allocation.counts[0] << '\t' << m.allocation.counts[1] << '\t'
     << m.allocation.counts[2] << '\t' << format_double(m.lr);
  return os.str();
}

Volume prepare_volume(const Volume& volume, std::uint32_t extent) {
  const Extents target{extent, extent, extent};
  if (volume.extents() == target) return normalize_zmuv(volume);
  return normalize_zmuv(resize_trilinear(volume, target));
}

namespace {

bool binary_label(const std::optional<Label>& label, int& out) {
  if (!label || *label == Label::MCI) return false;
  out = static_cast<int>(*label);
  return true;
}

int argmax(std::span<const float> logits) {
  int best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

}  // namespace

EvalResult evaluate(const model::AdaptModel<float>& model, std::span<const Volume> volumes,
                    const SliceAllocation& allocation) {
  if (volumes.empty()) throw InputError("evaluation split is empty");
  EvalResult r;
  for (const auto& v : volumes) {
    int truth = 0;
    if (!binary_label(v.label(), truth)) {
      ++r.skipped;
      continue;
    }
    const auto stack = extract_slices(prepare_volume(v, model.config().image_extent), allocation);
    const auto logits = model.forward(stack);
    const int pred = argmax(logits.data());
    ++r.total;
    if (pred == truth) ++r.correct;
    if (truth < 2 && pred < 2) {
      ++r.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)];
    }
  }
  return r;
}

namespace {

SliceAllocation initial_allocation(const model::AdaptConfig& c) {
  return SliceAllocation::uniform(c.n_total, c.n_min, c.n_max);
}

AdamWState fresh_moments(const model::ParameterSet<float>& p) {
  std::vector<std::size_t> sizes;
  for (const auto& t : p.tensors) sizes.push_back(t.numel());
  return AdamWState::zeros_like(sizes);
}

}  // namespace

Trainer::Trainer(TrainConfig config)
    : Trainer(config, model::AdaptModel<float>(config.model, config.seed)) {
  // Distinct stream from the parameter initialization.
  rng_ = Rng(config_.seed ^ 0x9e3779b97f4a7c15ull);
}

Trainer::Trainer(TrainConfig config, model::AdaptModel<float> model)
    : config_(std::move(config)),
      model_(std::move(model)),
      adam_(fresh_moments(model_.parameters())),
      allocation_(initial_allocation(config_.model)) {
  config_.validate();
}

std::uint64_t Trainer::schedule_steps(std::size_t n) const {
  if (config_.schedule_steps > 0) return config_.schedule_steps;
  const std::uint64_t per_epoch = (n + config_.batch_size - 1) / config_.batch_size;
  return per_epoch * config_.epochs;
}

double Trainer::step(std::span<const morphology::LabeledVolume> items, std::uint64_t total_steps,
                     std::array<double, 3>& score_sum, double& lr) {
  auto& params = model_.parameters();
  std::vector<std::vector<float>> grads;
  for (const auto& t : params.tensors) grads.emplace_back(t.numel(), 0.0f);

  double loss_sum = 0.0;
  const auto scale = 1.0f / static_cast<float>(items.size());
  for (const auto& item : items) {
    const auto stack =
        extract_slices(prepare_volume(item.volume, config_.model.image_extent), allocation_);
    const auto local = params.aliases();
    nn::Tape<float> tape;
    model::AttentionRecord record;
    float loss_value = 0.0f;
    {
      auto scope = tape.activate();
      const auto logits = model_.forward(stack, local, &record);
      const int label = static_cast<int>(item.label);
      const auto loss = nn::cross_entropy(nn::reshape(logits, {1, logits.numel()}),
                                          std::span<const int>(&label, 1));
      loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        throw NumericError("training loss diverged at step " + std::to_string(adam_.step + 1));
      }
      tape.backward(nn::scale(loss, scale));
    }
    loss_sum += loss_value;
    const auto s = model::attention_scores(record);
    for (std::size_t v = 0; v < 3; ++v) score_sum[v] += s[v];
    for (std::size_t i = 0; i < local.size(); ++i) {
      const auto g = local.tensors[i].grad();
      if (g.empty()) continue;
      auto& acc = grads[i];
      for (std::size_t j = 0; j < g.size(); ++j) acc[j] += g[j];
    }
  }

  lr = cosine_lr(adam_.step, total_steps, config_.learning_rate);
  std::vector<std::span<float>> p;
  std::vector<std::span<const float>> g;
  for (std::size_t i = 0; i < params.size(); ++i) {
    p.push_back(params.tensors[i].mutable_data());
    g.push_back(grads[i]);
  }
  AdamWOptions options;
  options.weight_decay = config_.weight_decay;
  adamw_step(p, g, adam_, lr, options);
  return loss_sum / static_cast<double>(items.size());
}

EpochMetrics Trainer::run_epoch(std::span<const Volume> train, std::span<const Volume> val) {
  if (train.empty()) throw InputError("training split is empty");
  if (val.empty()) throw InputError("validation split is empty");
  const auto total_steps = schedule_steps(train.size());

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(std::span<std::size_t>(order), rng_);

  morphology::AugmentOptions aug{config_.se_radius, config_.augment_probability};
  EpochMetrics m;
  m.epoch = epoch_ + 1;
  m.allocation = allocation_;
  std::array<double, 3> score_sum{};
  std::size_t scored = 0;
  double loss_sum = 0.0;
  std::size_t steps = 0;

  for (std::size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
    const auto end = std::min<std::size_t>(order.size(), begin + config_.batch_size);
    std::vector<morphology::LabeledVolume> items;
    for (std::size_t k = begin; k < end; ++k) {
      const auto& v = train[order[k]];
      if (!v.label()) throw InputError("training volume without a label");
      if (config_.augment) {
        for (auto& out : morphology::augment_sample(v, rng_, aug)) items.push_back(std::move(out));
      } else if (*v.label() != Label::MCI) {
        items.push_back({v, *v.label()});
      }
    }
    if (items.empty()) continue;
    const double loss = step(items, total_steps, score_sum, m.lr);
    scored += items.size();
    step_losses_.push_back(loss);
    loss_sum += loss;
    ++steps;
  }
  if (steps == 0) throw InputError("no binary-labelled training samples");

  m.train_loss = loss_sum / static_cast<double>(steps);
  for (std::size_t v = 0; v < 3; ++v) m.scores[v] = score_sum[v] / static_cast<double>(scored);
  m.val_accuracy = evaluate(val).accuracy();
  allocation_ = update_allocation(m.scores, allocation_, config_.realloc_probability, rng_);
  m.next_allocation = allocation_;
  ++epoch_;
  return m;
}

std::vector<EpochMetrics> Trainer::train(std::span<const Volume> train, std::span<const Volume> val,
                                         const std::function<void(const EpochMetrics&)>& on_epoch) {
  std::vector<EpochMetrics> out;
  while (epoch_ < config_.epochs) {
    out.push_back(run_epoch(train, val));
    if (on_epoch) on_epoch(out.back());
  }
  return out;
}

EvalResult Trainer::evaluate(std::span<const Volume> volumes) const {
  return adapt::evaluate(model_, volumes, allocation_);
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  auto kv = config_.to_key_values();
  kv.emplace_back("epoch", std::to_string(epoch_));
  kv.emplace_back("adam_step", std::to_string(adam_.step));
  c.config_text = format_key_values(kv);
  const auto& p = model_.parameters();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto d = p.tensors[i].data();
    c.tensors.push_back({p.names[i], p.tensors[i].shape(), {d.begin(), d.end()}});
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    c.moments.push_back({"m." + p.names[i], p.tensors[i].shape(), adam_.m[i]});
    c.moments.push_back({"v." + p.names[i], p.tensors[i].shape(), adam_.v[i]});
  }
  c.allocation = allocation_.counts;
  c.rng_state = serialize_rng(rng_);
  return c;
}

Trainer Trainer::restore(const Checkpoint& c) {
  TrainConfig config;
  std::uint32_t epoch = 0;
  std::uint64_t adam_step = 0;
  for (const auto& [k, v] : parse_key_values(c.config_text)) {
    if (k == "epoch") {
      epoch = static_cast<std::uint32_t>(parse_uint(k, v));
    } else if (k == "adam_step") {
      adam_step = parse_uint(k, v);
    } else {
      config.apply(k, v);
    }
  }
  config.validate();

  model::ParameterSet<float> params;
  for (const auto& t : c.tensors) {
    params.names.push_back(t.name);
    params.tensors.emplace_back(t.shape, t.values, true);
  }
  Trainer trainer(config, model::AdaptModel<float>(config.model, std::move(params)));
  const auto& p = trainer.model_.parameters();
  if (c.moments.size() != 2 * p.size()) {
    throw FormatError("checkpoint holds " + std::to_string(c.moments.size()) +
                      " moment tensors, expected " + std::to_string(2 * p.size()));
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& m = c.moments[2 * i];
    const auto& v = c.moments[2 * i + 1];
    if (m.name != "m." + p.names[i] || v.name != "v." + p.names[i] ||
        m.values.size() != p.tensors[i].numel() || v.values.size() != p.tensors[i].numel()) {
      throw FormatError("moment table does not match parameter '" + p.names[i] + "'");
    }
    trainer.adam_.m[i] = m.values;
    trainer.adam_.v[i] = v.values;
  }
  trainer.adam_.step = adam_step;
  trainer.epoch_ = epoch;
  SliceAllocation alloc = trainer.allocation_;
  alloc.counts = c.allocation;
  try {
    alloc.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint allocation invalid: ") + e.what());
  }
  trainer.allocation_ = alloc;
  trainer.rng_ = deserialize_rng(c.rng_state);
  return trainer;
}

void Trainer::save(const std::filesystem::path& path) const { save_checkpoint(checkpoint(), path); }

Trainer Trainer::load(const std::filesystem::path& path) { return restore(load_checkpoint(path)); }

}  // namespace adapt
