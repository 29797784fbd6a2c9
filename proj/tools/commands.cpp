// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "adapt/error.hpp"
#include "adapt/io.hpp"
#include "adapt/morphology.hpp"
#include "adapt/visualize.hpp"

namespace adapt::cli {

namespace fs = std::filesystem;

namespace {

// Directory built under a sibling temp path and renamed into place on commit.
class StagedDir {
 public:
  explicit StagedDir(fs::path target) : target_(std::move(target)) {
    if (fs::exists(target_) && !(fs::is_directory(target_) && fs::is_empty(target_))) {
      throw InputError("output '" + target_.string() + "' already exists and is not an empty directory");
    }
    staging_ = target_;
    staging_ += ".partial";
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;

  const fs::path& path() const { return staging_; }
  void commit() {
    if (fs::exists(target_)) fs::remove(target_);
    fs::rename(staging_, target_);
    committed_ = true;
  }

 private:
  fs::path target_, staging_;
  bool committed_ = false;
};

std::string padded(std::size_t i, int width = 4) {
  std::string s = std::to_string(i);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

std::string lower_label(Label l) {
  std::string s = to_string(l);
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::string stem_of(const std::string& filename) { return fs::path(filename).stem().string(); }

}  // namespace

void gen_phantoms(const GenOptions& o) {
  if (o.count == 0) throw ConfigError("--count must be >= 1");
  const auto spec = PhantomSpec::for_size(o.size, o.noise, o.seed);
  spec.validate();
  StagedDir dir(o.out);
  Rng rng(o.seed);
  std::array<std::uint32_t, 3> per_class{};
  for (std::uint32_t c = 0; c < 3; ++c) per_class[c] = o.count / 3 + (c < o.count % 3 ? 1 : 0);
  std::array<std::uint32_t, 3> seen{};
  std::vector<DatasetEntry> entries;
  for (std::uint32_t i = 0; i < o.count; ++i) {
    const auto c = i % 3;
    const auto label = static_cast<Label>(c);
    const auto n = per_class[c];
    const auto n_train = static_cast<std::uint32_t>(std::lround(0.70 * n));
    const auto n_val = static_cast<std::uint32_t>(std::lround(0.15 * n));
    const auto k = seen[c]++;
    const Split split = k < n_train ? Split::Train : (k < n_train + n_val ? Split::Val : Split::Test);
    const auto name = "phantom_" + padded(i) + "_" + lower_label(label) + ".vol";
    save_volume(generate_phantom(spec, label, rng), dir.path() / name);
    entries.push_back({name, split});
  }
  io::write_text_atomic(dir.path() / kManifestName, format_manifest(entries));
  dir.commit();
  std::printf("wrote %u volumes to %s\n", o.count, o.out.string().c_str());
}

void augment(const AugmentCliOptions& o) {
  if (o.se_radius < 0) throw ConfigError("--se-radius must be >= 0");
  if (!(o.probability >= 0.0 && o.probability <= 1.0)) throw ConfigError("--probability must lie in [0, 1]");
  const auto entries = read_manifest(o.in);
  const auto se = morphology::StructuringElement::flat_square(o.se_radius);
  StagedDir dir(o.out);
  Rng rng(o.seed);
  std::vector<DatasetEntry> written;
  for (const auto& entry : entries) {
    const auto vol = load_volume(o.in / entry.filename);
    const auto stem = stem_of(entry.filename);
    if (o.mode == AugmentMode::Policy) {
      if (!vol.label()) throw InputError("'" + entry.filename + "' has no label; policy mode needs labels");
      const auto outs = morphology::augment_sample(vol, rng, {o.se_radius, o.probability});
      for (const auto& out : outs) {
        const auto name = outs.size() == 1 ? entry.filename : stem + "_" + lower_label(out.label) + ".vol";
        Volume v = out.volume;
        v.set_label(out.label);
        save_volume(v, dir.path() / name);
        written.push_back({name, entry.split});
      }
    } else {
      const auto out = o.mode == AugmentMode::Expand ? morphology::atrophy_expansion(vol, se, rng)
                                                     : morphology::atrophy_reduction(vol, se, rng);
      save_volume(out, dir.path() / entry.filename);
      written.push_back(entry);
    }
  }
  io::write_text_atomic(dir.path() / kManifestName, format_manifest(written));
  dir.commit();
  std::printf("wrote %zu volumes to %s\n", written.size(), o.out.string().c_str());
}

TrainConfig resolve_train_config(const TrainCliOptions& o, std::uint32_t data_extent) {
  TrainConfig c;
  c.model.image_extent = data_extent;
  if (!o.config.empty()) {
    const auto bytes = io::read_file(o.config);
    for (const auto& [k, v] : parse_key_values(std::string(bytes.begin(), bytes.end()))) c.apply(k, v);
  }
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + kv + "' is not key=value");
    c.apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  c.validate();
  return c;
}

void train(const TrainCliOptions& o) {
  const auto train_set = load_split(o.data, Split::Train);
  if (train_set.empty()) throw InputError("no training volumes in " + o.data.string());
  const auto e = train_set.front().extents();
  if (!e.cubic()) throw DimensionError("training volumes must be cubic");
  const auto config = resolve_train_config(o, e.x);
  const auto val_set = load_split(o.data, Split::Val);
  if (val_set.empty()) throw InputError("no validation volumes in " + o.data.string());

  fs::create_directories(o.out);
  Trainer trainer(config);
  std::string log;
  trainer.train(train_set, val_set, [&](const EpochMetrics& m) {
    const auto line = format_metrics_line(m);
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    log += line + "\n";
    io::write_text_atomic(o.out / "metrics.tsv", log);
    trainer.save(o.out / "checkpoint.adpt");
  });
  if (config.epochs == 0) trainer.save(o.out / "checkpoint.adpt");
}

void eval(const EvalOptions& o) {
  const auto trainer = Trainer::load(o.checkpoint);
  const auto volumes = load_split(o.data, o.split);
  const auto r = trainer.evaluate(volumes);
  std::printf("accuracy %.6f\n", r.accuracy());
  std::printf("correct %zu total %zu skipped %zu\n", r.correct, r.total, r.skipped);
  std::printf("confusion (rows true, cols predicted)\n");
  std::printf("NC %zu %zu\n", r.confusion[0][0], r.confusion[0][1]);
  std::printf("AD %zu %zu\n", r.confusion[1][0], r.confusion[1][1]);
}

void attn_map(const AttnOptions& o) {
  const auto trainer = Trainer::load(o.checkpoint);
  const auto& cfg = trainer.config().model;
  const auto vol = load_volume(o.volume);
  const Extents want{cfg.image_extent, cfg.image_extent, cfg.image_extent};
  if (vol.extents() != want) {
    throw DimensionError("volume extent " + std::to_string(vol.extents().x) + "x" +
                         std::to_string(vol.extents().y) + "x" + std::to_string(vol.extents().z) +
                         " does not match the model extent " + std::to_string(cfg.image_extent));
  }
  const auto stack = extract_slices(normalize_zmuv(vol), trainer.allocation());
  model::AttentionRecord record;
  trainer.model().forward(stack, &record);
  const auto maps = attention_maps(record, cfg);
  fs::create_directories(o.out_dir);
  for (const auto& m : maps) {
    save_pgm(to_gray(m.map), o.out_dir / ("attn_" + model::to_string(m.stage) + "_" + to_string(m.view) + ".pgm"));
  }
  for (View v : kViews) {
    const auto mid = stack.group_begin(v) + stack.allocation.count(v) / 2;
    save_pgm(to_gray(stack.slices[mid]), o.out_dir / ("slice_" + to_string(v) + ".pgm"));
  }
  std::printf("wrote %zu attention maps and 3 slices to %s\n", maps.size(), o.out_dir.string().c_str());
}

void slice_dump(const SliceDumpOptions& o) {
  const auto vol = load_volume(o.volume);
  if (!vol.extents().cubic()) throw DimensionError("slice-dump needs a cubic volume");
  const auto alloc = SliceAllocation::uniform(o.n_total);
  const auto stack = extract_slices(vol, alloc);
  fs::create_directories(o.out_dir);
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const auto& info = stack.info[i];
    save_pgm(to_gray(stack.slices[i]),
             o.out_dir / ("slice_" + to_string(info.view) + "_" + padded(info.source_index, 3) + ".pgm"));
  }
  std::printf("wrote %zu slices to %s\n", stack.size(), o.out_dir.string().c_str());
}

int run(int argc, char** argv) {
  CLI::App app{"ADAPT slice-transformer toolkit"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen-phantoms", "Generate a labelled synthetic phantom dataset");
  g->add_option("--count", gen.count, "Number of volumes")->check(CLI::PositiveNumber);
  g->add_option("--size", gen.size, "Cube edge length in voxels")->check(CLI::PositiveNumber);
  g->add_option("--noise", gen.noise, "Gaussian noise sd")->check(CLI::NonNegativeNumber);
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--out", gen.out, "Output dataset directory")->required();

  AugmentCliOptions aug;
  std::string mode = "policy";
  auto* a = app.add_subcommand("augment", "Morphology augmentation of a dataset");
  a->add_option("--in", aug.in, "Input dataset directory")->required()->check(CLI::ExistingDirectory);
  a->add_option("--out", aug.out, "Output dataset directory")->required();
  a->add_option("--mode", mode, "expand | reduce | policy")
      ->check(CLI::IsMember({"expand", "reduce", "policy"}));
  a->add_option("--se-radius", aug.se_radius, "Flat square element radius")->check(CLI::NonNegativeNumber);
  a->add_option("--probability", aug.probability, "Policy augmentation probability for AD/NC")
      ->check(CLI::Range(0.0, 1.0));
  a->add_option("--seed", aug.seed, "Random seed");

  TrainCliOptions tr;
  std::optional<std::uint64_t> train_seed;
  auto* t = app.add_subcommand("train", "Train on a dataset directory");
  t->add_option("--data", tr.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  t->add_option("--config", tr.config, "key = value config file")->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "Output directory for checkpoint and metrics")->required();
  t->add_option("--seed", train_seed, "Random seed (overrides the config file)");
  t->add_option("--set", tr.overrides, "Config override key=value (repeatable)");

  EvalOptions ev;
  std::string split = "test";
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  e->add_option("--data", ev.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--split", split, "train | val | test")->check(CLI::IsMember({"train", "val", "test"}));

  AttnOptions at;
  auto* m = app.add_subcommand("attn-map", "Export per-stage class-token attention maps as PGM");
  m->add_option("--checkpoint", at.checkpoint, "Checkpoint file")->required();
  m->add_option("--volume", at.volume, "Volume file")->required();
  m->add_option("--out-dir", at.out_dir, "Output directory")->required();

  SliceDumpOptions sd;
  auto* s = app.add_subcommand("slice-dump", "Write the important slices of a volume as PGM");
  s->add_option("--volume", sd.volume, "Volume file")->required();
  s->add_option("--out-dir", sd.out_dir, "Output directory")->required();
  s->add_option("--n-total", sd.n_total, "Total slices across the three views")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) {
      gen_phantoms(gen);
    } else if (*a) {
      aug.mode = mode == "expand" ? AugmentMode::Expand : mode == "reduce" ? AugmentMode::Reduce : AugmentMode::Policy;
      augment(aug);
    } else if (*t) {
      if (train_seed) tr.overrides.push_back("seed=" + std::to_string(*train_seed));
      train(tr);
    } else if (*e) {
      ev.split = split_from_string(split);
      eval(ev);
    } else if (*m) {
      attn_map(at);
    } else if (*s) {
      slice_dump(sd);
    }
  } catch (const NumericError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kNumeric;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  }
  return kOk;
}

}  // namespace adapt::cli
