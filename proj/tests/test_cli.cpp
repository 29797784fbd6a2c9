// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "adapt/io.hpp"
#include "adapt/morphology.hpp"
#include "adapt/visualize.hpp"
#include "support/fixtures.hpp"

namespace adapt {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct Result {
  int status = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result cli(const TempDir& tmp, const std::string& args) {
  const auto out = tmp.path() / "stdout.txt";
  const auto err = tmp.path() / "stderr.txt";
  const std::string cmd = std::string(ADAPT_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  Result r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

std::string gen(const TempDir& tmp, const std::string& name, const std::string& extra) {
  const auto out = (tmp.path() / name).string();
  const auto r = cli(tmp, "gen-phantoms --out " + out + " " + extra);
  EXPECT_EQ(r.status, 0) << r.err;
  return out;
}

// Tiny model so a CLI training run takes seconds.
const char* kTinyTrain =
    " --set epochs=1 --set batch_size=4 --set embed_dim=16 --set heads=2 --set layers_sae=1"
    " --set layers_dsae=1 --set layers_intra=1 --set layers_inter=1 --set learning_rate=0.001";

TEST(Cli, GenPhantomsWritesVolumesAndManifest) {
  TempDir tmp("cli_gen");
  const auto out = gen(tmp, "data", "--count 30 --size 32 --seed 3");
  EXPECT_EQ(count_files(out, ".vol"), 30u);
  const auto entries = read_manifest(out);
  ASSERT_EQ(entries.size(), 30u);
  std::size_t train = 0;
  for (const auto& e : entries) train += e.split == Split::Train;
  EXPECT_EQ(train, 21u);
  const auto v = load_volume(fs::path(out) / entries.front().filename);
  EXPECT_EQ(v.extents(), (Extents{32, 32, 32}));
  EXPECT_TRUE(v.label().has_value());
}

TEST(Cli, GenPhantomsIsDeterministic) {
  TempDir tmp("cli_det");
  const auto a = gen(tmp, "a", "--count 6 --size 32 --seed 9");
  const auto b = gen(tmp, "b", "--count 6 --size 32 --seed 9");
  for (const auto& e : read_manifest(a)) {
    EXPECT_EQ(io::read_file(fs::path(a) / e.filename), io::read_file(fs::path(b) / e.filename)) << e.filename;
  }
}

TEST(Cli, GenPhantomsRefusesNonEmptyOutput) {
  TempDir tmp("cli_exist");
  const auto out = gen(tmp, "data", "--count 3 --size 32");
  EXPECT_EQ(cli(tmp, "gen-phantoms --count 3 --size 32 --out " + out).status, 2);
}

TEST(Cli, UsageErrorsExitTwo) {
  TempDir tmp("cli_usage");
  EXPECT_EQ(cli(tmp, "").status, 2);
  EXPECT_EQ(cli(tmp, "no-such-command").status, 2);
  EXPECT_EQ(cli(tmp, "gen-phantoms").status, 2);
  EXPECT_EQ(cli(tmp, "--help").status, 0);
}

TEST(Cli, TrainRejectsIndivisibleExtent) {
  TempDir tmp("cli_63");
  const auto data = gen(tmp, "data", "--count 21 --size 63");
  const auto out = tmp.path() / "run";
  const auto r = cli(tmp, "train --data " + data + " --out " + out.string() + kTinyTrain);
  EXPECT_EQ(r.status, 2);
  EXPECT_FALSE(r.err.empty());
  EXPECT_FALSE(fs::exists(out / "checkpoint.adpt"));
}

TEST(Cli, TrainRejectsUnknownConfigKey) {
  TempDir tmp("cli_key");
  const auto data = gen(tmp, "data", "--count 21 --size 32");
  const auto cfg = tmp.path() / "train.cfg";
  io::write_text_atomic(cfg, "epochs = 1\nwarp_factor = 9\n");
  const auto r = cli(tmp, "train --data " + data + " --config " + cfg.string() + " --out " +
                              (tmp.path() / "run").string());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("warp_factor"), std::string::npos) << r.err;
}

class CliTrained : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    tmp_ = new TempDir("cli_trained");
    data_ = gen(*tmp_, "data", "--count 21 --size 32 --seed 4");
    run_ = tmp_->path() / "run";
    const auto r = cli(*tmp_, "train --data " + data_ + " --out " + run_.string() + " --seed 5" + kTinyTrain);
    ASSERT_EQ(r.status, 0) << r.err;
  }
  static void TearDownTestSuite() {
    delete tmp_;
    tmp_ = nullptr;
  }
  static TempDir* tmp_;
  static std::string data_;
  static fs::path run_;
};
TempDir* CliTrained::tmp_ = nullptr;
std::string CliTrained::data_;
fs::path CliTrained::run_;

TEST_F(CliTrained, WritesCheckpointAndMetrics) {
  const auto bytes = io::read_file(run_ / "checkpoint.adpt");
  ASSERT_GE(bytes.size(), 4u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "ADPT");
  const auto metrics = slurp(run_ / "metrics.tsv");
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 1);
}

TEST_F(CliTrained, EvalPrintsAccuracy) {
  const auto r = cli(*tmp_, "eval --checkpoint " + (run_ / "checkpoint.adpt").string() + " --data " + data_);
  ASSERT_EQ(r.status, 0) << r.err;
  double acc = -1.0;
  ASSERT_EQ(std::sscanf(r.out.c_str(), "accuracy %lf", &acc), 1) << r.out;
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
}

TEST_F(CliTrained, EvalRejectsWrongVersion) {
  auto bytes = io::read_file(run_ / "checkpoint.adpt");
  bytes[4] = 99;
  const auto bad = tmp_->path() / "bad.adpt";
  io::write_file_atomic(bad, bytes);
  const auto r = cli(*tmp_, "eval --checkpoint " + bad.string() + " --data " + data_);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("version"), std::string::npos) << r.err;
}

TEST_F(CliTrained, AttnMapWritesNormalizedImages) {
  const auto vol = fs::path(data_) / read_manifest(data_).front().filename;
  const auto out = tmp_->path() / "attn";
  const auto r = cli(*tmp_, "attn-map --checkpoint " + (run_ / "checkpoint.adpt").string() + " --volume " +
                                vol.string() + " --out-dir " + out.string());
  ASSERT_EQ(r.status, 0) << r.err;
  ASSERT_EQ(count_files(out, ".pgm"), 15u);
  for (const auto& e : fs::directory_iterator(out)) {
    const auto img = decode_pgm(io::read_file(e.path()));
    EXPECT_EQ(img.rows, 32u);
    const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    if (e.path().filename().string().rfind("slice_", 0) == 0 || *hi != 0) {
      EXPECT_EQ(*lo, 0) << e.path();
      EXPECT_EQ(*hi, 255) << e.path();
    }
  }
}

TEST_F(CliTrained, AttnMapRejectsExtentMismatch) {
  const auto other = gen(*tmp_, "big", "--count 3 --size 48");
  const auto vol = fs::path(other) / read_manifest(other).front().filename;
  const auto r = cli(*tmp_, "attn-map --checkpoint " + (run_ / "checkpoint.adpt").string() + " --volume " +
                                vol.string() + " --out-dir " + (tmp_->path() / "x").string());
  EXPECT_EQ(r.status, 2);
}

TEST(Cli, AugmentPolicyDoublesMci) {
  TempDir tmp("cli_policy");
  const auto data = gen(tmp, "data", "--count 9 --size 32");
  const auto out = (tmp.path() / "aug").string();
  ASSERT_EQ(cli(tmp, "augment --mode policy --in " + data + " --out " + out).status, 0);
  // 3 of each class; each MCI volume becomes one AD and one NC copy.
  const auto entries = read_manifest(out);
  EXPECT_EQ(entries.size(), 12u);
  std::size_t mci = 0;
  for (const auto& e : entries) mci += load_volume(fs::path(out) / e.filename).label() == Label::MCI;
  EXPECT_EQ(mci, 0u);
}

TEST(Cli, ExpandThenReduceIsAnOpening) {
  TempDir tmp("cli_open");
  const auto data = gen(tmp, "data", "--count 3 --size 32 --seed 2");
  const auto mid = (tmp.path() / "exp").string();
  const auto out = (tmp.path() / "open").string();
  ASSERT_EQ(cli(tmp, "augment --mode expand --seed 8 --in " + data + " --out " + mid).status, 0);
  ASSERT_EQ(cli(tmp, "augment --mode reduce --seed 8 --in " + mid + " --out " + out).status, 0);
  const auto se = morphology::StructuringElement::flat_square(1);
  Rng r1(8), r2(8);
  for (const auto& e : read_manifest(data)) {
    const auto orig = load_volume(fs::path(data) / e.filename);
    const auto got = load_volume(fs::path(out) / e.filename);
    const auto want = morphology::atrophy_reduction(morphology::atrophy_expansion(orig, se, r1), se, r2);
    ASSERT_EQ(got.extents(), want.extents());
    EXPECT_TRUE(std::equal(got.voxels().begin(), got.voxels().end(), want.voxels().begin()));
    // Openings are anti-extensive.
    for (std::size_t i = 0; i < orig.voxels().size(); ++i) ASSERT_LE(got.voxels()[i], orig.voxels()[i]);
  }
}

TEST(Cli, ZeroRadiusIsIdentity) {
  TempDir tmp("cli_r0");
  const auto data = gen(tmp, "data", "--count 3 --size 32");
  const auto out = (tmp.path() / "aug").string();
  ASSERT_EQ(cli(tmp, "augment --mode expand --se-radius 0 --in " + data + " --out " + out).status, 0);
  for (const auto& e : read_manifest(data)) {
    const auto a = load_volume(fs::path(data) / e.filename);
    const auto b = load_volume(fs::path(out) / e.filename);
    EXPECT_TRUE(std::equal(a.voxels().begin(), a.voxels().end(), b.voxels().begin()));
  }
}

TEST(Cli, SliceDumpWritesAllSlices) {
  TempDir tmp("cli_dump");
  const auto data = gen(tmp, "data", "--count 3 --size 32");
  const auto vol = fs::path(data) / read_manifest(data).front().filename;
  const auto out = tmp.path() / "slices";
  ASSERT_EQ(cli(tmp, "slice-dump --n-total 12 --volume " + vol.string() + " --out-dir " + out.string()).status, 0);
  EXPECT_EQ(count_files(out, ".pgm"), 12u);
}

}  // namespace
}  // namespace adapt
