// Copyright (c) 2026 The cosg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "config.hpp"
#include "cosg/checkpoint.hpp"
#include "cosg/dataset.hpp"
#include "cosg/errors.hpp"
#include "cosg/motion.hpp"
#include "cosg/synthetic.hpp"
#include "manifest.hpp"
#include "pipeline.hpp"

using namespace cosg;
using namespace cosg::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "cosg_test_cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

TEST(Config, DefaultsAreEchoed) {
  const std::string ini = RunConfig{}.to_ini();
  EXPECT_NE(ini.find("[loss]"), std::string::npos);
  EXPECT_NE(ini.find("alpha = 300"), std::string::npos) << ini;
  EXPECT_NE(ini.find("warmup_epochs = 10"), std::string::npos) << ini;
}

TEST(Config, IniRoundTrip) {
  RunConfig a;
  a.merge_string("[train]\nepochs = 7\nlr = 0.00025\n[loss]\ndelta = 0.5\n[data]\nspeaker = spk1\n");
  RunConfig b;
  b.merge_string(a.to_ini());
  EXPECT_EQ(a.to_ini(), b.to_ini());
  EXPECT_EQ(b.train.epochs, 7u);
  EXPECT_DOUBLE_EQ(b.train.adam.lr, 0.00025);
  EXPECT_DOUBLE_EQ(b.train.weights.delta, 0.5);
  EXPECT_EQ(b.data.speaker, "spk1");
}

TEST(Config, RejectsUnknownKeys) {
  RunConfig c;
  try {
    c.merge_string("[train]\nepochz = 3\n");
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.exit_code(), 2);
    EXPECT_NE(std::string(e.what()).find("epochz"), std::string::npos);
  }
  EXPECT_THROW(c.merge_string("[nosuch]\nx = 1\n"), ConfigError);
  EXPECT_THROW(c.merge_string("epochs = 3\n"), ConfigError);
}

TEST(Config, RejectsMalformedValues) {
  RunConfig c;
  EXPECT_THROW(c.merge_string("[train]\nepochs = three\n"), ConfigError);
  EXPECT_THROW(c.merge_string("[train]\nlr = 1e-3x\n"), ConfigError);
  EXPECT_THROW(c.merge_string("[train]\nno_gan = maybe\n"), ConfigError);
  EXPECT_THROW(c.merge_string("[train\nepochs = 3\n"), ConfigError);
}

TEST(Config, ValidateCatchesInconsistentWindows) {
  RunConfig c;
  c.merge_string("[data]\nwindow = 8\n[train]\nseed_frames = 10\n");
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, AblationsZeroTheirWeights) {
  RunConfig c;
  c.merge_string("[train]\nno_gan = true\nno_recon = true\n");
  c.apply_ablations();
  EXPECT_EQ(c.train.weights.gamma, 0.0);
  EXPECT_EQ(c.train.weights.epsilon, 0.0);
  EXPECT_GT(c.train.weights.delta, 0.0);
  EXPECT_TRUE(c.model.use_repr);

  RunConfig r;
  r.ablation.no_repr = true;
  r.apply_ablations();
  EXPECT_FALSE(r.model.use_repr);
}

TEST(Manifest, GitBlobHashMatchesGit) {
  // `printf 'hello\n' | git hash-object --stdin`
  const fs::path dir = scratch("hash");
  write(dir / "hello.txt", "hello\n");
  EXPECT_EQ(git_blob_sha1(dir / "hello.txt"), "ce013625030ba8dba906f756967f9e9ca394464a");
  write(dir / "empty.txt", "");
  EXPECT_EQ(git_blob_sha1(dir / "empty.txt"), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST(Manifest, LoadsAndFiltersBySpeaker) {
  const fs::path dir = scratch("manifest");
  synthetic::write_dataset(dir, {});
  const auto all = load_manifest(dir / "manifest.csv");
  ASSERT_EQ(all.size(), 4u);
  EXPECT_EQ(all.back().split, Split::kTest);
  EXPECT_TRUE(all.front().bvh.is_absolute());
  const auto spk1 = filter_speaker(all, "spk1");
  ASSERT_EQ(spk1.size(), 2u);
  for (const auto& e : spk1) EXPECT_EQ(e.speaker, "spk1");
  EXPECT_EQ(filter_speaker(all, "").size(), 4u);
}

TEST(Manifest, ErrorsCarryLineNumbers) {
  const fs::path dir = scratch("manifest_bad");
  synthetic::write_dataset(dir, {});
  std::string text = slurp(dir / "manifest.csv");
  write(dir / "dup.csv", text + text.substr(text.find('\n') + 1, text.find('\n', text.find('\n') + 1) - text.find('\n')));
  try {
    load_manifest(dir / "dup.csv");
    FAIL() << "duplicate id accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 6u);
  }
  write(dir / "missing.csv", "id,speaker,split,bvh,wav,tsv\nx,s,train,nope.bvh,nope.wav,nope.tsv\n");
  try {
    load_manifest(dir / "missing.csv");
    FAIL() << "missing files accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  write(dir / "split.csv", "id,speaker,split,bvh,wav,tsv\nx,s,holdout,a,b,c\n");
  EXPECT_THROW(load_manifest(dir / "split.csv"), ParseError);
}

TEST(Pipeline, PrepareIsDeterministic) {
  const fs::path dir = scratch("prepare");
  synthetic::write_dataset(dir / "data", {});
  run_prepare(dir / "data/manifest.csv", dir / "a", RunConfig{});
  run_prepare(dir / "data/manifest.csv", dir / "b", RunConfig{});
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(e.path(), dir / "a");
    EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / rel)) << rel;
  }
  EXPECT_GE(files, 8u);
  EXPECT_EQ(slurp(dir / "a/manifest.sha1"), git_blob_sha1(dir / "data/manifest.csv") + "\n");
  std::istringstream clips(slurp(dir / "a/clips.csv"));
  std::string header;
  std::getline(clips, header);
  EXPECT_EQ(header, "id,speaker,split,frames");

  const StreamStats stats = StreamStats::load(Checkpoint::load(dir / "a/stats.rgt"));
  const NormStats csv = NormStats::load_csv(dir / "a/gesture_stats.csv");
  ASSERT_EQ(csv.mean.size(), stats.gesture.mean.size());
  for (std::size_t i = 0; i < csv.mean.size(); ++i) {
    EXPECT_NEAR(csv.mean.data()[i], stats.gesture.mean.data()[i], 1e-12);
    EXPECT_NEAR(csv.std.data()[i], stats.gesture.std.data()[i], 1e-12);
  }
}

TEST(Pipeline, PrepareRejectsSpeakerWithoutTrainingClips) {
  const fs::path dir = scratch("prepare_empty");
  synthetic::write_dataset(dir / "data", {});
  RunConfig cfg;
  cfg.data.speaker = "nobody";
  try {
    run_prepare(dir / "data/manifest.csv", dir / "store", cfg);
    FAIL() << "empty training split accepted";
  } catch (const DataError& e) {
    EXPECT_EQ(e.exit_code(), 3);
  }
}

TEST(Pipeline, EvaluateSelfComparison) {
  const fs::path dir = scratch("evaluate");
  synthetic::write_dataset(dir / "data", {});
  RunConfig cfg;
  cfg.eval.fgd.epochs = 2;
  const auto reports = run_evaluate({{"Copy", dir / "data/motion"}}, dir / "data/motion", dir / "out", cfg);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].name, "GT");
  EXPECT_EQ(reports[1].name, "Copy");
  EXPECT_NEAR(reports[1].global_cca, 1.0, 1e-6);
  EXPECT_NEAR(reports[1].hellinger_avg, 0.0, 1e-9);
  EXPECT_NEAR(reports[1].fgd_raw, 0.0, 1e-6);
  EXPECT_TRUE(fs::exists(dir / "out/metrics.csv"));
  EXPECT_TRUE(fs::exists(dir / "out/metrics.svg"));
  const std::string csv = slurp(dir / "out/metrics.csv");
  EXPECT_EQ(csv.find("GT,"), csv.find('\n') + 1);
}

TEST(Pipeline, EvaluateRejectsLengthMismatch) {
  const fs::path dir = scratch("evaluate_len");
  synthetic::write_dataset(dir / "data", {});
  fs::create_directories(dir / "short");
  for (const auto& e : fs::directory_iterator(dir / "data/motion")) {
    MotionClip clip = load_bvh(e.path());
    const std::size_t per_frame = clip.joint_count() * 3;
    clip.frames -= 100;
    clip.translations.resize(clip.frames * per_frame);
    clip.rotations.resize(clip.frames * per_frame);
    save_bvh(dir / "short" / e.path().filename(), clip);
  }
  RunConfig cfg;
  EXPECT_THROW(run_evaluate({{"Short", dir / "short"}}, dir / "data/motion", dir / "out", cfg), DataError);
}
