// Copyright 2026 DeepMind Technologies Limited
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

#include "timit/pipeline.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <gtest/gtest.h>

#include "timit/envgen.h"

namespace timit {
namespace {

namespace fs = std::filesystem;

std::string ReadBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("timit_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig FlatConfig(const fs::path& root, int n, std::uint64_t seed_base) {
  PlannerConfig planner;
  planner.horizon = 2.0;
  planner.goal_displacement = Eigen::Vector2d(0.5, 0.0);
  const fs::path planner_file = root.parent_path() / "timit_pipeline_planner.txt";
  planner.ToConfig().Save(planner_file.string());
  PipelineConfig c;
  c.n_clips = n;
  c.output_dir = root.string();
  c.planner_config = planner_file.string();
  c.flat_terrain = true;
  c.seed_base = seed_base;
  return c;
}

class PipelineDatasetTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(FreshDir("dataset"));
    std::ostringstream log;
    summary_ = new GenerateSummary(RunGenerate(FlatConfig(*root_, 3, 0), log));
  }
  static void TearDownTestSuite() {
    fs::remove_all(*root_);
    delete root_;
    delete summary_;
  }
  static fs::path* root_;
  static GenerateSummary* summary_;
};

fs::path* PipelineDatasetTest::root_ = nullptr;
GenerateSummary* PipelineDatasetTest::summary_ = nullptr;

TEST(PipelineConfigTest, RejectsBadCounts) {
  PipelineConfig c;
  c.n_clips = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = PipelineConfig();
  c.workers = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = PipelineConfig();
  c.retries = -1;
  EXPECT_THROW(c.Validate(), ConfigError);
  c.n_clips = 0;
  std::ostringstream log;
  EXPECT_THROW(RunGenerate(c, log), ConfigError);
}

TEST(PipelineConfigTest, RoundTripAndWorkerOverride) {
  PipelineConfig c;
  c.n_clips = 7;
  c.workers = 3;
  c.seed_base = 12345678901ull;
  c.flat_terrain = true;
  c.retries = 2;
  const PipelineConfig back = PipelineConfig::FromConfig(c.ToConfig());
  EXPECT_EQ(back.n_clips, 7);
  EXPECT_EQ(back.seed_base, 12345678901ull);
  EXPECT_TRUE(back.flat_terrain);
  EXPECT_EQ(back.retries, 2);
  EXPECT_EQ(back.EffectiveWorkers(), 3);
  setenv(kWorkerEnvVar, "5", 1);
  EXPECT_EQ(back.EffectiveWorkers(), 5);
  setenv(kWorkerEnvVar, "0", 1);
  EXPECT_THROW(back.EffectiveWorkers(), ConfigError);
  unsetenv(kWorkerEnvVar);
}

TEST(PipelineConfigTest, ClipDirNames) {
  EXPECT_EQ(ClipDirName(0), "clip_000000");
  EXPECT_EQ(ClipDirName(42), "clip_000042");
  EXPECT_EQ(ClipDirName(1234567), "clip_1234567");
}

TEST(PipelineConfigTest, FlatTerrainKeepsFootprint) {
  PipelineConfig c;
  c.flat_terrain = true;
  const HeightField flat = PipelineTerrain(c, 3);
  const HeightField rough = GenerateTerrain(3);
  EXPECT_EQ(flat.rows(), rough.rows());
  EXPECT_EQ(flat.origin(), rough.origin());
  EXPECT_EQ(flat.MaxHeight(), 0.0);
  c.flat_terrain = false;
  EXPECT_EQ(PipelineTerrain(c, 3), rough);
}

TEST_F(PipelineDatasetTest, GeneratesEveryClip) {
  EXPECT_EQ(summary_->requested, 3);
  EXPECT_EQ(summary_->saved, 3);
  EXPECT_EQ(summary_->convergence_rate, 1.0);
  const auto dirs = ListClipDirs(root_->string());
  ASSERT_EQ(dirs.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(fs::path(dirs[k]).filename(), ClipDirName(k));
    const TrajectoryClip clip = LoadClip(dirs[k]);
    EXPECT_EQ(clip.frames, 201);
    EXPECT_EQ(clip.terrain_seed, static_cast<std::uint64_t>(k));
  }
  const KeyValueConfig summary =
      KeyValueConfig::Load((*root_ / "summary.txt").string());
  EXPECT_EQ(summary.GetInt("saved", -1), 3);
}

TEST_F(PipelineDatasetTest, ReproducibleAcrossWorkerCounts) {
  const fs::path again = FreshDir("again");
  PipelineConfig c = FlatConfig(again, 2, 1);
  c.workers = 2;
  std::ostringstream log;
  ASSERT_EQ(RunGenerate(c, log).saved, 2);
  for (std::uint64_t seed : {1, 2}) {
    const fs::path a = *root_ / ClipDirName(seed);
    const fs::path b = again / ClipDirName(seed);
    for (const auto& entry : fs::directory_iterator(a)) {
      const fs::path other = b / entry.path().filename();
      ASSERT_TRUE(fs::exists(other)) << other;
      EXPECT_EQ(ReadBytes(entry.path()), ReadBytes(other)) << other;
    }
  }
  fs::remove_all(again);
}

TEST_F(PipelineDatasetTest, AuditPassesAndCatchesTampering) {
  std::ostringstream log;
  const auto audits = RunAudit(root_->string(), AuditThresholds(), log);
  ASSERT_EQ(audits.size(), 3u);
  for (const auto& a : audits) {
    EXPECT_TRUE(a.ok) << a.directory << "\n" << log.str();
    EXPECT_LE(a.residuals.max_residual, 1e-3);
    EXPECT_GE(a.residuals.min_normal_force_fine, -0.05 * a.residuals.force_max);
  }

  const fs::path copy = FreshDir("tampered");
  fs::copy(*root_ / ClipDirName(0), copy / ClipDirName(0));
  TrajectoryClip clip = LoadClip((copy / ClipDirName(0)).string());
  clip.channel("com_pos").data[30] += 0.2f;
  SaveClip(clip, (copy / ClipDirName(0)).string());
  const auto tampered = RunAudit(copy.string(), AuditThresholds(), log);
  ASSERT_EQ(tampered.size(), 1u);
  EXPECT_FALSE(tampered[0].ok);
  fs::remove_all(copy);
}

TEST_F(PipelineDatasetTest, StatsTablesMatchDirectComputation) {
  const fs::path out = FreshDir("stats");
  std::ostringstream log;
  const DatasetStats stats = RunStats(root_->string(), out.string(), 1.75, log);
  std::vector<TrajectoryClip> clips;
  for (const auto& d : ListClipDirs(root_->string())) clips.push_back(LoadClip(d));
  const DatasetStats direct = ComputeDatasetStats(clips, 1.75);
  EXPECT_EQ(stats.onsets.size(), direct.onsets.size());
  EXPECT_EQ(ReadBytes(out / "contacts.tsv"), direct.ContactTable());
  EXPECT_EQ(ReadBytes(out / "velocity.tsv"), direct.VelocityTable());
  fs::remove_all(out);
}

TEST_F(PipelineDatasetTest, DistortWritesPerClipFields) {
  const fs::path copy = FreshDir("distort");
  for (int k = 0; k < 3; ++k) fs::copy(*root_ / ClipDirName(k), copy / ClipDirName(k));
  std::ostringstream log;
  EXPECT_EQ(RunDistort(copy.string(), DistortionSpec(), 2, log), 6);
  for (int k = 0; k < 3; ++k) {
    const TrajectoryClip clip = LoadClip((copy / ClipDirName(k)).string());
    const HeightField embedded = EmbedCentered(clip.TerrainPatch(), 46, 46).field;
    for (int d = 0; d < 2; ++d) {
      const HeightField f = LoadHeightFieldText(
          (copy / ClipDirName(k) / ("distorted_" + std::to_string(d) + ".txt")).string());
      EXPECT_EQ(f.rows(), 46);
      EXPECT_EQ(f.cols(), 46);
      EXPECT_EQ(f.origin(), embedded.origin());
    }
  }
  fs::remove_all(copy);
}

TEST(PipelineEnvgenTest, WritesFieldBoxesAndSpec) {
  const fs::path out = FreshDir("envgen");
  const auto files = RunEnvgen("stairs", 4, out.string());
  ASSERT_EQ(files.size(), 3u);
  for (const auto& f : files) EXPECT_TRUE(fs::exists(f)) << f;
  const Track t = BuildStairs(4);
  const HeightField loaded = LoadHeightFieldText(files[0]);
  EXPECT_EQ(loaded.rows(), t.field.rows());
  EXPECT_EQ(loaded.cols(), t.field.cols());
  EXPECT_NEAR(loaded.MaxHeight(), t.field.MaxHeight(), 1e-9);
  EXPECT_EQ(ReadBytes(files[1]), BoxListText(t.spec.boxes));
  EXPECT_EQ(RunEnvgen("perlin", 4, out.string()).size(), 1u);
  EXPECT_THROW(RunEnvgen("lava", 4, out.string()), ConfigError);
  fs::remove_all(out);
}

class PipelineJacobianTest : public ::testing::Test {
 protected:
  HeightField terrain_ = EmbedCentered(GenerateTerrain(5), 46, 46).field;
  RobotModel model_;
  PlannerConfig config_ = [] {
    PlannerConfig c;
    c.horizon = 2.0;
    c.goal_displacement = Eigen::Vector2d(0.5, 0.0);
    return c;
  }();
};

TEST_F(PipelineJacobianTest, CleanProblemPasses) {
  const auto checks = RunCheckJacobians(terrain_, model_, config_, 5);
  ASSERT_FALSE(checks.empty());
  for (const auto& c : checks) EXPECT_FALSE(c.flagged) << c.block;
}

TEST_F(PipelineJacobianTest, InjectedFaultIsFlagged) {
  const auto checks = RunCheckJacobians(terrain_, model_, config_, 5, "dynamics");
  for (const auto& c : checks) EXPECT_EQ(c.flagged, c.block == "dynamics") << c.block;
  EXPECT_THROW(RunCheckJacobians(terrain_, model_, config_, 5, "nonexistent"),
               ConfigError);
}

}  // namespace
}  // namespace timit
