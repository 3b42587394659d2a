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

// Command-line entry point: dataset generation, augmentation, auditing,
// statistics, evaluation terrains and solver diagnostics.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "timit/dataset.h"
#include "timit/envgen.h"
#include "timit/heightfield.h"
#include "timit/pipeline.h"
#include "timit/planner.h"
#include "timit/robot_model.h"
#include "timit/tracking.h"

namespace {

using namespace timit;

// Applies key=value overrides on top of a planner config file (or defaults).
PlannerConfig PlannerWithOverrides(const std::string& path,
                                   const std::vector<std::string>& overrides) {
  KeyValueConfig c = path.empty() ? PlannerConfig().ToConfig()
                                  : KeyValueConfig::Load(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override '" + kv + "' is not key=value");
    }
    c.Set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return PlannerConfig::FromConfig(c);
}

int Generate(PipelineConfig pipeline, const std::vector<std::string>& overrides) {
  pipeline.Validate();
  if (!overrides.empty()) {
    // Freeze the effective planner config next to the dataset.
    const PlannerConfig planner =
        PlannerWithOverrides(pipeline.planner_config, overrides);
    std::filesystem::create_directories(pipeline.output_dir);
    const std::string path =
        (std::filesystem::path(pipeline.output_dir) / "planner_config.txt").string();
    planner.ToConfig().Save(path);
    pipeline.planner_config = path;
  }
  const GenerateSummary summary = RunGenerate(pipeline, std::cout);
  return summary.saved > 0 ? 0 : 1;
}

HeightField JacobianTerrain(bool flat, std::uint64_t seed) {
  HeightField patch = GenerateTerrain(seed);
  if (flat) {
    patch = HeightField::Flat(patch.rows(), patch.cols(), patch.cell_size(),
                              patch.origin(), 0.0);
  }
  return EmbedCentered(patch, 46, 46).field;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planned-trajectory dataset toolkit for legged locomotion"};
  app.require_subcommand(1);

  // generate
  PipelineConfig pipeline;
  std::string pipeline_file;
  std::vector<std::string> overrides;
  double horizon = 0.0;
  std::vector<double> goal;
  auto* gen = app.add_subcommand("generate", "Plan clips over seeded terrains");
  gen->add_option("--config", pipeline_file, "Pipeline config file");
  gen->add_option("-n,--n-clips", pipeline.n_clips, "Number of seeds");
  gen->add_option("-o,--out", pipeline.output_dir, "Dataset directory");
  gen->add_option("--planner", pipeline.planner_config, "Planner config file");
  gen->add_option("--robot", pipeline.robot_config, "Robot config file");
  gen->add_option("--tracking", pipeline.tracking_config, "Tracking config file");
  gen->add_option("-j,--workers", pipeline.workers,
                  std::string("Worker threads (env ") + kWorkerEnvVar + " overrides)");
  gen->add_option("--seed-base", pipeline.seed_base, "First seed");
  gen->add_flag("--distort", pipeline.distortion, "Write distorted terrains");
  gen->add_option("--distortions-per-clip", pipeline.distortions_per_clip);
  gen->add_flag("--flat", pipeline.flat_terrain, "Plan over flat terrain");
  gen->add_option("--retries", pipeline.retries,
                  "Extra attempts with fresh noise per failed seed");
  gen->add_option("--horizon", horizon, "Planning horizon T (s)");
  gen->add_option("--goal", goal, "Goal displacement x y (m)")->expected(2);
  gen->add_option("--set", overrides, "Planner override key=value");

  // distort
  std::string dataset_dir = "dataset";
  DistortionSpec distortion;
  int per_clip = 1;
  auto* dist = app.add_subcommand("distort", "Distort clip terrains around contacts");
  dist->add_option("dataset", dataset_dir)->required();
  dist->add_option("--per-clip", per_clip);
  dist->add_option("--rectangles", distortion.n_rectangles);
  dist->add_option("--seed", distortion.rng_seed);
  dist->add_option("--patch-side", distortion.contact_patch_side);

  // audit
  AuditThresholds thresholds;
  auto* audit = app.add_subcommand("audit", "Recompute residuals and check clips");
  audit->add_option("dataset", dataset_dir)->required();
  audit->add_option("--max-residual", thresholds.max_residual);
  audit->add_option("--force-fraction", thresholds.force_fraction);
  audit->add_option("--swing-clearance", thresholds.swing_clearance);

  // stats
  std::string stats_out;
  double max_x = 1.75;
  auto* stats = app.add_subcommand("stats", "Contact and velocity tables");
  stats->add_option("dataset", dataset_dir)->required();
  stats->add_option("-o,--out", stats_out, "Output directory (default: dataset)");
  stats->add_option("--max-x", max_x);

  // envgen
  std::string kind;
  std::uint64_t env_seed = 0;
  std::string env_out = ".";
  auto* env = app.add_subcommand("envgen", "Build an evaluation terrain");
  env->add_option("kind", kind, "stairs | procedural | wavy | mixed | perlin")
      ->required();
  env->add_option("--seed", env_seed);
  env->add_option("-o,--out", env_out);

  // check-jacobians
  std::uint64_t jac_seed = 0;
  bool jac_flat = false;
  std::string fault_block;
  std::string jac_planner, jac_robot;
  std::vector<std::string> jac_overrides;
  auto* jac = app.add_subcommand("check-jacobians",
                                 "Finite-difference check of planner Jacobians");
  jac->add_option("--seed", jac_seed);
  jac->add_flag("--flat", jac_flat);
  jac->add_option("--planner", jac_planner);
  jac->add_option("--robot", jac_robot);
  jac->add_option("--set", jac_overrides);
  jac->add_option("--inject-fault", fault_block,
                  "Corrupt one Jacobian entry of this block");

  // track-eval
  std::string sim_dir, clip_dir, tracking_file;
  auto* track = app.add_subcommand("track-eval",
                                   "Rewards and truncation of a trace vs. a clip");
  track->add_option("--sim", sim_dir, "Simulated trace in clip format")->required();
  track->add_option("--clip", clip_dir, "Reference clip")->required();
  track->add_option("--tracking", tracking_file, "Tracking config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      if (!pipeline_file.empty()) {
        pipeline = PipelineConfig::FromConfig(KeyValueConfig::Load(pipeline_file));
      }
      if (horizon > 0.0) overrides.push_back("horizon=" + FormatDouble(horizon));
      if (goal.size() == 2) {
        overrides.push_back("goal_displacement=" + FormatDouble(goal[0]) + " " +
                            FormatDouble(goal[1]));
      }
      return Generate(pipeline, overrides);
    }
    if (*dist) {
      const int n = RunDistort(dataset_dir, distortion, per_clip, std::cout);
      std::cout << n << " distorted terrains written\n";
      return 0;
    }
    if (*audit) {
      const auto audits = RunAudit(dataset_dir, thresholds, std::cout);
      int failed = 0;
      for (const auto& a : audits) failed += a.ok ? 0 : 1;
      std::cout << audits.size() - failed << "/" << audits.size()
                << " clips pass\n";
      return failed == 0 && !audits.empty() ? 0 : 1;
    }
    if (*stats) {
      RunStats(dataset_dir, stats_out.empty() ? dataset_dir : stats_out, max_x,
               std::cout);
      return 0;
    }
    if (*env) {
      for (const auto& path : RunEnvgen(kind, env_seed, env_out)) {
        std::cout << path << "\n";
      }
      return 0;
    }
    if (*jac) {
      const PlannerConfig config = PlannerWithOverrides(jac_planner, jac_overrides);
      const RobotModel model =
          jac_robot.empty() ? RobotModel() : RobotModel::Load(jac_robot);
      const auto checks = RunCheckJacobians(JacobianTerrain(jac_flat, jac_seed),
                                            model, config, jac_seed, fault_block);
      bool any = false;
      for (const auto& c : checks) {
        std::cout << (c.flagged ? "FLAG " : "ok   ") << c.block
                  << " max_rel_error=" << FormatDouble(c.max_rel_error)
                  << " row=" << c.worst_row << " col=" << c.worst_col << "\n";
        any = any || c.flagged;
      }
      return any ? 1 : 0;
    }
    if (*track) {
      const TrackingConfig config = tracking_file.empty()
                                        ? TrackingConfig()
                                        : TrackingConfig::Load(tracking_file);
      const TraceEvaluation eval =
          EvaluateTrace(LoadClip(sim_dir), LoadClip(clip_dir), config);
      std::cout << eval.Table();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
