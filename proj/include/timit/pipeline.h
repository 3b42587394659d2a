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

#ifndef TIMIT_PIPELINE_H_
#define TIMIT_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "timit/config_file.h"
#include "timit/dataset.h"
#include "timit/heightfield.h"
#include "timit/planner.h"
#include "timit/robot_model.h"

namespace timit {

inline constexpr const char* kWorkerEnvVar = "TIMIT_WORKERS";

struct PipelineConfig {
  int n_clips = 1;
  std::string output_dir = "dataset";
  // Optional config files; empty selects the defaults.
  std::string planner_config;
  std::string robot_config;
  std::string tracking_config;
  int workers = 1;
  std::uint64_t seed_base = 0;
  bool distortion = false;
  int distortions_per_clip = 1;
  // Plan over a flat patch instead of a procedural terrain.
  bool flat_terrain = false;
  // Extra attempts with fresh initialization noise per failed seed.
  int retries = 0;

  // Throws ConfigError on n_clips < 1, workers < 1 or retries < 0.
  void Validate() const;
  // Worker count after the environment override.
  int EffectiveWorkers() const;

  KeyValueConfig ToConfig() const;
  static PipelineConfig FromConfig(const KeyValueConfig& config);
};

struct ClipOutcome {
  std::uint64_t seed = 0;
  bool converged = false;
  bool saved = false;
  int attempts = 0;
  std::string status;
  double max_violation = 0.0;
  std::string directory;  // relative to the dataset root
  std::string message;
};

struct GenerateSummary {
  int requested = 0;
  int saved = 0;
  double convergence_rate = 0.0;
  std::vector<ClipOutcome> clips;
};

// Clip directory name for a terrain seed.
std::string ClipDirName(std::uint64_t seed);

// The patch a seed plans over: a procedural terrain or a flat field with the
// same footprint.
HeightField PipelineTerrain(const PipelineConfig& config, std::uint64_t seed);

// generate_terrain -> plan -> sample_clip -> save_clip per seed. Workers
// plan in parallel; the calling thread writes every file. Writes
// summary.txt with the convergence rate.
GenerateSummary RunGenerate(const PipelineConfig& config, std::ostream& log);

// Distorts each clip's patch around its contact onsets and writes
// distorted_<k>.txt into the clip directory. Returns the number written.
int RunDistort(const std::string& dataset_dir, const DistortionSpec& spec,
               int per_clip, std::ostream& log);

struct AuditThresholds {
  double max_residual = 1e-3;
  // Fine-sampled normal force lower bound, as a fraction of the force limit.
  double force_fraction = 0.05;
  double swing_clearance = -0.01;
};

struct ClipAudit {
  std::string directory;
  bool ok = true;
  AuditReport residuals;
  std::vector<std::string> problems;
};

// Recomputes residuals from each saved solution without the solver and
// checks clip invariants. Returns one entry per clip.
std::vector<ClipAudit> RunAudit(const std::string& dataset_dir,
                                const AuditThresholds& thresholds,
                                std::ostream& log);

// Writes contacts.tsv and velocity.tsv into `out_dir`.
DatasetStats RunStats(const std::string& dataset_dir, const std::string& out_dir,
                      double max_x, std::ostream& log);

// Writes <kind>_<seed>.txt (height field), _boxes.txt and _spec.txt.
// Kinds: stairs, procedural, wavy, mixed, perlin.
std::vector<std::string> RunEnvgen(const std::string& kind, std::uint64_t seed,
                                   const std::string& out_dir);

// Clip directories under a dataset root, sorted.
std::vector<std::string> ListClipDirs(const std::string& dataset_dir);

// Jacobian check of the planner problem at its seeded initial guess. When
// `inject_fault_block` names a block, one Jacobian entry of that block is
// corrupted first so the check can be exercised.
std::vector<nlp::JacobianCheck> RunCheckJacobians(
    const HeightField& terrain, const RobotModel& model,
    const PlannerConfig& config, std::uint64_t seed,
    const std::string& inject_fault_block = "");

// Wraps a block so its Jacobian entry (row, col) is off by `delta`; the
// residual is unchanged. The entry is added if the block does not emit it.
void InjectJacobianFault(nlp::NlpProblem& problem, const std::string& block,
                         int row, int col, double delta);

}  // namespace timit

#endif  // TIMIT_PIPELINE_H_
