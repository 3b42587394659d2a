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

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include "timit/envgen.h"

namespace timit {
namespace {

namespace fs = std::filesystem;

constexpr int kPlanningGrid = 46;
constexpr std::uint64_t kRetryStride = 0x9E3779B97F4A7C15ull;

struct WorkResult {
  ClipOutcome outcome;
  std::optional<TrajectoryClip> clip;
  HeightField planning_terrain;
  CentroidalSolution solution;
};

struct Inputs {
  PlannerConfig planner;
  RobotModel model;
};

Inputs LoadInputs(const PipelineConfig& config) {
  Inputs in;
  if (!config.planner_config.empty()) {
    in.planner = PlannerConfig::Load(config.planner_config);
  }
  if (!config.robot_config.empty()) in.model = RobotModel::Load(config.robot_config);
  in.planner.Validate();
  return in;
}

WorkResult GenerateOne(const PipelineConfig& config, const Inputs& in,
                       std::uint64_t seed) {
  WorkResult w;
  w.outcome.seed = seed;
  w.outcome.directory = ClipDirName(seed);
  const HeightField patch = PipelineTerrain(config, seed);
  w.planning_terrain = EmbedCentered(patch, kPlanningGrid, kPlanningGrid).field;
  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    w.outcome.attempts = attempt + 1;
    const std::uint64_t plan_seed = seed + attempt * kRetryStride;
    try {
      w.solution = Plan(w.planning_terrain, in.model, in.planner, plan_seed);
    } catch (const std::exception& e) {
      w.outcome.status = "error";
      w.outcome.message = e.what();
      continue;
    }
    w.outcome.status = nlp::ToString(w.solution.report.status);
    w.outcome.max_violation = w.solution.report.max_violation;
    w.outcome.converged = w.solution.converged();
    if (!w.outcome.converged) continue;
    try {
      w.clip = SampleClip(w.solution, patch, in.model);
      w.clip->terrain_seed = seed;
      w.outcome.saved = true;
      w.outcome.message.clear();
      return w;
    } catch (const DatasetError& e) {
      w.outcome.status = "rejected";
      w.outcome.message = e.what();
    }
  }
  return w;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::vector<Eigen::Vector2d> OnsetPoints(const TrajectoryClip& clip) {
  std::vector<Eigen::Vector2d> points;
  const TrajectoryClip* one = &clip;
  for (const auto& o : ContactOnsets(std::span<const TrajectoryClip>(one, 1),
                                     std::numeric_limits<double>::infinity())) {
    points.emplace_back(o.x, o.y);
  }
  return points;
}

int DistortClipDir(const fs::path& dir, const TrajectoryClip& clip,
                   DistortionSpec spec, int per_clip) {
  const std::vector<Eigen::Vector2d> contacts = OnsetPoints(clip);
  const HeightField patch = clip.TerrainPatch();
  const std::uint64_t base = spec.rng_seed;
  for (int k = 0; k < per_clip; ++k) {
    spec.rng_seed = Fnv1a64(std::to_string(clip.terrain_seed) + ":" +
                            std::to_string(base) + ":" + std::to_string(k));
    const DistortionResult r = DistortTerrain(patch, contacts, spec);
    SaveHeightFieldText(r.distorted,
                        (dir / ("distorted_" + std::to_string(k) + ".txt")).string());
  }
  return per_clip;
}

}  // namespace

void PipelineConfig::Validate() const {
  if (n_clips < 1) throw ConfigError("n_clips must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (retries < 0) throw ConfigError("retries must be >= 0");
  if (distortions_per_clip < 1) {
    throw ConfigError("distortions_per_clip must be >= 1");
  }
  if (output_dir.empty()) throw ConfigError("output directory is empty");
}

int PipelineConfig::EffectiveWorkers() const {
  if (const char* env = std::getenv(kWorkerEnvVar)) {
    const int n = std::atoi(env);
    if (n < 1) {
      throw ConfigError(std::string(kWorkerEnvVar) + " must be a positive integer");
    }
    return n;
  }
  return workers;
}

KeyValueConfig PipelineConfig::ToConfig() const {
  KeyValueConfig c;
  c.SetInt("n_clips", n_clips);
  c.Set("output_dir", output_dir);
  if (!planner_config.empty()) c.Set("planner_config", planner_config);
  if (!robot_config.empty()) c.Set("robot_config", robot_config);
  if (!tracking_config.empty()) c.Set("tracking_config", tracking_config);
  c.SetInt("workers", workers);
  c.Set("seed_base", std::to_string(seed_base));
  c.SetInt("distortion", distortion ? 1 : 0);
  c.SetInt("distortions_per_clip", distortions_per_clip);
  c.SetInt("flat_terrain", flat_terrain ? 1 : 0);
  c.SetInt("retries", retries);
  return c;
}

PipelineConfig PipelineConfig::FromConfig(const KeyValueConfig& c) {
  PipelineConfig p;
  p.n_clips = c.GetInt("n_clips", p.n_clips);
  p.output_dir = c.GetString("output_dir", p.output_dir);
  p.planner_config = c.GetString("planner_config", "");
  p.robot_config = c.GetString("robot_config", "");
  p.tracking_config = c.GetString("tracking_config", "");
  p.workers = c.GetInt("workers", p.workers);
  p.seed_base = std::stoull(c.GetString("seed_base", "0"));
  p.distortion = c.GetInt("distortion", 0) != 0;
  p.distortions_per_clip = c.GetInt("distortions_per_clip", 1);
  p.flat_terrain = c.GetInt("flat_terrain", 0) != 0;
  p.retries = c.GetInt("retries", 0);
  p.Validate();
  return p;
}

std::string ClipDirName(std::uint64_t seed) {
  std::string digits = std::to_string(seed);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return "clip_" + digits;
}

HeightField PipelineTerrain(const PipelineConfig& config, std::uint64_t seed) {
  HeightField terrain = GenerateTerrain(seed);
  if (!config.flat_terrain) return terrain;
  return HeightField::Flat(terrain.rows(), terrain.cols(), terrain.cell_size(),
                           terrain.origin(), 0.0);
}

GenerateSummary RunGenerate(const PipelineConfig& config, std::ostream& log) {
  config.Validate();
  const Inputs inputs = LoadInputs(config);
  const int workers = std::min(config.EffectiveWorkers(), config.n_clips);
  const fs::path root(config.output_dir);
  fs::create_directories(root);

  std::mutex mutex;
  std::condition_variable ready;
  std::deque<WorkResult> queue;
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next++; k < config.n_clips; k = next++) {
        WorkResult result;
        try {
          result = GenerateOne(config, inputs, config.seed_base + k);
        } catch (const std::exception& e) {
          result.outcome.seed = config.seed_base + k;
          result.outcome.status = "error";
          result.outcome.message = e.what();
        }
        {
          std::lock_guard lock(mutex);
          queue.push_back(std::move(result));
        }
        ready.notify_one();
      }
    });
  }

  // Single collector: every file is written from this thread.
  GenerateSummary summary;
  summary.requested = config.n_clips;
  int converged = 0;
  for (int received = 0; received < config.n_clips; ++received) {
    WorkResult r;
    {
      std::unique_lock lock(mutex);
      ready.wait(lock, [&] { return !queue.empty(); });
      r = std::move(queue.front());
      queue.pop_front();
    }
    if (r.outcome.converged) ++converged;
    if (r.clip) {
      const fs::path dir = root / r.outcome.directory;
      SaveClip(*r.clip, dir.string());
      SaveClipSources(dir.string(), r.planning_terrain, r.solution,
                      inputs.planner, inputs.model);
      if (config.distortion) {
        DistortionSpec spec;
        DistortClipDir(dir, *r.clip, spec, config.distortions_per_clip);
      }
      ++summary.saved;
    }
    log << "seed " << r.outcome.seed << ": " << r.outcome.status
        << " attempts=" << r.outcome.attempts
        << " violation=" << FormatDouble(r.outcome.max_violation)
        << (r.clip ? " saved " + r.outcome.directory : std::string(" skipped"))
        << (r.outcome.message.empty() ? "" : " (" + r.outcome.message + ")")
        << "\n";
    summary.clips.push_back(std::move(r.outcome));
  }
  pool.clear();

  std::sort(summary.clips.begin(), summary.clips.end(),
            [](const auto& a, const auto& b) { return a.seed < b.seed; });
  summary.convergence_rate = static_cast<double>(converged) / config.n_clips;
  KeyValueConfig manifest;
  manifest.SetInt("requested", summary.requested);
  manifest.SetInt("saved", summary.saved);
  manifest.SetDouble("convergence_rate", summary.convergence_rate);
  manifest.Set("seed_base", std::to_string(config.seed_base));
  manifest.SetInt("flat_terrain", config.flat_terrain ? 1 : 0);
  manifest.SetInt("retries", config.retries);
  manifest.Set("robot_hash", inputs.model.Hash());
  manifest.Set("planner_hash", HexDigest(Fnv1a64(inputs.planner.ToConfig().ToString())));
  for (const auto& c : summary.clips) {
    manifest.Set("seed_" + std::to_string(c.seed),
                 c.status + " " + std::to_string(c.attempts) + " " +
                     FormatDouble(c.max_violation) + " " +
                     (c.saved ? c.directory : std::string("-")));
  }
  manifest.Save((root / "summary.txt").string());
  log << "saved " << summary.saved << "/" << summary.requested
      << " clips, convergence rate " << FormatDouble(summary.convergence_rate)
      << "\n";
  return summary;
}

std::vector<std::string> ListClipDirs(const std::string& dataset_dir) {
  if (!fs::is_directory(dataset_dir)) {
    throw DatasetError("no dataset directory " + dataset_dir);
  }
  std::vector<std::string> dirs;
  for (const auto& entry : fs::directory_iterator(dataset_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.txt")) {
      dirs.push_back(entry.path().string());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

int RunDistort(const std::string& dataset_dir, const DistortionSpec& spec,
               int per_clip, std::ostream& log) {
  if (per_clip < 1) throw ConfigError("distortions per clip must be >= 1");
  int written = 0;
  for (const auto& dir : ListClipDirs(dataset_dir)) {
    const TrajectoryClip clip = LoadClip(dir);
    written += DistortClipDir(dir, clip, spec, per_clip);
    log << dir << ": " << per_clip << " distorted terrains\n";
  }
  return written;
}

std::vector<ClipAudit> RunAudit(const std::string& dataset_dir,
                                const AuditThresholds& thresholds,
                                std::ostream& log) {
  std::vector<ClipAudit> audits;
  for (const auto& dir : ListClipDirs(dataset_dir)) {
    ClipAudit a;
    a.directory = dir;
    try {
      const fs::path root(dir);
      const TrajectoryClip clip = LoadClip(dir);
      const RobotModel model = RobotModel::Load((root / "robot.txt").string());
      const PlannerConfig config =
          PlannerConfig::Load((root / "planner.txt").string());
      const HeightField terrain =
          LoadHeightFieldText((root / "terrain.txt").string());
      const CentroidalSolution solution = CentroidalSolution::FromConfig(
          KeyValueConfig::Load((root / "solution.txt").string()));

      a.problems = CheckClipInvariants(clip, model);
      if (model.Hash() != clip.robot_hash) {
        a.problems.push_back("robot config hash differs from the clip manifest");
      }
      if (!solution.converged()) a.problems.push_back("solution did not converge");

      a.residuals = AuditSolution(solution, terrain, model, config);
      if (!(a.residuals.max_residual <= thresholds.max_residual)) {
        a.problems.push_back("max residual " +
                             FormatDouble(a.residuals.max_residual));
      }
      const double force_floor =
          -thresholds.force_fraction * a.residuals.force_max;
      if (!(a.residuals.min_normal_force_fine >= force_floor)) {
        a.problems.push_back("normal force " +
                             FormatDouble(a.residuals.min_normal_force_fine) +
                             " N below " + FormatDouble(force_floor));
      }
      if (!(a.residuals.min_swing_clearance_fine >= thresholds.swing_clearance)) {
        a.problems.push_back("swing clearance " +
                             FormatDouble(a.residuals.min_swing_clearance_fine));
      }
      TrajectoryClip resampled = SampleClip(solution, clip.TerrainPatch(), model);
      resampled.terrain_seed = clip.terrain_seed;
      if (!(resampled == clip)) {
        a.problems.push_back("clip differs from a resampling of its solution");
      }
    } catch (const std::exception& e) {
      a.problems.push_back(e.what());
    }
    a.ok = a.problems.empty();
    log << (a.ok ? "OK   " : "FAIL ") << dir << "  "
        << a.residuals.Summary() << "\n";
    for (const auto& p : a.problems) log << "     " << p << "\n";
    audits.push_back(std::move(a));
  }
  return audits;
}

DatasetStats RunStats(const std::string& dataset_dir, const std::string& out_dir,
                      double max_x, std::ostream& log) {
  std::vector<TrajectoryClip> clips;
  for (const auto& dir : ListClipDirs(dataset_dir)) clips.push_back(LoadClip(dir));
  DatasetStats stats = ComputeDatasetStats(clips, max_x);
  fs::create_directories(out_dir);
  WriteText(fs::path(out_dir) / "contacts.tsv", stats.ContactTable());
  WriteText(fs::path(out_dir) / "velocity.tsv", stats.VelocityTable());
  log << clips.size() << " clips, " << stats.onsets.size()
      << " contact onsets with x <= " << FormatDouble(max_x) << "\n";
  return stats;
}

std::vector<std::string> RunEnvgen(const std::string& kind, std::uint64_t seed,
                                   const std::string& out_dir) {
  fs::create_directories(out_dir);
  const std::string stem =
      (fs::path(out_dir) / (kind + "_" + std::to_string(seed))).string();
  std::vector<std::string> written;
  if (kind == "perlin") {
    SaveHeightFieldText(BuildPerlinSegment(seed), stem + ".txt");
    return {stem + ".txt"};
  }
  Track track;
  if (kind == "stairs") {
    track = BuildStairs(seed);
  } else if (kind == "procedural") {
    track = BuildProceduralTrack(seed);
  } else if (kind == "wavy") {
    track = BuildWavySteps(seed);
  } else if (kind == "mixed") {
    track = BuildMixed(seed);
  } else {
    throw ConfigError("unknown environment kind '" + kind + "'");
  }
  SaveHeightFieldText(track.field, stem + ".txt");
  WriteText(stem + "_boxes.txt", BoxListText(track.spec.boxes));
  WriteText(stem + "_spec.txt", TrackSpecText(track.spec));
  return {stem + ".txt", stem + "_boxes.txt", stem + "_spec.txt"};
}

void InjectJacobianFault(nlp::NlpProblem& problem, const std::string& block,
                         int row, int col, double delta) {
  for (auto& b : problem.mutable_blocks()) {
    if (b.name != block) continue;
    if (row < 0 || row >= b.rows || col < 0 || col >= problem.variable_count()) {
      throw ConfigError("fault entry outside block " + block);
    }
    auto inner = b.eval;
    b.eval = [inner, row, col, delta](const Eigen::VectorXd& x,
                                      Eigen::Ref<Eigen::VectorXd> r,
                                      std::vector<nlp::Triplet>* jac) {
      inner(x, r, jac);
      if (jac) jac->emplace_back(row, col, delta);
    };
    return;
  }
  throw ConfigError("no constraint block named '" + block + "'");
}

std::vector<nlp::JacobianCheck> RunCheckJacobians(
    const HeightField& terrain, const RobotModel& model,
    const PlannerConfig& config, std::uint64_t seed,
    const std::string& inject_fault_block) {
  CentroidalProblem problem(terrain, model, config);
  const Eigen::VectorXd x = problem.Initialize(seed);
  if (!inject_fault_block.empty()) {
    int row = 0, col = 0;
    for (const auto& b : problem.nlp().blocks()) {
      if (b.name != inject_fault_block) continue;
      Eigen::VectorXd r(b.rows);
      std::vector<nlp::Triplet> jac;
      b.eval(x, r, &jac);
      for (const auto& t : jac) {
        if (t.value() != 0.0) {
          row = t.row();
          col = t.col();
          break;
        }
      }
    }
    InjectJacobianFault(problem.mutable_nlp(), inject_fault_block, row, col, 0.5);
  }
  return nlp::CheckJacobians(problem.nlp(), x);
}

}  // namespace timit
