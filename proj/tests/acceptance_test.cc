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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. The optional first argument is the path of the
// command-line tool, used for the exit-code checks.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "timit/dataset.h"
#include "timit/envgen.h"
#include "timit/heightfield.h"
#include "timit/nlp.h"
#include "timit/pipeline.h"
#include "timit/planner.h"
#include "timit/random.h"
#include "timit/robot_model.h"
#include "timit/rotation.h"
#include "timit/spline.h"
#include "timit/tracking.h"

namespace timit {
namespace {

namespace fs = std::filesystem;

std::string g_cli;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void Require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

using Check = std::function<void(Outcome&)>;

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

double RelError(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

std::string ReadBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("timit_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int RunCli(const std::string& args) {
  const std::string cmd = "\"" + g_cli + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

HeightField FlatPlanningTerrain() {
  const HeightField patch = GenerateTerrain(0);
  return EmbedCentered(HeightField::Flat(patch.rows(), patch.cols(),
                                         patch.cell_size(), patch.origin(), 0.0),
                       46, 46)
      .field;
}

PlannerConfig FlatTrot() {
  PlannerConfig c;
  c.horizon = 2.0;
  c.goal_displacement = {0.5, 0.0};
  return c;
}

void TerrainGeneration(Outcome& out) {
  const auto start = std::chrono::steady_clock::now();
  int bad = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const HeightField f = GenerateTerrain(seed);
    const bool ok = f.rows() == 16 && f.cols() == 16 &&
                    std::abs(f.MaxHeight() - kTerrainMaxHeight) <=
                        1e-6 * kTerrainMaxHeight &&
                    f.MinHeight() >= 0.0;
    bad += ok ? 0 : 1;
    if (seed % 100 == 0) out.Require(GenerateTerrain(seed) == f, "determinism");
  }
  const double t = Seconds(start);
  out.Require(bad == 0, std::to_string(bad) + " terrains out of spec");
  out.Require(t < 5.0, "runtime");
  out.detail << "1000 terrains, " << bad << " bad, " << t << " s";
}

PhaseSpline RandomSpline(Rng& rng, int segments) {
  std::vector<SplineNode> nodes(segments + 1);
  for (auto& n : nodes) {
    for (int a = 0; a < 3; ++a) {
      n.pos[a] = rng.Uniform(-1.0, 1.0);
      n.vel[a] = rng.Uniform(-2.0, 2.0);
    }
  }
  std::vector<double> durations(segments);
  for (auto& d : durations) d = rng.Uniform(0.1, 0.8);
  return PhaseSpline(nodes, durations);
}

void SplineGradients(Outcome& out) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(2024);
  const double h = 1e-6;
  double worst_param = 0.0, worst_duration = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const PhaseSpline s = RandomSpline(rng, 4);
    double t = rng.Uniform(0.0, s.total_duration());
    // Keep the point away from knots so the differences stay on one piece.
    for (double knot = 0.0; const double d : s.durations()) {
      knot += d;
      if (std::abs(t - knot) < 1e-3) t = knot - 2e-3;
    }
    const auto loc = s.Locate(t);
    for (int order = 0; order < 3; ++order) {
      const auto w = HermiteWeights(loc.tau, s.durations()[loc.segment], order);
      for (int p = 0; p < 4; ++p) {
        auto plus = s.nodes(), minus = s.nodes();
        const int node = loc.segment + p / 2;
        ((p % 2 == 0) ? plus[node].pos : plus[node].vel).y() += h;
        ((p % 2 == 0) ? minus[node].pos : minus[node].vel).y() -= h;
        const double fd =
            (PhaseSpline(plus, s.durations()).Derivative(t, order).y() -
             PhaseSpline(minus, s.durations()).Derivative(t, order).y()) /
            (2 * h);
        worst_param = std::max(worst_param, RelError(w[p], fd));
      }
      const Eigen::Matrix3Xd g = s.DurationGradient(t, order);
      for (int k = 0; k < s.segment_count(); ++k) {
        auto plus = s.durations(), minus = s.durations();
        plus[k] += h;
        minus[k] -= h;
        const Eigen::Vector3d fd =
            (PhaseSpline(s.nodes(), plus).Derivative(t, order) -
             PhaseSpline(s.nodes(), minus).Derivative(t, order)) /
            (2 * h);
        for (int a = 0; a < 3; ++a) {
          worst_duration = std::max(worst_duration, RelError(g(a, k), fd[a]));
        }
      }
    }
  }
  const double t = Seconds(start);
  out.Require(worst_param < 1e-4, "parameter gradient");
  out.Require(worst_duration < 1e-4, "duration gradient");
  out.Require(t < 10.0, "runtime");
  out.detail << "100 splines, worst rel error param " << worst_param
             << " duration " << worst_duration << ", " << t << " s";
}

void PlannerFeasibility(Outcome& out) {
  const auto start = std::chrono::steady_clock::now();
  const HeightField terrain = FlatPlanningTerrain();
  const RobotModel model;
  const PlannerConfig config = FlatTrot();
  int passed = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CentroidalSolution s = Plan(terrain, model, config, seed);
    const AuditReport a = AuditSolution(s, terrain, model, config);
    const bool ok = s.converged() && a.max_residual <= 1e-3 &&
                    a.min_normal_force_fine >= -0.05 * a.force_max &&
                    a.min_swing_clearance_fine >= -0.01;
    passed += ok ? 1 : 0;
    per_seed << (ok ? '+' : '-');
  }
  const double t = Seconds(start);
  out.Require(passed >= 8, "fewer than 8 seeds pass");
  out.Require(t < 600.0, "runtime");
  out.detail << passed << "/10 seeds pass [" << per_seed.str() << "], " << t << " s";
}

void StaticStanding(Outcome& out) {
  const auto start = std::chrono::steady_clock::now();
  const HeightField terrain = FlatPlanningTerrain();
  const RobotModel model;
  PlannerConfig config;
  config.horizon = 2.0;
  config.goal_displacement = {0.0, 0.0};
  config.gait = Gait::kStand;
  config.init_pos_noise_sigma = 0.0;
  const CentroidalSolution s = Plan(terrain, model, config, 0);
  const AuditReport a = AuditSolution(s, terrain, model, config);
  const double share = model.mass * config.gravity / 4.0;
  double worst = 0.0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    for (int k = 0; k <= 200; ++k) {
      const double fz = s.forces[leg].Eval(s.horizon() * k / 200.0).pos.z();
      worst = std::max(worst, std::abs(fz - share) / share);
    }
  }
  const double t = Seconds(start);
  out.Require(s.converged(), "not converged");
  out.Require(a.max_residual <= 1e-4, "audited residual");
  out.Require(worst <= 0.10, "foot force share");
  out.Require(t < 30.0, "runtime");
  out.detail << "residual " << a.max_residual << ", worst force deviation "
             << 100 * worst << "%, " << t << " s";
}

void InverseKinematicsRoundTrip(Outcome& out) {
  const RobotModel m;
  Rng rng(5);
  double worst = 0.0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    int sign = 0;
    bool constant = true;
    for (int k = 0; k < 1000; ++k) {
      BasePose pose;
      pose.position = Eigen::Vector3d(rng.Uniform(-2, 2), rng.Uniform(-2, 2),
                                      rng.Uniform(0, 1));
      pose.rotation = EulerZyxToMatrix(Eigen::Vector3d(
          rng.Uniform(-0.4, 0.4), rng.Uniform(-0.4, 0.4), rng.Uniform(-3, 3)));
      const double r = rng.Uniform(m.MinReach() + 0.02, m.MaxReach() - 1e-3);
      const double pitch = rng.Uniform(-0.8, 0.8);
      const double roll = rng.Uniform(-0.6, 0.6);
      const Eigen::Vector3d local =
          m.hip_offsets[leg] + Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()) *
                                   Eigen::Vector3d(r * std::sin(pitch), 0.0,
                                                   -r * std::cos(pitch));
      const Eigen::Vector3d target = pose.position + pose.rotation * local;
      const Eigen::Vector3d q = InverseKinematics(m, pose, target, leg);
      Vector12d all = Vector12d::Zero();
      all.segment<3>(3 * leg) = q;
      worst = std::max(worst, (ForwardKinematics(m, pose, all)[leg] - target).norm());
      const int s = q[2] > 0 ? 1 : (q[2] < 0 ? -1 : 0);
      if (sign == 0) sign = s;
      constant = constant && s == sign && s != 0;
    }
    out.Require(constant, "knee sign changes on leg " + std::to_string(leg));
  }
  out.Require(worst < 1e-6, "round trip error");
  out.detail << "4000 targets, worst FK error " << worst << " m";
}

SimState BaseState() {
  SimState s;
  const TrackingConfig config;
  for (size_t i = 0; i < config.bodies.size(); ++i) {
    s.body_positions.push_back(Eigen::Vector3d(0.1 * i, 0.2, 0.5));
  }
  s.joints = Eigen::VectorXd::Zero(12);
  s.joint_velocities = Eigen::VectorXd::Zero(12);
  s.com_pos = Eigen::Vector3d(0.3, 0.0, 0.45);
  s.com_linvel = Eigen::Vector3d(0.5, 0.0, 0.0);
  s.previous_action = Eigen::VectorXd::Zero(12);
  return s;
}

void TrackingMath(Outcome& out) {
  const TrackingConfig config;
  const SimState ref = BaseState();

  const TrackingRewards perfect = ComputeTrackingRewards(ref, ref, config);
  for (double term : perfect.terms()) out.Require(term == 0.2, "perfect term");
  out.Require(perfect.total == 1.0, "perfect total");

  SimState sim = ref;
  sim.com_pos.x() += std::sqrt(std::log(2.0) / 80.0);
  const double r_com = ComputeTrackingRewards(sim, ref, config).com;
  out.Require(std::abs(r_com - 0.1) <= 1e-9, "r_com at ln2/80");

  const Truncation none = TruncationError(ref, ref, config);
  out.Require(none.epsilon == 0.0 && none.r_trunc == 1.0 && !none.terminate,
              "identical states");
  sim = ref;
  for (int j = 0; j < 12; ++j) sim.joints[j] += (j % 2 ? -1 : 1) * config.tau;
  const Truncation joints = TruncationError(sim, ref, config);
  out.Require(std::abs(joints.epsilon - config.tau) <= 1e-15 &&
                  std::abs(joints.r_trunc) <= 1e-15 && joints.terminate,
              "joints off by tau");
  const double bodies = static_cast<double>(ref.body_positions.size());
  sim = ref;
  sim.body_positions[1].z() += 3.0 * bodies * config.tau * 1.01;
  out.Require(TruncationError(sim, ref, config).terminate, "single body offset");

  sim = ref;
  sim.com_linvel = Eigen::Vector3d(0.5, 0.0, 0.0);
  sim.com_pos.y() = 0.0;
  const double ft = FinetuneReward(sim, config);
  out.Require(ft == 0.2, "fine-tune maximum");
  sim.com_linvel.x() = 0.3;
  out.Require(FinetuneReward(sim, config) < ft, "fine-tune off target");
  out.detail << "total " << perfect.total << ", r_com " << r_com << ", eps(joints) "
             << joints.epsilon << ", fine-tune max " << ft;
}

void Distortion(Outcome& out) {
  Rng rng(7);
  long checked = 0;
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const HeightField patch = GenerateTerrain(3000 + trial);
    std::vector<Eigen::Vector2d> contacts;
    for (int k = 0; k < 8; ++k) {
      contacts.emplace_back(rng.Uniform(0.0, 2.0), rng.Uniform(-1.0, 1.0));
    }
    DistortionSpec spec;
    spec.rng_seed = trial;
    const DistortionResult r = DistortTerrain(patch, contacts, spec);
    const HeightField& before = r.embedded;
    const HeightField& after = r.distorted;
    const double half = 0.5 * spec.contact_patch_side;
    bool ok = after.rows() == 46 && after.cols() == 46 &&
              after.origin() == before.origin() && after.MinHeight() >= 0.0;
    for (const auto& c : contacts) {
      for (int ci = 0; ci + 1 < before.rows(); ++ci) {
        for (int cj = 0; cj + 1 < before.cols(); ++cj) {
          for (int tri = 0; tri < 2; ++tri) {
            const auto v = before.TriangleVertices(ci, cj, tri);
            if (!TriangleOverlapsSquare(before.VertexPosition(v[0][0], v[0][1]),
                                        before.VertexPosition(v[1][0], v[1][1]),
                                        before.VertexPosition(v[2][0], v[2][1]), c,
                                        half)) {
              continue;
            }
            for (const auto& ij : v) {
              ok = ok && after.at(ij[0], ij[1]) == before.at(ij[0], ij[1]);
              ++checked;
            }
          }
        }
      }
      for (int a = 0; a <= 10; ++a) {
        for (int b = 0; b <= 10; ++b) {
          const Eigen::Vector2d p = c + Eigen::Vector2d(-half + 0.01 * a, -half + 0.01 * b);
          ok = ok && after.Query(p)->height == before.Query(p)->height;
        }
      }
    }
    for (const auto& rect : r.rectangles) {
      const auto& range = rect.inner ? spec.inner_scale_range : spec.outer_scale_range;
      ok = ok && rect.factor >= range[0] && rect.factor <= range[1];
    }
    ok = ok && DistortTerrain(patch, contacts, spec).distorted == after;
    failures += ok ? 0 : 1;
  }
  out.Require(failures == 0, std::to_string(failures) + " pairs fail");
  out.detail << "100 pairs, " << checked << " contact vertices checked, "
             << failures << " failures";
}

void Dataset(Outcome& out) {
  const fs::path root = FreshDir("dataset");
  const fs::path planner_file = root.parent_path() / "timit_acceptance_planner.txt";
  FlatTrot().ToConfig().Save(planner_file.string());
  PipelineConfig config;
  config.n_clips = 5;
  config.output_dir = root.string();
  config.planner_config = planner_file.string();
  config.flat_terrain = true;
  std::ostringstream log;
  const GenerateSummary summary = RunGenerate(config, log);
  out.Require(summary.saved == 5, "clips saved");

  const RobotModel model;
  int transition_mismatches = 0;
  for (const auto& dir : ListClipDirs(root.string())) {
    const TrajectoryClip clip = LoadClip(dir);
    out.Require(clip.frames == 201, "frame count");
    const fs::path copy = root.parent_path() / "timit_acceptance_roundtrip";
    fs::remove_all(copy);
    SaveClip(clip, copy.string());
    for (const auto& entry : fs::directory_iterator(copy)) {
      out.Require(ReadBytes(entry.path()) ==
                      ReadBytes(fs::path(dir) / entry.path().filename()),
                  "byte-identical resave of " + entry.path().filename().string());
    }
    out.Require(LoadClip(copy.string()) == clip, "reload equality");
    fs::remove_all(copy);

    const CentroidalSolution s = CentroidalSolution::FromConfig(
        KeyValueConfig::Load((fs::path(dir) / "solution.txt").string()));
    for (int leg = 0; leg < kNumLegs; ++leg) {
      int changes = 0;
      for (int f = 1; f < clip.frames; ++f) {
        changes += clip.Contact(f, leg) != clip.Contact(f - 1, leg);
      }
      transition_mismatches += changes != s.schedule.phase_count(leg) - 1;
    }
  }
  out.Require(transition_mismatches == 0, "contact transitions");
  std::ostringstream audit_log;
  int audit_ok = 0;
  for (const auto& a : RunAudit(root.string(), AuditThresholds(), audit_log)) {
    audit_ok += a.ok ? 1 : 0;
  }
  out.Require(audit_ok == 5, "audit");
  int cli_code = -1;
  if (!g_cli.empty()) {
    cli_code = RunCli("audit \"" + root.string() + "\"");
    out.Require(cli_code == 0, "audit command exit code");
  }
  out.detail << summary.saved << "/5 clips, " << audit_ok << " audited ok, "
             << transition_mismatches << " transition mismatches, audit exit "
             << cli_code;
  fs::remove_all(root);
}

void Envgen(Outcome& out) {
  int problems = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    problems += static_cast<int>(AuditTrackSpec(SampleStairs(seed)).size());
    problems += static_cast<int>(AuditTrackSpec(SampleWavySteps(seed)).size());
    problems += static_cast<int>(AuditTrackSpec(SampleMixed(seed)).size());
  }
  out.Require(problems == 0, std::to_string(problems) + " audit problems");
  out.Require(WavySine(6.0) == 0.0, "sine at 6 m");
  double perlin_max = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    perlin_max = std::max(perlin_max, BuildPerlinSegment(seed).MaxHeight());
  }
  out.Require(perlin_max <= 0.5, "Perlin height");
  out.detail << "3000 track audits, " << problems << " problems, sine(6) "
             << WavySine(6.0) << ", Perlin max " << perlin_max;
}

void Solver(Outcome& out) {
  const nlp::SolverOptions options;
  const nlp::SolveResult box = nlp::Solve(nlp::MakeBoxFeasibilityProblem(), options);
  out.Require(box.report.status == nlp::SolveStatus::kConverged &&
                  box.x[0] >= 1.0 - options.feas_tol && box.x[0] <= 2.0 + options.feas_tol,
              "box feasibility");
  const nlp::SolveResult lin = nlp::Solve(nlp::MakeLinearEqualityProblem(), options);
  out.Require(lin.report.status == nlp::SolveStatus::kConverged &&
                  std::abs(lin.x[0] - 0.5) <= options.feas_tol &&
                  std::abs(lin.x[1] - 0.5) <= options.feas_tol,
              "linear equality");
  const nlp::SolveResult circle = nlp::Solve(nlp::MakeCircleEqualityProblem(), options);
  out.Require(circle.report.status == nlp::SolveStatus::kConverged &&
                  std::abs(circle.x.squaredNorm() - 1.0) <= options.feas_tol,
              "circle equality");

  const HeightField terrain = EmbedCentered(GenerateTerrain(1), 46, 46).field;
  const auto clean = RunCheckJacobians(terrain, RobotModel(), FlatTrot(), 1);
  const auto faulty = RunCheckJacobians(terrain, RobotModel(), FlatTrot(), 1, "dynamics");
  bool clean_ok = true, fault_found = false;
  for (const auto& c : clean) clean_ok = clean_ok && !c.flagged;
  for (const auto& c : faulty) fault_found = fault_found || (c.flagged && c.block == "dynamics");
  out.Require(clean_ok, "clean Jacobians flagged");
  out.Require(fault_found, "injected fault not flagged");
  int cli_fault = -1;
  if (!g_cli.empty()) {
    const std::string args =
        "check-jacobians --seed 1 --set horizon=2 --set \"goal_displacement=0.5 0\"";
    const int cli_clean = RunCli(args);
    cli_fault = RunCli(args + " --inject-fault dynamics");
    out.Require(cli_clean == 0, "check-jacobians exit code without fault");
    out.Require(cli_fault == 1, "check-jacobians exit code with fault");
  }
  out.detail << "violations " << box.report.max_violation << ", "
             << lin.report.max_violation << ", " << circle.report.max_violation
             << "; fault flagged " << (fault_found ? "yes" : "no")
             << ", command exit " << cli_fault;
}

}  // namespace
}  // namespace timit

int main(int argc, char** argv) {
  if (argc > 1) timit::g_cli = argv[1];
  const std::vector<std::pair<std::string, timit::Check>> criteria = {
      {"terrain generation", timit::TerrainGeneration},
      {"spline gradients", timit::SplineGradients},
      {"planner feasibility", timit::PlannerFeasibility},
      {"static standing", timit::StaticStanding},
      {"inverse kinematics", timit::InverseKinematicsRoundTrip},
      {"tracking math", timit::TrackingMath},
      {"terrain distortion", timit::Distortion},
      {"dataset", timit::Dataset},
      {"environment generation", timit::Envgen},
      {"nlp solver", timit::Solver},
  };
  int failed = 0;
  for (size_t k = 0; k < criteria.size(); ++k) {
    timit::Outcome out;
    try {
      criteria[k].second(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << "exception: " << e.what();
    }
    failed += out.pass ? 0 : 1;
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << k + 1 << ": "
              << criteria[k].first << " (" << out.detail.str() << ")" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
