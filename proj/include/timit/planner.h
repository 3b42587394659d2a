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

#ifndef TIMIT_PLANNER_H_
#define TIMIT_PLANNER_H_

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "timit/config_file.h"
#include "timit/heightfield.h"
#include "timit/nlp.h"
#include "timit/robot_model.h"
#include "timit/spline.h"

namespace timit {

class PlannerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Gait {
  kTrot,   // alternating diagonal pairs with a short flight phase
  kStand,  // one stance phase per leg over the whole horizon
};

struct PlannerConfig {
  double horizon = 4.6;
  Eigen::Vector2d goal_displacement{2.3, 0.0};
  // CoM xy at t = 0. The CoM height follows from the terrain under the
  // nominal footprint.
  Eigen::Vector2d start_xy{0.3, 0.0};
  double dynamics_dt = 0.1;
  double force_constraint_dt = 0.08;
  double swing_constraint_dt = 0.04;
  // Per-foot normal force bound; <= 0 selects 2 m g.
  double force_bound_max = 0.0;
  double min_phase_duration = 0.1;
  double max_phase_duration = 1.5;
  double init_pos_noise_sigma = 0.10;
  double init_force_noise_sigma = 5.0;
  double gravity = 9.81;

  int com_segments = 10;
  int swing_segments = 3;
  int force_segments = 3;
  Gait gait = Gait::kTrot;
  // Swing phases per leg; 0 selects max(1, round(4 T / 4.6)).
  int swings_per_leg = 0;
  // Trot initializer timing.
  double trot_start_margin = 0.2;
  double trot_flight = 0.04;
  double swing_apex = 0.08;
  // Kinematic boxes follow the full base orientation; false rotates them
  // with yaw only.
  bool full_orientation_boxes = true;

  nlp::SolverOptions solver;

  void Validate() const;
  double ForceMax(const RobotModel& model) const;
  int SwingsPerLeg() const;

  KeyValueConfig ToConfig() const;
  static PlannerConfig FromConfig(const KeyValueConfig& config);
  static PlannerConfig Load(const std::string& path);
};

// Nominal fly-trot timing: LF/RH swing first, RF/LH second, consecutive
// swings overlap by the flight time. Every leg begins and ends in stance.
PhaseSchedule TrotSchedule(const PlannerConfig& config);
PhaseSchedule StandSchedule(const PlannerConfig& config);
PhaseSchedule NominalSchedule(const PlannerConfig& config);

// Where each group of decision variables lives in the flat vector.
//
//   CoM and orientation: (com_segments + 1) nodes x (pos, vel) each.
//   Foot, stance phase:  one constant position (3).
//   Foot, swing phase:   (swing_segments - 1) interior nodes x (pos, vel).
//   Force, stance phase: (force_segments + 1) nodes x (pos, vel).
//   Force, swing phase:  none (identically zero).
//   Phase durations:     one per phase.
struct LegLayout {
  std::vector<bool> stance;
  std::vector<int> foot;   // first index of the phase's foot variables
  std::vector<int> force;  // first index of the phase's force nodes, or -1
  int durations = 0;
  int phase_count() const { return static_cast<int>(stance.size()); }
};

struct VariableLayout {
  int com = 0;
  int orientation = 0;
  int body_nodes = 0;
  std::array<LegLayout, kNumLegs> legs;
  int total = 0;

  static VariableLayout Build(const PlannerConfig& config,
                              const PhaseSchedule& schedule);
  // Closed-form count for the same layout.
  static int ExpectedCount(const PlannerConfig& config,
                           const PhaseSchedule& schedule);
};

struct CentroidalSolution {
  PhaseSpline com;
  PhaseSpline orientation;  // Z-Y-X Euler angles (roll, pitch, yaw)
  std::array<PhaseSpline, kNumLegs> feet;
  std::array<PhaseSpline, kNumLegs> forces;
  PhaseSchedule schedule;
  nlp::SolveReport report;
  Eigen::VectorXd variables;
  std::uint64_t seed = 0;
  int terrain_clamps = 0;

  bool converged() const {
    return report.status == nlp::SolveStatus::kConverged;
  }
  double horizon() const { return com.total_duration(); }

  KeyValueConfig ToConfig() const;
  static CentroidalSolution FromConfig(const KeyValueConfig& config);
};

// The centroidal trajectory optimization over one terrain.
class CentroidalProblem {
 public:
  // Throws PlannerError when the start or goal footprint is off the terrain.
  CentroidalProblem(const HeightField& terrain, const RobotModel& model,
                    const PlannerConfig& config);

  const nlp::NlpProblem& nlp() const { return problem_; }
  nlp::NlpProblem& mutable_nlp() { return problem_; }
  const VariableLayout& layout() const;
  const PhaseSchedule& nominal_schedule() const;
  const Eigen::Vector3d& start_com() const;
  const Eigen::Vector3d& goal_com() const;
  const std::array<Eigen::Vector3d, kNumLegs>& start_feet() const;

  // Nominal trot initialization plus Gaussian noise, clamped to the bounds.
  Eigen::VectorXd Initialize(std::uint64_t seed) const;
  // Noise-free initialization (sigmas zero).
  Eigen::VectorXd Nominal() const;

  CentroidalSolution Extract(const Eigen::VectorXd& x) const;

  // Terrain queries that fell outside the footprint and were clamped.
  int terrain_clamp_count() const;

  struct Context;

 private:
  std::shared_ptr<Context> context_;
  nlp::NlpProblem problem_;
};

CentroidalSolution Plan(const HeightField& terrain, const RobotModel& model,
                        const PlannerConfig& config, std::uint64_t seed);

// Independent residual recomputation from the solution splines. All values
// follow the solver's row scaling: dynamics and force quantities divided by
// m g, positions in metres.
struct AuditReport {
  double dynamics = 0.0;       // max |residual| on the dynamics grid
  double force = 0.0;          // max violation, nodes and force grid
  double swing = 0.0;          // max violation, swing nodes and grid
  double stance_pin = 0.0;     // max |z - h| of stance feet
  double kinematics = 0.0;     // max box violation on the dynamics grid
  double phase_sum = 0.0;      // max |sum of durations - T|
  double boundary = 0.0;       // max start/goal condition error
  double max_residual = 0.0;   // max of the above

  // Densely sampled (0.01 s) diagnostics.
  double min_normal_force_fine = 0.0;  // N, over stance phases
  double min_swing_clearance_fine = 0.0;  // foot z - terrain, m
  double max_stance_drift = 0.0;       // per-phase foot displacement, m
  double force_max = 0.0;              // N

  std::string Summary() const;
};

AuditReport AuditSolution(const CentroidalSolution& solution,
                          const HeightField& terrain, const RobotModel& model,
                          const PlannerConfig& config);

}  // namespace timit

#endif  // TIMIT_PLANNER_H_
