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

#ifndef TIMIT_ROBOT_MODEL_H_
#define TIMIT_ROBOT_MODEL_H_

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "timit/config_file.h"

namespace timit {

inline constexpr int kNumLegs = 4;
inline constexpr int kNumJoints = 12;

// Leg order used by every array in the toolkit.
enum Leg : int { kLF = 0, kRF = 1, kLH = 2, kRH = 3 };
inline constexpr std::array<const char*, kNumLegs> kLegNames = {"LF", "RF",
                                                                "LH", "RH"};
inline bool IsFrontLeg(int leg) { return leg == kLF || leg == kRF; }

using Vector12d = Eigen::Matrix<double, kNumJoints, 1>;

class KinematicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct JointLimits {
  double lower = 0.0;
  double upper = 0.0;
};

// Single-rigid-body mass properties plus the 3-DoF (HAA, HFE, KFE) leg
// geometry. Each hip is a point at `hip_offsets[leg]` in the base frame; HAA
// rotates about base x, HFE and KFE about the rotated y axis. With all joint
// angles zero a leg hangs straight down. Positive HFE swings the foot
// backwards.
struct RobotModel {
  double mass = 30.0;
  Eigen::Matrix3d body_inertia =
      Eigen::Vector3d(0.95, 1.95, 2.02).asDiagonal();
  std::array<Eigen::Vector3d, kNumLegs> hip_offsets{
      Eigen::Vector3d(0.277, 0.234, 0.0), Eigen::Vector3d(0.277, -0.234, 0.0),
      Eigen::Vector3d(-0.277, 0.234, 0.0),
      Eigen::Vector3d(-0.277, -0.234, 0.0)};
  double upper_leg_length = 0.25;
  double lower_leg_length = 0.33;
  // Depth of the nominal foot below its hip; also the nominal base height.
  double nominal_foot_depth = 0.42;
  std::array<Eigen::Vector3d, kNumLegs> box_centers;
  std::array<Eigen::Vector3d, kNumLegs> box_half_extents;
  double friction_mu = 0.5;
  std::array<JointLimits, kNumJoints> joint_limits;

  RobotModel();

  void Validate() const;

  Eigen::Vector3d NominalFootBase(int leg) const {
    return hip_offsets[leg] - Eigen::Vector3d(0.0, 0.0, nominal_foot_depth);
  }
  double MaxReach() const { return upper_leg_length + lower_leg_length; }
  double MinReach() const;

  KeyValueConfig ToConfig() const;
  static RobotModel FromConfig(const KeyValueConfig& config);
  static RobotModel Load(const std::string& path);
  void Save(const std::string& path) const;
  // Fingerprint of the canonical config text.
  std::string Hash() const;
};

struct BasePose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

struct JointState {
  Vector12d q = Vector12d::Zero();
  Vector12d qdot = Vector12d::Zero();
};

bool WithinJointLimits(const RobotModel& model, const Vector12d& q);

// Foot position relative to the hip, in the base frame.
Eigen::Vector3d LegForwardKinematics(const RobotModel& model,
                                     const Eigen::Vector3d& leg_q);

std::array<Eigen::Vector3d, kNumLegs> ForwardKinematics(
    const RobotModel& model, const BasePose& base, const Vector12d& q);

// Geometric IK for one leg. Returns (HAA, HFE, KFE) with the knee in the
// x-configuration: KFE <= 0 for front legs, >= 0 for hind legs. Throws
// KinematicsError when the target lies outside the reachable annulus;
// targets within 1e-9 m outside the boundary snap to the straight-knee
// solution.
Eigen::Vector3d InverseKinematics(const RobotModel& model, const BasePose& base,
                                  const Eigen::Vector3d& foot_world, int leg);

Vector12d InverseKinematicsAll(
    const RobotModel& model, const BasePose& base,
    const std::array<Eigen::Vector3d, kNumLegs>& feet_world);

// Joint angles that put every foot at its nominal position.
Vector12d NominalJointAngles(const RobotModel& model);

// Central differences in the interior, one-sided at the ends.
std::vector<Vector12d> JointVelocitiesByDifferences(
    std::span<const Vector12d> q, double dt = 0.01);

}  // namespace timit

#endif  // TIMIT_ROBOT_MODEL_H_
