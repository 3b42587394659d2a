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

#ifndef TIMIT_TRACKING_H_
#define TIMIT_TRACKING_H_

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "timit/config_file.h"
#include "timit/dataset.h"
#include "timit/heightfield.h"
#include "timit/robot_model.h"

namespace timit {

class TrackingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrackingConfig {
  double tau = 0.5;
  // Order: com, ee, linvel, angvel, quat.
  std::array<double, 5> weights{0.2, 0.2, 0.2, 0.2, 0.2};
  std::array<double, 5> exponents{80.0, 80.0, 10.0, 10.0, 2.0};

  int image_pixels = 32;
  double image_extent = 1.7;
  double image_ahead = 0.40;
  double image_rate = 10.0;
  double control_rate = 100.0;
  int command_lookahead = 10;

  double finetune_velocity = 0.5;
  Eigen::Vector2d eval_command{0.05, 0.0};

  // Bodies entering the truncation error, from {base, LF, RF, LH, RH}.
  std::vector<std::string> bodies{"base", "LF", "RF", "LH", "RH"};

  void Validate() const;
  // Frames between two image refreshes.
  int ImagePeriod() const;

  KeyValueConfig ToConfig() const;
  static TrackingConfig FromConfig(const KeyValueConfig& config);
  static TrackingConfig Load(const std::string& path);
};

// Simulated (or reference) robot state. Quantities are world-frame unless
// noted; the quaternion is (w, x, y, z) and rotates base to world.
struct SimState {
  std::vector<Eigen::Vector3d> body_positions;
  Eigen::VectorXd joints;
  Eigen::VectorXd joint_velocities;
  Eigen::Vector3d com_pos = Eigen::Vector3d::Zero();
  Eigen::Vector3d com_linvel = Eigen::Vector3d::Zero();
  Eigen::Vector3d com_angvel = Eigen::Vector3d::Zero();
  Eigen::Quaterniond base_quat = Eigen::Quaterniond::Identity();
  std::array<Eigen::Vector3d, kNumLegs> ee_pos{};
  Eigen::VectorXd previous_action;
};

// Frame of a clip as a state, with body_positions following config.bodies.
SimState StateFromClip(const TrajectoryClip& clip, int frame,
                       const TrackingConfig& config);

struct Truncation {
  double epsilon = 0.0;
  double r_trunc = 1.0;
  bool terminate = false;
};

// Mean L1 distance over body positions divided by 3, plus mean absolute
// joint error. Terminates when epsilon reaches tau.
Truncation TruncationError(const SimState& sim, const SimState& ref,
                           const TrackingConfig& config);

struct TrackingRewards {
  double com = 0.0;
  double ee = 0.0;
  double linvel = 0.0;
  double angvel = 0.0;
  double quat = 0.0;
  double total = 0.0;

  std::array<double, 5> terms() const { return {com, ee, linvel, angvel, quat}; }
};

// Orientation error is the rotation angle of ref^-1 * sim.
TrackingRewards ComputeTrackingRewards(const SimState& sim, const SimState& ref,
                                       const TrackingConfig& config);

// Fine-tuning reward: the CoM term with its error replaced by
// (v_x - v_target)^2 + (p^y_com)^2, using the simulated lateral position.
double FinetuneReward(const SimState& sim, const TrackingConfig& config);

// A contact between two bodies; kEnvironment marks the terrain.
inline constexpr int kEnvironment = -1;
struct BodyContact {
  int body_a = kEnvironment;
  int body_b = kEnvironment;
};

// True when any contact is not between an end-effector and the environment.
bool NonEndEffectorContact(std::span<const BodyContact> contacts,
                           std::span<const int> end_effector_bodies);

// Pose of the base when the height image was last refreshed.
struct ImageAnchor {
  int frame = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  // Row r runs forward, column c to the left, in the yaw frame.
  Eigen::MatrixXd image;
};

enum class CommandMode { kClip, kEvaluation };

// Feature tuple, flattened by Flatten() in this order:
//   M (32 x 32, row-major), q (12), qdot (12), v (3), omega (3),
//   p (12, feet relative to the base in the base frame), h (1),
//   c (3), X (9, row-major), X_hat (9, row-major), previous action,
//   p^y_com (1), z (2).
// v and omega are expressed in the base frame; h is the base height above
// the terrain under the CoM.
struct Observation {
  Eigen::MatrixXd height_image;
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
  Eigen::Vector3d linvel = Eigen::Vector3d::Zero();
  Eigen::Vector3d angvel = Eigen::Vector3d::Zero();
  std::array<Eigen::Vector3d, kNumLegs> feet{};
  double height = 0.0;
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  Eigen::Matrix3d X = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d X_hat = Eigen::Matrix3d::Identity();
  Eigen::VectorXd previous_action;
  double com_y = 0.0;
  Eigen::Vector2d command = Eigen::Vector2d::Zero();
  // The anchor to pass to the next call.
  ImageAnchor anchor;

  Eigen::VectorXd Flatten() const;
};

// Heights of the image_extent square centred image_ahead in front of the
// CoM, in the yaw frame. Pixels off the terrain take the nearest edge height.
Eigen::MatrixXd LocalHeightImage(const HeightField& terrain,
                                 const Eigen::Vector3d& com,
                                 const Eigen::Matrix3d& base_rotation,
                                 const TrackingConfig& config);

// Images refresh on frames that are multiples of ImagePeriod() or when no
// anchor exists yet; otherwise the previous image and anchor carry over.
Observation AssembleObservation(const SimState& sim, const HeightField& terrain,
                                const TrajectoryClip& clip, int frame,
                                const ImageAnchor* last,
                                const TrackingConfig& config,
                                CommandMode mode = CommandMode::kClip);

// Per-frame rewards and truncation of a simulated trace against a clip, as a
// tab-separated table. Both clips must have the same frame count.
struct TraceEvaluation {
  std::vector<TrackingRewards> rewards;
  std::vector<Truncation> truncation;
  int first_termination = -1;

  std::string Table() const;
};
TraceEvaluation EvaluateTrace(const TrajectoryClip& sim,
                              const TrajectoryClip& ref,
                              const TrackingConfig& config);

}  // namespace timit

#endif  // TIMIT_TRACKING_H_
