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

#include "timit/robot_model.h"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "timit/random.h"
#include "timit/rotation.h"

namespace timit {
namespace {

// Knee position relative to the hip, from the joint angles.
Eigen::Vector3d KneeLocal(const RobotModel& m, const Eigen::Vector3d& q) {
  const Eigen::Vector3d planar(-m.upper_leg_length * std::sin(q[1]), 0.0,
                               -m.upper_leg_length * std::cos(q[1]));
  return Eigen::AngleAxisd(q[0], Eigen::Vector3d::UnitX()) * planar;
}

BasePose RandomPose(Rng& rng) {
  BasePose pose;
  pose.position = Eigen::Vector3d(rng.Uniform(-2, 2), rng.Uniform(-2, 2),
                                  rng.Uniform(0, 1));
  pose.rotation = EulerZyxToMatrix(Eigen::Vector3d(
      rng.Uniform(-0.4, 0.4), rng.Uniform(-0.4, 0.4), rng.Uniform(-3, 3)));
  return pose;
}

// A reachable foot target in the base frame for `leg`.
Eigen::Vector3d RandomReachable(const RobotModel& m, int leg, Rng& rng) {
  const double r = rng.Uniform(m.MinReach() + 0.02, m.MaxReach() - 1e-3);
  const double pitch = rng.Uniform(-0.8, 0.8);
  const double roll = rng.Uniform(-0.6, 0.6);
  const Eigen::Vector3d sagittal(r * std::sin(pitch), 0.0, -r * std::cos(pitch));
  return m.hip_offsets[leg] +
         Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()) * sagittal;
}

TEST(RobotModelTest, DefaultsAreValid) {
  const RobotModel m;
  EXPECT_NO_THROW(m.Validate());
  EXPECT_DOUBLE_EQ(m.mass, 30.0);
  EXPECT_DOUBLE_EQ(m.upper_leg_length, 0.25);
  EXPECT_DOUBLE_EQ(m.lower_leg_length, 0.33);
  EXPECT_DOUBLE_EQ(m.hip_offsets[kRH].x(), -0.277);
  EXPECT_DOUBLE_EQ(m.hip_offsets[kRH].y(), -0.234);
}

TEST(RobotModelTest, ValidateRejectsBadModels) {
  RobotModel m;
  m.mass = 0.0;
  EXPECT_THROW(m.Validate(), ConfigError);
  m = RobotModel();
  m.friction_mu = 2.0;
  EXPECT_THROW(m.Validate(), ConfigError);
  m = RobotModel();
  m.body_inertia(0, 1) = 0.3;
  EXPECT_THROW(m.Validate(), ConfigError);
  m = RobotModel();
  m.body_inertia(0, 0) = -1.0;
  EXPECT_THROW(m.Validate(), ConfigError);
}

TEST(RobotModelTest, ConfigRoundTrip) {
  RobotModel m;
  m.mass = 31.5;
  m.box_half_extents[2] = Eigen::Vector3d(0.3, 0.2, 0.1);
  const auto path =
      (std::filesystem::temp_directory_path() / "timit_robot.txt").string();
  m.Save(path);
  const RobotModel n = RobotModel::Load(path);
  EXPECT_EQ(n.Hash(), m.Hash());
  EXPECT_DOUBLE_EQ(n.mass, 31.5);
  EXPECT_EQ(n.box_half_extents[2], m.box_half_extents[2]);
  EXPECT_NE(RobotModel().Hash(), m.Hash());
}

TEST(ForwardKinematicsTest, ZeroAnglesExtendStraightDown) {
  const RobotModel m;
  const auto feet = ForwardKinematics(m, BasePose(), Vector12d::Zero());
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Eigen::Vector3d expect =
        m.hip_offsets[leg] - Eigen::Vector3d(0, 0, 0.58);
    EXPECT_NEAR((feet[leg] - expect).norm(), 0.0, 1e-15);
  }
}

TEST(ForwardKinematicsTest, HandComputedChain) {
  // HFE 0.3, KFE -0.6, HAA 0.2 on LF: sagittal point
  // (-0.25 sin 0.3 - 0.33 sin(-0.3), 0, -0.25 cos 0.3 - 0.33 cos 0.3)
  // rotated about x by 0.2.
  const RobotModel m;
  const double sx = -0.25 * std::sin(0.3) + 0.33 * std::sin(0.3);
  const double sz = -(0.25 + 0.33) * std::cos(0.3);
  const Eigen::Vector3d expect(sx, -std::sin(0.2) * sz, std::cos(0.2) * sz);
  EXPECT_NEAR((LegForwardKinematics(m, {0.2, 0.3, -0.6}) - expect).norm(), 0.0,
              1e-15);
}

TEST(ForwardKinematicsTest, NominalStanceGivesNominalFootprint) {
  const RobotModel m;
  const Vector12d q = NominalJointAngles(m);
  EXPECT_TRUE(WithinJointLimits(m, q));
  const auto feet = ForwardKinematics(m, BasePose(), q);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    EXPECT_NEAR((feet[leg] - m.NominalFootBase(leg)).norm(), 0.0, 1e-12);
    EXPECT_NEAR(q[3 * leg], 0.0, 1e-12);
  }
}

TEST(ForwardKinematicsTest, YawPiRotatesFootprint) {
  const RobotModel m;
  const Vector12d q = NominalJointAngles(m);
  BasePose pose;
  pose.position = Eigen::Vector3d(1.0, 2.0, 0.5);
  pose.rotation = YawMatrix(std::numbers::pi);
  const auto feet = ForwardKinematics(m, pose, q);
  const auto base = ForwardKinematics(m, BasePose(), q);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Eigen::Vector3d expect(1.0 - base[leg].x(), 2.0 - base[leg].y(),
                                 0.5 + base[leg].z());
    EXPECT_NEAR((feet[leg] - expect).norm(), 0.0, 1e-12);
  }
}

TEST(InverseKinematicsTest, StraightLegBelowHip) {
  const RobotModel m;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Eigen::Vector3d target =
        m.hip_offsets[leg] - Eigen::Vector3d(0, 0, m.MaxReach());
    const Eigen::Vector3d q = InverseKinematics(m, BasePose(), target, leg);
    EXPECT_NEAR(q[2], 0.0, 1e-6);
    EXPECT_NEAR(q[1], 0.0, 1e-6);
  }
}

TEST(InverseKinematicsTest, RoundTripAndXConfiguration) {
  const RobotModel m;
  Rng rng(12);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    for (int k = 0; k < 1000; ++k) {
      const BasePose pose = RandomPose(rng);
      const Eigen::Vector3d local = RandomReachable(m, leg, rng);
      const Eigen::Vector3d target = pose.position + pose.rotation * local;
      const Eigen::Vector3d q = InverseKinematics(m, pose, target, leg);
      Vector12d all = Vector12d::Zero();
      all.segment<3>(3 * leg) = q;
      const Eigen::Vector3d foot = ForwardKinematics(m, pose, all)[leg];
      ASSERT_LT((foot - target).norm(), 1e-6);
      // Front knees bend backwards, hind knees forwards.
      if (IsFrontLeg(leg)) {
        EXPECT_LT(q[2], 0.0);
      } else {
        EXPECT_GT(q[2], 0.0);
      }
      // The knee lies on the expected side of the hip-foot line.
      const Eigen::Vector3d knee = KneeLocal(m, q);
      const Eigen::Vector3d hip_foot = local - m.hip_offsets[leg];
      const Eigen::Vector3d rolled_y =
          Eigen::AngleAxisd(q[0], Eigen::Vector3d::UnitX()) * Eigen::Vector3d::UnitY();
      const double side = hip_foot.cross(knee).dot(rolled_y);
      if (IsFrontLeg(leg)) {
        EXPECT_GT(side, 0.0);
      } else {
        EXPECT_LT(side, 0.0);
      }
    }
  }
}

TEST(InverseKinematicsTest, UnreachableThrows) {
  const RobotModel m;
  const Eigen::Vector3d far = m.hip_offsets[kLF] - Eigen::Vector3d(0, 0, 0.7);
  EXPECT_THROW(InverseKinematics(m, BasePose(), far, kLF), KinematicsError);
  const Eigen::Vector3d near = m.hip_offsets[kLF] - Eigen::Vector3d(0, 0, 0.05);
  EXPECT_THROW(InverseKinematics(m, BasePose(), near, kLF), KinematicsError);
}

TEST(JointVelocityTest, ConstantAndRamp) {
  Vector12d slope;
  for (int j = 0; j < 12; ++j) slope[j] = 0.1 * (j - 6);
  std::vector<Vector12d> constant(20, Vector12d::Constant(0.3)), ramp;
  for (int k = 0; k < 20; ++k) ramp.push_back(slope * 0.01 * k);
  for (const auto& v : JointVelocitiesByDifferences(constant)) {
    EXPECT_EQ(v.norm(), 0.0);
  }
  for (const auto& v : JointVelocitiesByDifferences(ramp)) {
    EXPECT_NEAR((v - slope).norm(), 0.0, 1e-12);
  }
}

TEST(JointVelocityTest, SinusoidWithinDifferenceBounds) {
  const double f = 1.5, w = 2 * std::numbers::pi * f, dt = 0.01;
  std::vector<Vector12d> q;
  for (int k = 0; k < 200; ++k) q.push_back(Vector12d::Constant(std::sin(w * k * dt)));
  const auto qdot = JointVelocitiesByDifferences(q);
  const double central = w * w * w * dt * dt / 6;
  const double one_sided = w * w * dt / 2 + central;
  for (size_t k = 0; k < q.size(); ++k) {
    const double exact = w * std::cos(w * k * dt);
    const double bound = (k == 0 || k + 1 == q.size()) ? one_sided : central;
    EXPECT_LE(std::abs(qdot[k][0] - exact), bound) << k;
  }
}

}  // namespace
}  // namespace timit
