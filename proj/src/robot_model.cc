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

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

namespace timit {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::array<const char*, 3> kJointNames = {"haa", "hfe", "kfe"};

std::string LegKey(const char* prefix, int leg) {
  std::string name = kLegNames[leg];
  for (auto& c : name) c = static_cast<char>(std::tolower(c));
  return std::string(prefix) + "_" + name;
}

std::string JointKey(int joint) {
  return LegKey("joint_limits", joint / 3) + "_" + kJointNames[joint % 3];
}

Eigen::Vector3d ToVector3(const std::string& key,
                          const std::vector<double>& v) {
  if (v.size() != 3) throw ConfigError("config key '" + key + "': need 3 values");
  return {v[0], v[1], v[2]};
}

}  // namespace

RobotModel::RobotModel() {
  for (int leg = 0; leg < kNumLegs; ++leg) {
    box_centers[leg] = NominalFootBase(leg);
    box_half_extents[leg] = Eigen::Vector3d(0.20, 0.10, 0.08);
    joint_limits[3 * leg + 0] = {-kPi / 2, kPi / 2};
    joint_limits[3 * leg + 1] = {-kPi, kPi};
    joint_limits[3 * leg + 2] =
        IsFrontLeg(leg) ? JointLimits{-kPi, 0.0} : JointLimits{0.0, kPi};
  }
}

double RobotModel::MinReach() const {
  return std::abs(upper_leg_length - lower_leg_length);
}

void RobotModel::Validate() const {
  if (!(mass > 0.0)) throw ConfigError("robot mass must be positive");
  if (!body_inertia.isApprox(body_inertia.transpose(), 1e-12)) {
    throw ConfigError("robot inertia must be symmetric");
  }
  if (Eigen::LLT<Eigen::Matrix3d>(body_inertia).info() != Eigen::Success) {
    throw ConfigError("robot inertia must be positive definite");
  }
  if (!(upper_leg_length > 0.0) || !(lower_leg_length > 0.0)) {
    throw ConfigError("robot link lengths must be positive");
  }
  if (!(friction_mu > 0.0) || friction_mu > 1.5) {
    throw ConfigError("robot friction coefficient must be in (0, 1.5]");
  }
  for (const auto& h : box_half_extents) {
    if ((h.array() <= 0.0).any()) {
      throw ConfigError("kinematic box half extents must be positive");
    }
  }
  for (const auto& lim : joint_limits) {
    if (lim.lower > lim.upper) throw ConfigError("joint limits inverted");
  }
}

KeyValueConfig RobotModel::ToConfig() const {
  KeyValueConfig c;
  c.SetDouble("mass", mass);
  c.SetVector("inertia_diag", {body_inertia(0, 0), body_inertia(1, 1),
                               body_inertia(2, 2)});
  c.SetVector("inertia_offdiag", {body_inertia(0, 1), body_inertia(0, 2),
                                  body_inertia(1, 2)});
  c.SetDouble("upper_leg_length", upper_leg_length);
  c.SetDouble("lower_leg_length", lower_leg_length);
  c.SetDouble("nominal_foot_depth", nominal_foot_depth);
  c.SetDouble("friction_mu", friction_mu);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const auto& h = hip_offsets[leg];
    c.SetVector(LegKey("hip_offset", leg), {h.x(), h.y(), h.z()});
  }
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const auto& b = box_centers[leg];
    const auto& e = box_half_extents[leg];
    c.SetVector(LegKey("box_center", leg), {b.x(), b.y(), b.z()});
    c.SetVector(LegKey("box_half_extents", leg), {e.x(), e.y(), e.z()});
  }
  for (int j = 0; j < kNumJoints; ++j) {
    c.SetVector(JointKey(j), {joint_limits[j].lower, joint_limits[j].upper});
  }
  return c;
}

RobotModel RobotModel::FromConfig(const KeyValueConfig& c) {
  RobotModel m;
  m.mass = c.GetDouble("mass", m.mass);
  if (c.Has("inertia_diag")) {
    const auto d = ToVector3("inertia_diag", c.GetVector("inertia_diag"));
    Eigen::Vector3d off = Eigen::Vector3d::Zero();
    if (c.Has("inertia_offdiag")) {
      off = ToVector3("inertia_offdiag", c.GetVector("inertia_offdiag"));
    }
    m.body_inertia << d.x(), off.x(), off.y(), off.x(), d.y(), off.z(),
        off.y(), off.z(), d.z();
  }
  m.upper_leg_length = c.GetDouble("upper_leg_length", m.upper_leg_length);
  m.lower_leg_length = c.GetDouble("lower_leg_length", m.lower_leg_length);
  m.nominal_foot_depth =
      c.GetDouble("nominal_foot_depth", m.nominal_foot_depth);
  m.friction_mu = c.GetDouble("friction_mu", m.friction_mu);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const auto key = LegKey("hip_offset", leg);
    if (c.Has(key)) m.hip_offsets[leg] = ToVector3(key, c.GetVector(key));
  }
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const auto center_key = LegKey("box_center", leg);
    m.box_centers[leg] = c.Has(center_key)
                             ? ToVector3(center_key, c.GetVector(center_key))
                             : m.NominalFootBase(leg);
    const auto extent_key = LegKey("box_half_extents", leg);
    if (c.Has(extent_key)) {
      m.box_half_extents[leg] = ToVector3(extent_key, c.GetVector(extent_key));
    }
  }
  for (int j = 0; j < kNumJoints; ++j) {
    const auto key = JointKey(j);
    if (!c.Has(key)) continue;
    const auto v = c.GetVector(key);
    if (v.size() != 2) throw ConfigError("config key '" + key + "': need 2 values");
    m.joint_limits[j] = {v[0], v[1]};
  }
  m.Validate();
  return m;
}

RobotModel RobotModel::Load(const std::string& path) {
  return FromConfig(KeyValueConfig::Load(path));
}

void RobotModel::Save(const std::string& path) const { ToConfig().Save(path); }

std::string RobotModel::Hash() const {
  return HexDigest(Fnv1a64(ToConfig().ToString()));
}

bool WithinJointLimits(const RobotModel& model, const Vector12d& q) {
  for (int j = 0; j < kNumJoints; ++j) {
    if (q[j] < model.joint_limits[j].lower ||
        q[j] > model.joint_limits[j].upper) {
      return false;
    }
  }
  return true;
}

Eigen::Vector3d LegForwardKinematics(const RobotModel& model,
                                     const Eigen::Vector3d& leg_q) {
  const double haa = leg_q[0], hfe = leg_q[1], kfe = leg_q[2];
  const double l1 = model.upper_leg_length, l2 = model.lower_leg_length;
  // Sagittal-plane chain, then abduction about x.
  const Eigen::Vector3d planar(-l1 * std::sin(hfe) - l2 * std::sin(hfe + kfe),
                               0.0,
                               -l1 * std::cos(hfe) - l2 * std::cos(hfe + kfe));
  return Eigen::AngleAxisd(haa, Eigen::Vector3d::UnitX()) * planar;
}

std::array<Eigen::Vector3d, kNumLegs> ForwardKinematics(
    const RobotModel& model, const BasePose& base, const Vector12d& q) {
  std::array<Eigen::Vector3d, kNumLegs> feet;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Eigen::Vector3d local =
        model.hip_offsets[leg] +
        LegForwardKinematics(model, q.segment<3>(3 * leg));
    feet[leg] = base.position + base.rotation * local;
  }
  return feet;
}

Eigen::Vector3d InverseKinematics(const RobotModel& model, const BasePose& base,
                                  const Eigen::Vector3d& foot_world, int leg) {
  const Eigen::Vector3d p =
      base.rotation.transpose() * (foot_world - base.position) -
      model.hip_offsets[leg];
  const double l1 = model.upper_leg_length, l2 = model.lower_leg_length;

  // HAA puts the foot in the leg's sagittal plane, below the hip.
  const double haa = std::atan2(p.y(), -p.z());
  const double vz = -std::hypot(p.y(), p.z());
  const double vx = p.x();
  const double reach = std::hypot(vx, vz);
  const double eps = 1e-9;
  if (reach > l1 + l2 + eps || reach < std::abs(l1 - l2) - eps) {
    throw KinematicsError("IK target for leg " + std::string(kLegNames[leg]) +
                          " out of reach (distance " + std::to_string(reach) +
                          " m)");
  }
  const double cos_knee = std::clamp(
      (reach * reach - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  // x-configuration: front knees point backwards, hind knees forwards.
  const double knee_magnitude = std::acos(cos_knee);
  const double kfe = IsFrontLeg(leg) ? -knee_magnitude : knee_magnitude;
  // Foot direction measured from straight down, positive backwards.
  const double foot_angle = std::atan2(-vx, -vz);
  const double hfe = foot_angle - std::atan2(l2 * std::sin(kfe),
                                             l1 + l2 * std::cos(kfe));
  return {haa, hfe, kfe};
}

Vector12d InverseKinematicsAll(
    const RobotModel& model, const BasePose& base,
    const std::array<Eigen::Vector3d, kNumLegs>& feet_world) {
  Vector12d q;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    q.segment<3>(3 * leg) = InverseKinematics(model, base, feet_world[leg], leg);
  }
  return q;
}

Vector12d NominalJointAngles(const RobotModel& model) {
  BasePose base;
  std::array<Eigen::Vector3d, kNumLegs> feet;
  for (int leg = 0; leg < kNumLegs; ++leg) feet[leg] = model.NominalFootBase(leg);
  return InverseKinematicsAll(model, base, feet);
}

std::vector<Vector12d> JointVelocitiesByDifferences(
    std::span<const Vector12d> q, double dt) {
  const size_t n = q.size();
  std::vector<Vector12d> qdot(n, Vector12d::Zero());
  if (n < 2) return qdot;
  qdot[0] = (q[1] - q[0]) / dt;
  qdot[n - 1] = (q[n - 1] - q[n - 2]) / dt;
  for (size_t k = 1; k + 1 < n; ++k) {
    qdot[k] = (q[k + 1] - q[k - 1]) / (2.0 * dt);
  }
  return qdot;
}

}  // namespace timit
