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

#ifndef TIMIT_ROTATION_H_
#define TIMIT_ROTATION_H_

#include <cmath>

#include <Eigen/Geometry>

namespace timit {

// Euler angles are stored as (roll, pitch, yaw) and composed Z-Y-X:
// R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Eigen::Matrix3d EulerZyxToMatrix(const Eigen::Vector3d& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

inline Eigen::Quaterniond EulerZyxToQuaternion(const Eigen::Vector3d& rpy) {
  Eigen::Quaterniond q =
      Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
      Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
      Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX());
  return q.normalized();
}

// World-frame angular velocity from Z-Y-X Euler angles and their rates.
inline Eigen::Vector3d EulerZyxRatesToWorldOmega(const Eigen::Vector3d& rpy,
                                                 const Eigen::Vector3d& rates) {
  const double cy = std::cos(rpy.z()), sy = std::sin(rpy.z());
  const double cp = std::cos(rpy.y()), sp = std::sin(rpy.y());
  const Eigen::Vector3d roll_axis(cy * cp, sy * cp, -sp);
  const Eigen::Vector3d pitch_axis(-sy, cy, 0.0);
  return rates.x() * roll_axis + rates.y() * pitch_axis +
         rates.z() * Eigen::Vector3d::UnitZ();
}

inline Eigen::Matrix3d YawMatrix(double yaw) {
  return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

// Rotation angle in [0, pi] of q_ref^-1 * q.
inline double QuaternionAngleBetween(const Eigen::Quaterniond& q,
                                     const Eigen::Quaterniond& q_ref) {
  const Eigen::Quaterniond rel = q_ref.conjugate() * q;
  const double vec = rel.vec().norm();
  return 2.0 * std::atan2(vec, std::abs(rel.w()));
}

}  // namespace timit

#endif  // TIMIT_ROTATION_H_
