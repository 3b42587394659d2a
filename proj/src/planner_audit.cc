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

// Residuals recomputed from the solution splines with plain double
// arithmetic. Nothing here touches the NLP assembly.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "timit/planner.h"
#include "timit/rotation.h"

namespace timit {
namespace {

std::vector<double> Grid(double horizon, double dt) {
  std::vector<double> times;
  for (int k = 0;; ++k) {
    const double t = k * dt;
    if (t > horizon + 1e-9) break;
    times.push_back(t);
  }
  if (horizon - times.back() > 1e-9) times.push_back(horizon);
  return times;
}

double TerrainHeight(const HeightField& terrain, const Eigen::Vector2d& p,
                     Eigen::Vector3d* normal = nullptr) {
  const auto s = terrain.Query(terrain.ClampToFootprint(p));
  if (normal) *normal = s->normal;
  return s->height;
}

// Max violation of the six normal-force and friction-pyramid rows.
double ForceViolation(const Eigen::Vector3d& f, const Eigen::Vector3d& n,
                      double mu, double fmax, double mg) {
  const Eigen::Vector3d t1 =
      (Eigen::Vector3d::UnitX() - n.x() * n).normalized();
  const Eigen::Vector3d t2 =
      (Eigen::Vector3d::UnitY() - n.y() * n).normalized();
  const double fn = f.dot(n);
  double v = std::max({-fn, fn - fmax, std::abs(f.dot(t1)) - mu * fn,
                       std::abs(f.dot(t2)) - mu * fn});
  return std::max(0.0, v) / mg;
}

// World angular velocity derivative for Z-Y-X Euler angles.
Eigen::Vector3d OmegaDot(const Eigen::Vector3d& e, const Eigen::Vector3d& de,
                         const Eigen::Vector3d& dde) {
  const double roll_rate = de.x(), pitch_rate = de.y(), yaw_rate = de.z();
  const double cy = std::cos(e.z()), sy = std::sin(e.z());
  const double cp = std::cos(e.y()), sp = std::sin(e.y());
  Eigen::Matrix3d M;
  M.col(0) << cy * cp, sy * cp, -sp;
  M.col(1) << -sy, cy, 0.0;
  M.col(2) << 0.0, 0.0, 1.0;
  Eigen::Matrix3d dM = Eigen::Matrix3d::Zero();
  dM.col(0) << -sy * cp * yaw_rate - cy * sp * pitch_rate,
      cy * cp * yaw_rate - sy * sp * pitch_rate, -cp * pitch_rate;
  dM.col(1) << -cy * yaw_rate, -sy * yaw_rate, 0.0;
  (void)roll_rate;
  return M * dde + dM * de;
}

}  // namespace

AuditReport AuditSolution(const CentroidalSolution& sol,
                          const HeightField& terrain, const RobotModel& model,
                          const PlannerConfig& config) {
  AuditReport a;
  const double T = config.horizon;
  const double mg = model.mass * config.gravity;
  const double fmax = config.ForceMax(model);
  a.force_max = fmax;
  const auto& sched = sol.schedule;
  const auto stance_at = [&](int leg, double t) { return sched.InStance(leg, t); };

  // Dynamics and kinematic boxes.
  for (double t : Grid(T, config.dynamics_dt)) {
    const SplineState com = sol.com.EvalExtrapolated(t);
    const SplineState ori = sol.orientation.EvalExtrapolated(t);
    Eigen::Vector3d total_force = Eigen::Vector3d::Zero();
    Eigen::Vector3d torque = Eigen::Vector3d::Zero();
    std::array<Eigen::Vector3d, kNumLegs> feet;
    for (int leg = 0; leg < kNumLegs; ++leg) {
      feet[leg] = sol.feet[leg].EvalExtrapolated(t).pos;
      if (!stance_at(leg, t)) continue;
      const Eigen::Vector3d f = sol.forces[leg].EvalExtrapolated(t).pos;
      total_force += f;
      torque += (feet[leg] - com.pos).cross(f);
    }
    const Eigen::Vector3d linear =
        model.mass * (com.acc - Eigen::Vector3d(0, 0, -config.gravity)) -
        total_force;
    const Eigen::Matrix3d R = EulerZyxToMatrix(ori.pos);
    const Eigen::Matrix3d Iw = R * model.body_inertia * R.transpose();
    const Eigen::Vector3d w = EulerZyxRatesToWorldOmega(ori.pos, ori.vel);
    const Eigen::Vector3d dw = OmegaDot(ori.pos, ori.vel, ori.acc);
    const Eigen::Vector3d angular = Iw * dw + w.cross(Iw * w) - torque;
    a.dynamics = std::max({a.dynamics, linear.cwiseAbs().maxCoeff() / mg,
                           angular.cwiseAbs().maxCoeff() / mg});

    const Eigen::Matrix3d Rb =
        config.full_orientation_boxes ? R : YawMatrix(ori.pos.z());
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Eigen::Vector3d local = Rb.transpose() * (feet[leg] - com.pos);
      const Eigen::Vector3d d =
          (local - model.box_centers[leg]).cwiseAbs() - model.box_half_extents[leg];
      a.kinematics = std::max(a.kinematics, std::max(0.0, d.maxCoeff()));
    }
  }

  // Forces at spline nodes and on the force grid.
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const auto& spline = sol.forces[leg];
    double t = 0.0;
    for (int k = 0; k <= spline.segment_count(); ++k) {
      const bool stance_node =
          (k < spline.segment_count() && spline.tags()[k] == PhaseTag::kStance) ||
          (k > 0 && spline.tags()[k - 1] == PhaseTag::kStance);
      if (stance_node) {
        Eigen::Vector3d n;
        TerrainHeight(terrain, sol.feet[leg].EvalExtrapolated(std::min(t, T)).pos.head<2>(),
                      &n);
        a.force = std::max(a.force, ForceViolation(spline.nodes()[k].pos, n,
                                                   model.friction_mu, fmax, mg));
      }
      if (k < spline.segment_count()) t += spline.durations()[k];
    }
  }
  for (double t : Grid(T, config.force_constraint_dt)) {
    for (int leg = 0; leg < kNumLegs; ++leg) {
      if (!stance_at(leg, t)) continue;
      Eigen::Vector3d n;
      TerrainHeight(terrain, sol.feet[leg].EvalExtrapolated(t).pos.head<2>(), &n);
      a.force = std::max(a.force, ForceViolation(sol.forces[leg].EvalExtrapolated(t).pos, n,
                                                 model.friction_mu, fmax, mg));
    }
  }

  // Swing clearance at interior swing nodes and on the swing grid.
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const auto& spline = sol.feet[leg];
    for (int k = 1; k < spline.segment_count(); ++k) {
      if (spline.tags()[k - 1] != PhaseTag::kSwing ||
          spline.tags()[k] != PhaseTag::kSwing) {
        continue;
      }
      const Eigen::Vector3d p = spline.nodes()[k].pos;
      a.swing = std::max(a.swing,
                         std::max(0.0, TerrainHeight(terrain, p.head<2>()) - p.z()));
    }
  }
  for (double t : Grid(T, config.swing_constraint_dt)) {
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Eigen::Vector3d p = sol.feet[leg].EvalExtrapolated(t).pos;
      a.swing = std::max(a.swing,
                         std::max(0.0, TerrainHeight(terrain, p.head<2>()) - p.z()));
    }
  }

  // Stance pinning, stationarity and phase sums.
  a.min_normal_force_fine = std::numeric_limits<double>::infinity();
  a.min_swing_clearance_fine = std::numeric_limits<double>::infinity();
  for (int leg = 0; leg < kNumLegs; ++leg) {
    double start = 0.0;
    for (int j = 0; j < sched.phase_count(leg); ++j) {
      const double end = start + sched.durations[leg][j];
      if (sched.IsStancePhase(leg, j)) {
        const Eigen::Vector3d p0 = sol.feet[leg].EvalExtrapolated(std::min(start, T)).pos;
        a.stance_pin = std::max(
            a.stance_pin, std::abs(p0.z() - TerrainHeight(terrain, p0.head<2>())));
        for (double t = start; t <= std::min(end, T) + 1e-12; t += 0.01) {
          const double tt = std::min(t, T);
          const Eigen::Vector3d p = sol.feet[leg].EvalExtrapolated(tt).pos;
          a.max_stance_drift = std::max(a.max_stance_drift, (p - p0).norm());
          Eigen::Vector3d n;
          TerrainHeight(terrain, p.head<2>(), &n);
          a.min_normal_force_fine =
              std::min(a.min_normal_force_fine, sol.forces[leg].EvalExtrapolated(tt).pos.dot(n));
        }
      }
      start = end;
    }
    a.phase_sum = std::max(a.phase_sum, std::abs(sched.Total(leg) - T));
  }
  for (double t = 0.0; t <= T + 1e-12; t += 0.01) {
    const double tt = std::min(t, T);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      if (stance_at(leg, tt)) continue;
      const Eigen::Vector3d p = sol.feet[leg].EvalExtrapolated(tt).pos;
      a.min_swing_clearance_fine =
          std::min(a.min_swing_clearance_fine,
                   p.z() - TerrainHeight(terrain, p.head<2>()));
    }
  }
  if (!std::isfinite(a.min_swing_clearance_fine)) a.min_swing_clearance_fine = 0.0;
  if (!std::isfinite(a.min_normal_force_fine)) a.min_normal_force_fine = 0.0;

  // Boundary conditions: start pose on the nominal footprint, goal xy reached,
  // rest at both ends.
  double start_height = 0.0, goal_height = 0.0;
  const Eigen::Vector2d goal_xy = config.start_xy + config.goal_displacement;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Eigen::Vector2d hip = model.hip_offsets[leg].head<2>();
    const Eigen::Vector2d foot_xy = config.start_xy + hip;
    const double h = TerrainHeight(terrain, foot_xy);
    start_height += h / kNumLegs;
    goal_height += TerrainHeight(terrain, goal_xy + hip) / kNumLegs;
    const Eigen::Vector3d foot0 = sol.feet[leg].EvalExtrapolated(0.0).pos;
    a.boundary = std::max(
        a.boundary, (foot0 - Eigen::Vector3d(foot_xy.x(), foot_xy.y(), h)).norm());
  }
  (void)goal_height;
  const SplineState c0 = sol.com.EvalExtrapolated(0.0), c1 = sol.com.EvalExtrapolated(T);
  const SplineState o0 = sol.orientation.EvalExtrapolated(0.0), o1 = sol.orientation.EvalExtrapolated(T);
  const Eigen::Vector3d start_com(config.start_xy.x(), config.start_xy.y(),
                                  start_height + model.nominal_foot_depth);
  a.boundary = std::max({a.boundary, (c0.pos - start_com).norm(), c0.vel.norm(),
                         (c1.pos.head<2>() - goal_xy).norm(), c1.vel.norm(),
                         o0.pos.norm(), o0.vel.norm(), std::abs(o1.pos.z()),
                         o1.vel.norm()});

  a.max_residual = std::max({a.dynamics, a.force, a.swing, a.stance_pin,
                             a.kinematics, a.phase_sum, a.boundary});
  return a;
}

std::string AuditReport::Summary() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "max_residual %.3e (dynamics %.3e force %.3e swing %.3e "
                "stance_pin %.3e kinematics %.3e phase_sum %.3e boundary "
                "%.3e) min_fn_fine %.3f N swing_clearance_fine %.4f m "
                "stance_drift %.2e m",
                max_residual, dynamics, force, swing, stance_pin, kinematics,
                phase_sum, boundary, min_normal_force_fine,
                min_swing_clearance_fine, max_stance_drift);
  return buf;
}

}  // namespace timit
