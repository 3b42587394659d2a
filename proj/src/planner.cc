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

#include "timit/planner.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "timit/random.h"
#include "timit/sparse_dual.h"

namespace timit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTimeTol = 1e-9;
// Roll and pitch stay within this magnitude.
constexpr double kTiltBound = 0.5;

using SD = SparseDual;

std::vector<double> GridTimes(double horizon, double dt) {
  std::vector<double> times;
  const int n = static_cast<int>(std::floor(horizon / dt + kTimeTol));
  for (int k = 0; k <= n; ++k) times.push_back(k * dt);
  if (horizon - n * dt > kTimeTol) times.push_back(horizon);
  return times;
}

template <class S>
std::array<S, 4> Weights(const S& tau, const S& d, int order) {
  const S s = tau / d;
  const S s2 = s * s;
  switch (order) {
    case 0: {
      const S s3 = s2 * s;
      return {1.0 - 3.0 * s2 + 2.0 * s3, d * (s - 2.0 * s2 + s3),
              3.0 * s2 - 2.0 * s3, d * (s3 - s2)};
    }
    case 1:
      return {6.0 * (s2 - s) / d, 1.0 - 4.0 * s + 3.0 * s2,
              6.0 * (s - s2) / d, 3.0 * s2 - 2.0 * s};
    default:
      return {(12.0 * s - 6.0) / (d * d), (6.0 * s - 4.0) / d,
              (6.0 - 12.0 * s) / (d * d), (6.0 * s - 2.0) / d};
  }
}

DualVec3 Variables3(const double* x, int index) {
  return {SD::Variable(x[index], index), SD::Variable(x[index + 1], index + 1),
          SD::Variable(x[index + 2], index + 2)};
}

DualVec3 Constant3(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }


// Rotation matrix R = Rz(yaw) Ry(pitch) Rx(roll) from duals.
DualMat3 EulerMatrix(const DualVec3& rpy) {
  const SD cr = cos(rpy[0]), sr = sin(rpy[0]);
  const SD cp = cos(rpy[1]), sp = sin(rpy[1]);
  const SD cy = cos(rpy[2]), sy = sin(rpy[2]);
  return {DualVec3{cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr},
          DualVec3{sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr},
          DualVec3{-sp, cp * sr, cp * cr}};
}

DualMat3 YawMatrixDual(const SD& yaw) {
  const SD c = cos(yaw), s = sin(yaw);
  return {DualVec3{c, -s, 0.0}, DualVec3{s, c, 0.0}, DualVec3{0.0, 0.0, 1.0}};
}

DualVec3 MultiplyConstant(const Eigen::Matrix3d& m, const DualVec3& v) {
  DualVec3 out;
  for (int r = 0; r < 3; ++r) {
    out[r] = m(r, 0) * v[0] + m(r, 1) * v[1] + m(r, 2) * v[2];
  }
  return out;
}

std::string GaitName(Gait gait) { return gait == Gait::kStand ? "stand" : "trot"; }

Gait ParseGait(const std::string& name) {
  if (name == "trot") return Gait::kTrot;
  if (name == "stand") return Gait::kStand;
  throw ConfigError("unknown gait '" + name + "'");
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration.

void PlannerConfig::Validate() const {
  if (!(horizon > 0.0)) throw ConfigError("planner horizon must be positive");
  for (double dt : {dynamics_dt, force_constraint_dt, swing_constraint_dt}) {
    if (!(dt > 0.0) || dt > horizon) {
      throw ConfigError("planner time steps must lie in (0, T]");
    }
  }
  if (init_pos_noise_sigma < 0.0 || init_force_noise_sigma < 0.0) {
    throw ConfigError("planner noise sigmas must be non-negative");
  }
  if (!(min_phase_duration > 0.0) || min_phase_duration > max_phase_duration) {
    throw ConfigError("planner phase duration bounds invalid");
  }
  if (com_segments < 1 || swing_segments < 1 || force_segments < 1) {
    throw ConfigError("planner segment counts must be >= 1");
  }
  if (!(gravity > 0.0)) throw ConfigError("gravity must be positive");
}

double PlannerConfig::ForceMax(const RobotModel& model) const {
  return force_bound_max > 0.0 ? force_bound_max : 2.0 * model.mass * gravity;
}

int PlannerConfig::SwingsPerLeg() const {
  if (swings_per_leg > 0) return swings_per_leg;
  return std::max(1, static_cast<int>(std::lround(4.0 * horizon / 4.6)));
}

KeyValueConfig PlannerConfig::ToConfig() const {
  KeyValueConfig c;
  c.SetDouble("horizon", horizon);
  c.SetVector("goal_displacement", {goal_displacement.x(), goal_displacement.y()});
  c.SetVector("start_xy", {start_xy.x(), start_xy.y()});
  c.SetDouble("dynamics_dt", dynamics_dt);
  c.SetDouble("force_constraint_dt", force_constraint_dt);
  c.SetDouble("swing_constraint_dt", swing_constraint_dt);
  c.SetDouble("force_bound_max", force_bound_max);
  c.SetVector("phase_duration_bounds", {min_phase_duration, max_phase_duration});
  c.SetDouble("init_pos_noise_sigma", init_pos_noise_sigma);
  c.SetDouble("init_force_noise_sigma", init_force_noise_sigma);
  c.SetDouble("gravity", gravity);
  c.SetInt("com_segments", com_segments);
  c.SetInt("swing_segments", swing_segments);
  c.SetInt("force_segments", force_segments);
  c.Set("gait", GaitName(gait));
  c.SetInt("swings_per_leg", swings_per_leg);
  c.SetDouble("trot_start_margin", trot_start_margin);
  c.SetDouble("trot_flight", trot_flight);
  c.SetDouble("swing_apex", swing_apex);
  c.SetInt("full_orientation_boxes", full_orientation_boxes ? 1 : 0);
  const auto s = solver.ToConfig();
  for (const auto& key : s.keys()) c.Set("solver_" + key, s.GetString(key));
  return c;
}

PlannerConfig PlannerConfig::FromConfig(const KeyValueConfig& c) {
  PlannerConfig p;
  p.horizon = c.GetDouble("horizon", p.horizon);
  if (c.Has("goal_displacement")) {
    const auto v = c.GetVector("goal_displacement");
    if (v.size() != 2) throw ConfigError("goal_displacement needs 2 values");
    p.goal_displacement = {v[0], v[1]};
  }
  if (c.Has("start_xy")) {
    const auto v = c.GetVector("start_xy");
    if (v.size() != 2) throw ConfigError("start_xy needs 2 values");
    p.start_xy = {v[0], v[1]};
  }
  p.dynamics_dt = c.GetDouble("dynamics_dt", p.dynamics_dt);
  p.force_constraint_dt = c.GetDouble("force_constraint_dt", p.force_constraint_dt);
  p.swing_constraint_dt = c.GetDouble("swing_constraint_dt", p.swing_constraint_dt);
  p.force_bound_max = c.GetDouble("force_bound_max", p.force_bound_max);
  if (c.Has("phase_duration_bounds")) {
    const auto v = c.GetVector("phase_duration_bounds");
    if (v.size() != 2) throw ConfigError("phase_duration_bounds needs 2 values");
    p.min_phase_duration = v[0];
    p.max_phase_duration = v[1];
  }
  p.init_pos_noise_sigma = c.GetDouble("init_pos_noise_sigma", p.init_pos_noise_sigma);
  p.init_force_noise_sigma =
      c.GetDouble("init_force_noise_sigma", p.init_force_noise_sigma);
  p.gravity = c.GetDouble("gravity", p.gravity);
  p.com_segments = c.GetInt("com_segments", p.com_segments);
  p.swing_segments = c.GetInt("swing_segments", p.swing_segments);
  p.force_segments = c.GetInt("force_segments", p.force_segments);
  p.gait = ParseGait(c.GetString("gait", GaitName(p.gait)));
  p.swings_per_leg = c.GetInt("swings_per_leg", p.swings_per_leg);
  p.trot_start_margin = c.GetDouble("trot_start_margin", p.trot_start_margin);
  p.trot_flight = c.GetDouble("trot_flight", p.trot_flight);
  p.swing_apex = c.GetDouble("swing_apex", p.swing_apex);
  p.full_orientation_boxes = c.GetInt("full_orientation_boxes", 1) != 0;
  KeyValueConfig s;
  for (const auto& key : c.keys()) {
    if (key.rfind("solver_", 0) == 0) s.Set(key.substr(7), c.GetString(key));
  }
  p.solver = nlp::SolverOptions::FromConfig(s);
  p.Validate();
  return p;
}

PlannerConfig PlannerConfig::Load(const std::string& path) {
  return FromConfig(KeyValueConfig::Load(path));
}

// ---------------------------------------------------------------------------
// Schedules and layout.

PhaseSchedule TrotSchedule(const PlannerConfig& config) {
  const int swings = config.SwingsPerLeg();
  const double t0 = config.trot_start_margin;
  const double flight = config.trot_flight;
  // 2 * swings swing events alternate between the pairs; each starts delta
  // after the previous one and lasts delta + flight.
  const double delta = (config.horizon - 2.0 * t0 - flight) / (2.0 * swings);
  if (!(delta > 0.0)) {
    throw PlannerError("horizon too short for the trot initializer");
  }
  const double swing = delta + flight;
  PhaseSchedule schedule;
  schedule.durations.resize(kNumLegs);
  schedule.starts_in_stance.assign(kNumLegs, true);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const bool first_pair = leg == kLF || leg == kRH;
    auto& d = schedule.durations[leg];
    double t = 0.0;
    for (int k = 0; k < swings; ++k) {
      const double lift = t0 + (2 * k + (first_pair ? 0 : 1)) * delta;
      d.push_back(lift - t);
      d.push_back(swing);
      t = lift + swing;
    }
    d.push_back(config.horizon - t);
  }
  return schedule;
}

PhaseSchedule StandSchedule(const PlannerConfig& config) {
  PhaseSchedule schedule;
  schedule.durations.assign(kNumLegs, std::vector<double>{config.horizon});
  schedule.starts_in_stance.assign(kNumLegs, true);
  return schedule;
}

PhaseSchedule NominalSchedule(const PlannerConfig& config) {
  return config.gait == Gait::kStand ? StandSchedule(config)
                                     : TrotSchedule(config);
}

VariableLayout VariableLayout::Build(const PlannerConfig& config,
                                     const PhaseSchedule& schedule) {
  VariableLayout layout;
  layout.body_nodes = config.com_segments + 1;
  int next = 0;
  layout.com = next;
  next += 6 * layout.body_nodes;
  layout.orientation = next;
  next += 6 * layout.body_nodes;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    auto& l = layout.legs[leg];
    const int phases = schedule.phase_count(leg);
    if (!schedule.IsStancePhase(leg, 0) ||
        !schedule.IsStancePhase(leg, phases - 1)) {
      throw PlannerError("every leg must begin and end in stance");
    }
    for (int j = 0; j < phases; ++j) {
      const bool stance = schedule.IsStancePhase(leg, j);
      l.stance.push_back(stance);
      l.foot.push_back(next);
      next += stance ? 3 : 6 * (config.swing_segments - 1);
      if (stance) {
        l.force.push_back(next);
        next += 6 * (config.force_segments + 1);
      } else {
        l.force.push_back(-1);
      }
    }
    l.durations = next;
    next += phases;
  }
  layout.total = next;
  return layout;
}

int VariableLayout::ExpectedCount(const PlannerConfig& config,
                                  const PhaseSchedule& schedule) {
  int count = 12 * (config.com_segments + 1);
  for (int leg = 0; leg < schedule.leg_count(); ++leg) {
    const int n_stance = schedule.StancePhaseCount(leg);
    const int n_swing = schedule.phase_count(leg) - n_stance;
    count += 3 * n_stance + 6 * (config.swing_segments - 1) * n_swing +
             6 * (config.force_segments + 1) * n_stance +
             schedule.phase_count(leg);
  }
  return count;
}

// ---------------------------------------------------------------------------
// Problem context and spline evaluation on the variable vector.

struct CentroidalProblem::Context {
  HeightField terrain;
  RobotModel model;
  PlannerConfig config;
  PhaseSchedule schedule;
  VariableLayout layout;
  Eigen::Vector3d start_com;
  Eigen::Vector3d goal_com;
  std::array<Eigen::Vector3d, kNumLegs> start_feet;
  std::array<Eigen::Vector3d, kNumLegs> goal_feet;
  std::vector<double> body_starts;  // knot times of the body splines
  double body_segment = 0.0;
  double mg = 0.0;
  double fmax = 0.0;
  mutable std::atomic<int> clamps{0};

  TerrainSample Terrain(const Eigen::Vector2d& p) const {
    if (auto s = terrain.Query(p)) return *s;
    clamps.fetch_add(1, std::memory_order_relaxed);
    TerrainSample s = terrain.QueryOrThrow(terrain.ClampToFootprint(p));
    s.slope.setZero();
    return s;
  }

  // Terrain height as a dual of the planar foot coordinates.
  SD Height(const SD& x, const SD& y, Eigen::Vector3d* normal = nullptr) const {
    const Eigen::Vector2d p(x.value(), y.value());
    const TerrainSample s = Terrain(p);
    if (normal) *normal = s.normal;
    return SD::Combine(s.slope.x(), x - p.x(), s.slope.y(), y - p.y()) +
           s.height;
  }

  // Body spline segment with the same left-knot rule as PhaseSpline.
  int BodySegment(double t) const {
    int k = 0;
    const int n = config.com_segments;
    while (k < n - 1 && body_starts[k] + body_segment < t) ++k;
    return k;
  }

  DualVec3 Body(int base, double t, int order, const double* x) const {
    const int k = BodySegment(t);
    const auto w = Weights<double>(t - body_starts[k], body_segment, order);
    DualVec3 out;
    for (int c = 0; c < 3; ++c) {
      const int n0 = base + 6 * k, n1 = n0 + 6;
      out[c] = SD::Linear({{n0 + c, w[0]},
                           {n0 + 3 + c, w[1]},
                           {n1 + c, w[2]},
                           {n1 + 3 + c, w[3]}},
                          x);
    }
    return out;
  }

  struct PhaseLocation {
    int phase = 0;
    SD local_time;  // t - phase start
    SD duration;
  };

  PhaseLocation Locate(int leg, double t, const double* x) const {
    const auto& l = layout.legs[leg];
    const int phases = l.phase_count();
    SD start;
    for (int j = 0; j < phases; ++j) {
      SD d = SD::Variable(x[l.durations + j], l.durations + j);
      if (j == phases - 1 || start.value() + d.value() >= t) {
        return {j, t - start, d};
      }
      start += d;
    }
    return {};
  }

  DualVec3 Foot(int leg, double t, const double* x, int* phase = nullptr) const {
    const auto& l = layout.legs[leg];
    const auto loc = Locate(leg, t, x);
    if (phase) *phase = loc.phase;
    const int j = loc.phase;
    if (l.stance[j]) return Variables3(x, l.foot[j]);
    const int K = config.swing_segments;
    const SD d = loc.duration * (1.0 / K);
    const double ratio = loc.local_time.value() / d.value();
    const int s = std::clamp(static_cast<int>(std::ceil(ratio - kTimeTol)) - 1,
                             0, K - 1);
    const SD tau = loc.local_time - static_cast<double>(s) * d;
    const auto w = Weights<SD>(tau, d, 0);
    auto node = [&](int m, DualVec3* pos, DualVec3* vel) {
      if (m == 0) {
        *pos = Variables3(x, l.foot[j - 1]);
        *vel = Constant3(Eigen::Vector3d::Zero());
      } else if (m == K) {
        *pos = Variables3(x, l.foot[j + 1]);
        *vel = Constant3(Eigen::Vector3d::Zero());
      } else {
        const int base = l.foot[j] + 6 * (m - 1);
        *pos = Variables3(x, base);
        *vel = Variables3(x, base + 3);
      }
    };
    DualVec3 p0, v0, p1, v1;
    node(s, &p0, &v0);
    node(s + 1, &p1, &v1);
    return w[0] * p0 + w[1] * v0 + w[2] * p1 + w[3] * v1;
  }

  DualVec3 Force(int leg, double t, const double* x, int* phase = nullptr) const {
    const auto& l = layout.legs[leg];
    const auto loc = Locate(leg, t, x);
    if (phase) *phase = loc.phase;
    const int j = loc.phase;
    if (!l.stance[j]) return Constant3(Eigen::Vector3d::Zero());
    const int K = config.force_segments;
    const SD d = loc.duration * (1.0 / K);
    const double ratio = loc.local_time.value() / d.value();
    const int s = std::clamp(static_cast<int>(std::ceil(ratio - kTimeTol)) - 1,
                             0, K - 1);
    const SD tau = loc.local_time - static_cast<double>(s) * d;
    const auto w = Weights<SD>(tau, d, 0);
    const int n0 = l.force[j] + 6 * s, n1 = n0 + 6;
    return w[0] * Variables3(x, n0) + w[1] * Variables3(x, n0 + 3) +
           w[2] * Variables3(x, n1) + w[3] * Variables3(x, n1 + 3);
  }

  // Rows: fn >= 0, fmax - fn >= 0, mu fn -/+ f.t1 >= 0, mu fn -/+ f.t2 >= 0,
  // all divided by m g.
  void ForceRows(const DualVec3& f, const Eigen::Vector3d& n, int row,
                 Eigen::Ref<Eigen::VectorXd> r,
                 std::vector<nlp::Triplet>* jac) const {
    const DualVec3 normal = Constant3(n);
    const auto tangent = [&](const Eigen::Vector3d& axis) {
      return Constant3((axis - axis.dot(n) * n).normalized());
    };
    const SD fn = Dot(f, normal);
    const SD ft1 = Dot(f, tangent(Eigen::Vector3d::UnitX()));
    const SD ft2 = Dot(f, tangent(Eigen::Vector3d::UnitY()));
    const double mu = model.friction_mu;
    const std::array<SD, 6> rows = {fn,           fmax - fn,    mu * fn - ft1,
                                    mu * fn + ft1, mu * fn - ft2, mu * fn + ft2};
    for (int k = 0; k < 6; ++k) {
      r[row + k] = rows[k].value() / mg;
      if (jac) rows[k].AppendTo(row + k, jac, 1.0 / mg);
    }
  }
};

namespace {

using Context = CentroidalProblem::Context;

void Emit(const SD& value, int row, double scale, Eigen::Ref<Eigen::VectorXd> r,
          std::vector<nlp::Triplet>* jac) {
  r[row] = scale * value.value();
  if (jac) value.AppendTo(row, jac, scale);
}

nlp::ConstraintBlock DynamicsBlock(std::shared_ptr<const Context> ctx) {
  const auto times = GridTimes(ctx->config.horizon, ctx->config.dynamics_dt);
  nlp::ConstraintBlock block;
  block.name = "dynamics";
  block.kind = nlp::ConstraintKind::kEquality;
  block.rows = 6 * static_cast<int>(times.size());
  block.eval = [ctx, times](const Eigen::VectorXd& xv,
                            Eigen::Ref<Eigen::VectorXd> r,
                            std::vector<nlp::Triplet>* jac) {
    const double* x = xv.data();
    const auto& L = ctx->layout;
    const double m = ctx->model.mass;
    const double scale = 1.0 / ctx->mg;
    for (size_t k = 0; k < times.size(); ++k) {
      const double t = times[k];
      const DualVec3 com = ctx->Body(L.com, t, 0, x);
      const DualVec3 acc = ctx->Body(L.com, t, 2, x);
      const DualVec3 rpy = ctx->Body(L.orientation, t, 0, x);
      const DualVec3 rates = ctx->Body(L.orientation, t, 1, x);
      const DualVec3 accels = ctx->Body(L.orientation, t, 2, x);

      DualVec3 force_sum = Constant3(Eigen::Vector3d::Zero());
      DualVec3 torque = Constant3(Eigen::Vector3d::Zero());
      for (int leg = 0; leg < kNumLegs; ++leg) {
        int phase = 0;
        const DualVec3 f = ctx->Force(leg, t, x, &phase);
        if (!L.legs[leg].stance[phase]) continue;
        const DualVec3 p = ctx->Foot(leg, t, x);
        force_sum = force_sum + f;
        torque = torque + Cross(p - com, f);
      }

      const DualVec3 gravity = Constant3({0.0, 0.0, -ctx->config.gravity});
      const DualVec3 linear = m * (acc - gravity) - force_sum;

      // World angular velocity and acceleration from Z-Y-X Euler rates.
      const SD cy = cos(rpy[2]), sy = sin(rpy[2]);
      const SD cp = cos(rpy[1]), sp = sin(rpy[1]);
      const DualVec3 roll_axis{cy * cp, sy * cp, -sp};
      const DualVec3 pitch_axis{-sy, cy, 0.0};
      const DualVec3 yaw_axis{0.0, 0.0, 1.0};
      const SD yd = rates[2], pd = rates[1];
      const DualVec3 roll_axis_dot{-sy * yd * cp - cy * sp * pd,
                                   cy * yd * cp - sy * sp * pd, -cp * pd};
      const DualVec3 pitch_axis_dot{-cy * yd, -sy * yd, 0.0};
      const DualVec3 omega =
          rates[0] * roll_axis + rates[1] * pitch_axis + rates[2] * yaw_axis;
      const DualVec3 omega_dot = accels[0] * roll_axis +
                                 accels[1] * pitch_axis +
                                 accels[2] * yaw_axis +
                                 rates[0] * roll_axis_dot +
                                 rates[1] * pitch_axis_dot;
      const DualMat3 R = EulerMatrix(rpy);
      const auto world_inertia = [&](const DualVec3& v) {
        return Multiply(R, MultiplyConstant(ctx->model.body_inertia,
                                            MultiplyTransposed(R, v)));
      };
      const DualVec3 angular = world_inertia(omega_dot) +
                               Cross(omega, world_inertia(omega)) - torque;
      for (int c = 0; c < 3; ++c) {
        Emit(linear[c], 6 * static_cast<int>(k) + c, scale, r, jac);
        Emit(angular[c], 6 * static_cast<int>(k) + 3 + c, scale, r, jac);
      }
    }
  };
  return block;
}

nlp::ConstraintBlock ForceNodeBlock(std::shared_ptr<const Context> ctx) {
  int count = 0;
  for (const auto& l : ctx->layout.legs) {
    for (int j = 0; j < l.phase_count(); ++j) {
      if (l.stance[j]) count += ctx->config.force_segments + 1;
    }
  }
  nlp::ConstraintBlock block;
  block.name = "force_nodes";
  block.kind = nlp::ConstraintKind::kInequality;
  block.rows = 6 * count;
  block.eval = [ctx](const Eigen::VectorXd& xv, Eigen::Ref<Eigen::VectorXd> r,
                     std::vector<nlp::Triplet>* jac) {
    const double* x = xv.data();
    int row = 0;
    for (const auto& l : ctx->layout.legs) {
      for (int j = 0; j < l.phase_count(); ++j) {
        if (!l.stance[j]) continue;
        const Eigen::Vector2d foot(x[l.foot[j]], x[l.foot[j] + 1]);
        const Eigen::Vector3d n = ctx->Terrain(foot).normal;
        for (int m = 0; m <= ctx->config.force_segments; ++m) {
          ctx->ForceRows(Variables3(x, l.force[j] + 6 * m), n, row, r, jac);
          row += 6;
        }
      }
    }
  };
  return block;
}

nlp::ConstraintBlock ForceGridBlock(std::shared_ptr<const Context> ctx) {
  const auto times =
      GridTimes(ctx->config.horizon, ctx->config.force_constraint_dt);
  nlp::ConstraintBlock block;
  block.name = "force_grid";
  block.kind = nlp::ConstraintKind::kInequality;
  block.rows = 6 * kNumLegs * static_cast<int>(times.size());
  block.eval = [ctx, times](const Eigen::VectorXd& xv,
                            Eigen::Ref<Eigen::VectorXd> r,
                            std::vector<nlp::Triplet>* jac) {
    const double* x = xv.data();
    int row = 0;
    for (double t : times) {
      for (int leg = 0; leg < kNumLegs; ++leg) {
        const auto& l = ctx->layout.legs[leg];
        int phase = 0;
        const DualVec3 f = ctx->Force(leg, t, x, &phase);
        Eigen::Vector3d n = Eigen::Vector3d::UnitZ();
        if (l.stance[phase]) {
          const Eigen::Vector2d foot(x[l.foot[phase]], x[l.foot[phase] + 1]);
          n = ctx->Terrain(foot).normal;
        }
        ctx->ForceRows(f, n, row, r, jac);
        row += 6;
      }
    }
  };
  return block;
}

nlp::ConstraintBlock SwingNodeBlock(std::shared_ptr<const Context> ctx) {
  const int interior = ctx->config.swing_segments - 1;
  int count = 0;
  for (const auto& l : ctx->layout.legs) {
    for (int j = 0; j < l.phase_count(); ++j) count += l.stance[j] ? 0 : interior;
  }
  nlp::ConstraintBlock block;
  block.name = "swing_nodes";
  block.kind = nlp::ConstraintKind::kInequality;
  block.rows = count;
  block.eval = [ctx, interior](const Eigen::VectorXd& xv,
                               Eigen::Ref<Eigen::VectorXd> r,
                               std::vector<nlp::Triplet>* jac) {
    const double* x = xv.data();
    int row = 0;
    for (const auto& l : ctx->layout.legs) {
      for (int j = 0; j < l.phase_count(); ++j) {
        if (l.stance[j]) continue;
        for (int m = 0; m < interior; ++m) {
          const DualVec3 p = Variables3(x, l.foot[j] + 6 * m);
          Emit(p[2] - ctx->Height(p[0], p[1]), row++, 1.0, r, jac);
        }
      }
    }
  };
  return block;
}

nlp::ConstraintBlock SwingGridBlock(std::shared_ptr<const Context> ctx) {
  const auto times =
      GridTimes(ctx->config.horizon, ctx->config.swing_constraint_dt);
  nlp::ConstraintBlock block;
  block.name = "swing_grid";
  block.kind = nlp::ConstraintKind::kInequality;
  block.rows = kNumLegs * static_cast<int>(times.size());
  block.eval = [ctx, times](const Eigen::VectorXd& xv,
                            Eigen::Ref<Eigen::VectorXd> r,
                            std::vector<nlp::Triplet>* jac) {
    const double* x = xv.data();
    int row = 0;
    for (double t : times) {
      for (int leg = 0; leg < kNumLegs; ++leg) {
        const DualVec3 p = ctx->Foot(leg, t, x);
        Emit(p[2] - ctx->Height(p[0], p[1]), row++, 1.0, r, jac);
      }
    }
  };
  return block;
}

nlp::ConstraintBlock StancePinBlock(std::shared_ptr<const Context> ctx) {
  int count = 0;
  for (const auto& l : ctx->layout.legs) {
    for (int j = 0; j < l.phase_count(); ++j) count += l.stance[j];
  }
  nlp::ConstraintBlock block;
  block.name = "stance_pin";
  block.kind = nlp::ConstraintKind::kEquality;
  block.rows = count;
  block.eval = [ctx](const Eigen::VectorXd& xv, Eigen::Ref<Eigen::VectorXd> r,
                     std::vector<nlp::Triplet>* jac) {
    const double* x = xv.data();
    int row = 0;
    for (const auto& l : ctx->layout.legs) {
      for (int j = 0; j < l.phase_count(); ++j) {
        if (!l.stance[j]) continue;
        const DualVec3 p = Variables3(x, l.foot[j]);
        Emit(p[2] - ctx->Height(p[0], p[1]), row++, 1.0, r, jac);
      }
    }
  };
  return block;
}

nlp::ConstraintBlock KinematicBlock(std::shared_ptr<const Context> ctx) {
  const auto times = GridTimes(ctx->config.horizon, ctx->config.dynamics_dt);
  nlp::ConstraintBlock block;
  block.name = "kinematics";
  block.kind = nlp::ConstraintKind::kInequality;
  block.rows = 6 * kNumLegs * static_cast<int>(times.size());
  block.eval = [ctx, times](const Eigen::VectorXd& xv,
                            Eigen::Ref<Eigen::VectorXd> r,
                            std::vector<nlp::Triplet>* jac) {
    const double* x = xv.data();
    const auto& L = ctx->layout;
    int row = 0;
    for (double t : times) {
      const DualVec3 com = ctx->Body(L.com, t, 0, x);
      const DualVec3 rpy = ctx->Body(L.orientation, t, 0, x);
      const DualMat3 R = ctx->config.full_orientation_boxes
                             ? EulerMatrix(rpy)
                             : YawMatrixDual(rpy[2]);
      for (int leg = 0; leg < kNumLegs; ++leg) {
        const DualVec3 local =
            MultiplyTransposed(R, ctx->Foot(leg, t, x) - com);
        const Eigen::Vector3d& c = ctx->model.box_centers[leg];
        const Eigen::Vector3d& h = ctx->model.box_half_extents[leg];
        for (int a = 0; a < 3; ++a) {
          Emit(local[a] - (c[a] - h[a]), row++, 1.0, r, jac);
          Emit((c[a] + h[a]) - local[a], row++, 1.0, r, jac);
        }
      }
    }
  };
  return block;
}

nlp::ConstraintBlock PhaseSumBlock(std::shared_ptr<const Context> ctx) {
  nlp::ConstraintBlock block;
  block.name = "phase_sum";
  block.kind = nlp::ConstraintKind::kEquality;
  block.rows = kNumLegs;
  block.eval = [ctx](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> r,
                     std::vector<nlp::Triplet>* jac) {
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const auto& l = ctx->layout.legs[leg];
      double sum = 0.0;
      for (int j = 0; j < l.phase_count(); ++j) {
        sum += x[l.durations + j];
        if (jac) jac->emplace_back(leg, l.durations + j, 1.0);
      }
      r[leg] = sum - ctx->config.horizon;
    }
  };
  return block;
}

void Fix(nlp::NlpProblem& p, int index, double value) {
  p.initial()[index] = value;
  p.lower()[index] = value;
  p.upper()[index] = value;
}

}  // namespace

// ---------------------------------------------------------------------------
// CentroidalProblem.

CentroidalProblem::CentroidalProblem(const HeightField& terrain,
                                     const RobotModel& model,
                                     const PlannerConfig& config)
    : context_(std::make_shared<Context>()) {
  config.Validate();
  model.Validate();
  auto& c = *context_;
  c.terrain = terrain;
  c.model = model;
  c.config = config;
  c.schedule = NominalSchedule(config);
  c.layout = VariableLayout::Build(config, c.schedule);
  c.mg = model.mass * config.gravity;
  c.fmax = config.ForceMax(model);
  c.body_segment = config.horizon / config.com_segments;
  double start = 0.0;
  for (int k = 0; k < config.com_segments; ++k) {
    c.body_starts.push_back(start);
    start += c.body_segment;
  }

  // Nominal footprints at the start and goal, feet on the terrain.
  const auto footprint = [&](const Eigen::Vector2d& xy,
                             std::array<Eigen::Vector3d, kNumLegs>* feet,
                             const char* what) {
    double mean = 0.0;
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Eigen::Vector2d p = xy + model.hip_offsets[leg].head<2>();
      const auto s = terrain.Query(p);
      if (!s) {
        throw PlannerError(std::string(what) + " footprint of leg " +
                           kLegNames[leg] + " lies off the terrain");
      }
      (*feet)[leg] = {p.x(), p.y(), s->height};
      mean += s->height / kNumLegs;
    }
    return Eigen::Vector3d(xy.x(), xy.y(), mean + model.nominal_foot_depth);
  };
  c.start_com = footprint(config.start_xy, &c.start_feet, "start");
  c.goal_com = footprint(config.start_xy + config.goal_displacement,
                         &c.goal_feet, "goal");

  // Variables and bounds.
  const auto& L = c.layout;
  problem_.AddVariables(L.total, 0.0, -kInf, kInf);
  const int last = L.body_nodes - 1;
  for (int a = 0; a < 3; ++a) {
    Fix(problem_, L.com + a, c.start_com[a]);
    Fix(problem_, L.com + 3 + a, 0.0);
    Fix(problem_, L.com + 6 * last + 3 + a, 0.0);
    Fix(problem_, L.orientation + a, 0.0);
    Fix(problem_, L.orientation + 3 + a, 0.0);
    Fix(problem_, L.orientation + 6 * last + 3 + a, 0.0);
  }
  Fix(problem_, L.com + 6 * last, c.goal_com.x());
  Fix(problem_, L.com + 6 * last + 1, c.goal_com.y());
  Fix(problem_, L.orientation + 6 * last + 2, 0.0);
  for (int k = 1; k < L.body_nodes; ++k) {
    for (int a = 0; a < 2; ++a) {
      problem_.lower()[L.orientation + 6 * k + a] = -kTiltBound;
      problem_.upper()[L.orientation + 6 * k + a] = kTiltBound;
    }
  }
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const auto& l = L.legs[leg];
    const int phases = l.phase_count();
    for (int a = 0; a < 3; ++a) Fix(problem_, l.foot[0] + a, c.start_feet[leg][a]);
    for (int j = 0; j < phases; ++j) {
      if (l.stance[j]) {
        const int K = config.force_segments;
        if (j > 0) {
          for (int a = 0; a < 6; ++a) Fix(problem_, l.force[j] + a, 0.0);
        }
        if (j < phases - 1) {
          for (int a = 0; a < 6; ++a) Fix(problem_, l.force[j] + 6 * K + a, 0.0);
        }
      }
      if (phases == 1) {
        Fix(problem_, l.durations + j, config.horizon);
      } else {
        problem_.lower()[l.durations + j] = config.min_phase_duration;
        problem_.upper()[l.durations + j] = config.max_phase_duration;
      }
    }
  }

  // Typical magnitudes; they shape the solver's steps in the null space of
  // the constraint Jacobian.
  auto& scale = problem_.scale();
  scale = Eigen::VectorXd::Ones(L.total);
  const double force_scale = 0.5 * c.mg / kNumLegs;
  for (int k = 0; k < L.body_nodes; ++k) {
    scale.segment<3>(L.com + 6 * k).setConstant(0.1);
    scale.segment<3>(L.com + 6 * k + 3).setConstant(0.5);
    scale.segment<3>(L.orientation + 6 * k).setConstant(0.1);
    scale.segment<3>(L.orientation + 6 * k + 3).setConstant(0.5);
  }
  for (const auto& l : L.legs) {
    for (int j = 0; j < l.phase_count(); ++j) {
      if (l.stance[j]) {
        scale.segment<3>(l.foot[j]).setConstant(0.1);
        for (int m = 0; m <= config.force_segments; ++m) {
          scale.segment<3>(l.force[j] + 6 * m).setConstant(force_scale);
          scale.segment<3>(l.force[j] + 6 * m + 3).setConstant(force_scale);
        }
      } else {
        for (int m = 0; m + 1 < config.swing_segments; ++m) {
          scale.segment<3>(l.foot[j] + 6 * m).setConstant(0.1);
          scale.segment<3>(l.foot[j] + 6 * m + 3).setConstant(0.5);
        }
      }
      scale[l.durations + j] = 0.1;
    }
  }

  std::shared_ptr<const Context> ctx = context_;
  problem_.AddBlock(DynamicsBlock(ctx));
  problem_.AddBlock(ForceNodeBlock(ctx));
  problem_.AddBlock(ForceGridBlock(ctx));
  problem_.AddBlock(SwingNodeBlock(ctx));
  problem_.AddBlock(SwingGridBlock(ctx));
  problem_.AddBlock(StancePinBlock(ctx));
  problem_.AddBlock(KinematicBlock(ctx));
  problem_.AddBlock(PhaseSumBlock(ctx));
  problem_.initial() = Nominal();
}

const VariableLayout& CentroidalProblem::layout() const { return context_->layout; }
const PhaseSchedule& CentroidalProblem::nominal_schedule() const {
  return context_->schedule;
}
const Eigen::Vector3d& CentroidalProblem::start_com() const {
  return context_->start_com;
}
const Eigen::Vector3d& CentroidalProblem::goal_com() const {
  return context_->goal_com;
}
const std::array<Eigen::Vector3d, kNumLegs>& CentroidalProblem::start_feet()
    const {
  return context_->start_feet;
}
int CentroidalProblem::terrain_clamp_count() const {
  return context_->clamps.load();
}

namespace {

Eigen::VectorXd InitialGuess(const Context& c, const nlp::NlpProblem& problem,
                             double pos_sigma, double force_sigma,
                             std::uint64_t seed) {
  Rng rng(seed);
  const auto& L = c.layout;
  const auto& cfg = c.config;
  const double T = cfg.horizon;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(L.total);
  const auto com_at = [&](double t) {
    const double s = std::clamp(t / T, 0.0, 1.0);
    return Eigen::Vector3d(c.start_com + s * (c.goal_com - c.start_com));
  };
  const Eigen::Vector3d mean_velocity = (c.goal_com - c.start_com) / T;

  for (int k = 0; k < L.body_nodes; ++k) {
    const double t = k * c.body_segment;
    const Eigen::Vector3d p = com_at(t);
    const bool end = k == 0 || k == L.body_nodes - 1;
    for (int a = 0; a < 3; ++a) {
      x[L.com + 6 * k + a] = p[a] + rng.Normal(pos_sigma);
      x[L.com + 6 * k + 3 + a] = end ? 0.0 : mean_velocity[a];
    }
  }

  const double nominal_force = c.mg / kNumLegs;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const auto& l = L.legs[leg];
    const auto& d = c.schedule.durations[leg];
    std::vector<Eigen::Vector3d> stance_pos(l.phase_count());
    double t = 0.0;
    for (int j = 0; j < l.phase_count(); ++j) {
      if (l.stance[j]) {
        const double t_mid = j == 0 ? 0.0 : t + 0.5 * d[j];
        const Eigen::Vector2d xy =
            com_at(t_mid).head<2>() + c.model.hip_offsets[leg].head<2>();
        stance_pos[j] = {xy.x(), xy.y(), c.Terrain(xy).height};
      }
      t += d[j];
    }
    for (int j = 0; j < l.phase_count(); ++j) {
      if (l.stance[j]) {
        for (int a = 0; a < 3; ++a) {
          x[l.foot[j] + a] = stance_pos[j][a] + rng.Normal(pos_sigma);
        }
        for (int m = 0; m <= cfg.force_segments; ++m) {
          const int base = l.force[j] + 6 * m;
          x[base + 2] = nominal_force;
          for (int a = 0; a < 3; ++a) x[base + a] += rng.Normal(force_sigma);
        }
      } else {
        const Eigen::Vector3d& a0 = stance_pos[j - 1];
        const Eigen::Vector3d& a1 = stance_pos[j + 1];
        const Eigen::Vector3d vel = (a1 - a0) / d[j];
        for (int m = 1; m < cfg.swing_segments; ++m) {
          const double s = static_cast<double>(m) / cfg.swing_segments;
          Eigen::Vector3d p = a0 + s * (a1 - a0);
          p.z() = std::max(a0.z(), a1.z()) + cfg.swing_apex;
          const int base = l.foot[j] + 6 * (m - 1);
          for (int a = 0; a < 3; ++a) {
            x[base + a] = p[a] + rng.Normal(pos_sigma);
            x[base + 3 + a] = a == 2 ? 0.0 : vel[a];
          }
        }
      }
      x[l.durations + j] = d[j];
    }
  }
  return problem.Clamp(x);
}

}  // namespace

Eigen::VectorXd CentroidalProblem::Initialize(std::uint64_t seed) const {
  return InitialGuess(*context_, problem_, context_->config.init_pos_noise_sigma,
                      context_->config.init_force_noise_sigma, seed);
}

Eigen::VectorXd CentroidalProblem::Nominal() const {
  return InitialGuess(*context_, problem_, 0.0, 0.0, 0);
}

CentroidalSolution CentroidalProblem::Extract(const Eigen::VectorXd& x) const {
  const auto& c = *context_;
  const auto& L = c.layout;
  const auto& cfg = c.config;
  CentroidalSolution sol;
  sol.variables = x;
  const auto node = [&](int index) {
    return SplineNode{x.segment<3>(index), x.segment<3>(index + 3)};
  };
  const auto body = [&](int base) {
    std::vector<SplineNode> nodes;
    for (int k = 0; k < L.body_nodes; ++k) nodes.push_back(node(base + 6 * k));
    return PhaseSpline(std::move(nodes),
                       std::vector<double>(cfg.com_segments, c.body_segment));
  };
  sol.com = body(L.com);
  sol.orientation = body(L.orientation);

  sol.schedule.durations.resize(kNumLegs);
  sol.schedule.starts_in_stance.assign(kNumLegs, true);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const auto& l = L.legs[leg];
    std::vector<double> durations(l.phase_count());
    for (int j = 0; j < l.phase_count(); ++j) durations[j] = x[l.durations + j];
    sol.schedule.durations[leg] = durations;

    const auto stance_node = [&](int j) {
      return SplineNode{x.segment<3>(l.foot[j]), Eigen::Vector3d::Zero()};
    };
    std::vector<SplineNode> fnodes{stance_node(0)};
    std::vector<double> fdur;
    std::vector<PhaseTag> ftags;
    std::vector<SplineNode> gnodes{node(l.force[0])};
    std::vector<double> gdur;
    std::vector<PhaseTag> gtags;
    for (int j = 0; j < l.phase_count(); ++j) {
      const double d = durations[j];
      if (l.stance[j]) {
        fnodes.push_back(stance_node(j));
        fdur.push_back(d);
        ftags.push_back(PhaseTag::kStance);
        for (int m = 1; m <= cfg.force_segments; ++m) {
          gnodes.push_back(node(l.force[j] + 6 * m));
          gdur.push_back(d / cfg.force_segments);
          gtags.push_back(PhaseTag::kStance);
        }
      } else {
        for (int m = 1; m < cfg.swing_segments; ++m) {
          fnodes.push_back(node(l.foot[j] + 6 * (m - 1)));
        }
        fnodes.push_back(stance_node(j + 1));
        for (int m = 0; m < cfg.swing_segments; ++m) {
          fdur.push_back(d / cfg.swing_segments);
          ftags.push_back(PhaseTag::kSwing);
        }
        gnodes.push_back(SplineNode{});
        gdur.push_back(d);
        gtags.push_back(PhaseTag::kSwing);
      }
    }
    sol.feet[leg] = PhaseSpline(std::move(fnodes), std::move(fdur),
                                std::move(ftags));
    sol.forces[leg] = PhaseSpline(std::move(gnodes), std::move(gdur),
                                  std::move(gtags));
  }
  sol.terrain_clamps = terrain_clamp_count();
  return sol;
}

CentroidalSolution Plan(const HeightField& terrain, const RobotModel& model,
                        const PlannerConfig& config, std::uint64_t seed) {
  CentroidalProblem problem(terrain, model, config);
  problem.mutable_nlp().initial() = problem.Initialize(seed);
  nlp::SolverOptions options = config.solver;
  options.seed = seed;
  const auto result = nlp::Solve(problem.nlp(), options);
  CentroidalSolution solution = problem.Extract(result.x);
  solution.report = result.report;
  solution.seed = seed;
  return solution;
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

void PutSpline(KeyValueConfig& c, const std::string& prefix,
               const PhaseSpline& s) {
  std::vector<double> nodes;
  for (const auto& n : s.nodes()) {
    for (int a = 0; a < 3; ++a) nodes.push_back(n.pos[a]);
    for (int a = 0; a < 3; ++a) nodes.push_back(n.vel[a]);
  }
  std::vector<double> tags;
  for (auto t : s.tags()) tags.push_back(static_cast<int>(t));
  c.SetVector(prefix + "_nodes", nodes);
  c.SetVector(prefix + "_durations", s.durations());
  c.SetVector(prefix + "_tags", tags);
}

PhaseSpline GetSpline(const KeyValueConfig& c, const std::string& prefix) {
  const auto flat = c.GetVector(prefix + "_nodes");
  const auto durations = c.GetVector(prefix + "_durations");
  const auto tag_values = c.GetVector(prefix + "_tags");
  if (flat.size() % 6 != 0) {
    throw ConfigError("solution key '" + prefix + "_nodes' malformed");
  }
  std::vector<SplineNode> nodes(flat.size() / 6);
  for (size_t k = 0; k < nodes.size(); ++k) {
    nodes[k].pos = Eigen::Vector3d(flat[6 * k], flat[6 * k + 1], flat[6 * k + 2]);
    nodes[k].vel =
        Eigen::Vector3d(flat[6 * k + 3], flat[6 * k + 4], flat[6 * k + 5]);
  }
  std::vector<PhaseTag> tags;
  for (double t : tag_values) tags.push_back(static_cast<PhaseTag>(std::lround(t)));
  try {
    return PhaseSpline(std::move(nodes), durations, std::move(tags));
  } catch (const SplineError& e) {
    throw ConfigError("solution spline '" + prefix + "': " + e.what());
  }
}

std::string LegPrefix(const char* what, int leg) {
  std::string name = kLegNames[leg];
  for (auto& ch : name) ch = static_cast<char>(std::tolower(ch));
  return std::string(what) + "_" + name;
}

nlp::SolveStatus ParseStatus(const std::string& s) {
  for (auto status :
       {nlp::SolveStatus::kConverged, nlp::SolveStatus::kIterationLimit,
        nlp::SolveStatus::kTimeLimit, nlp::SolveStatus::kNumericalError}) {
    if (s == nlp::ToString(status)) return status;
  }
  throw ConfigError("unknown solve status '" + s + "'");
}

}  // namespace

KeyValueConfig CentroidalSolution::ToConfig() const {
  KeyValueConfig c;
  c.SetInt("seed", static_cast<long long>(seed));
  c.Set("status", nlp::ToString(report.status));
  c.SetDouble("max_violation", report.max_violation);
  c.SetDouble("initial_violation", report.initial_violation);
  c.SetInt("iterations", report.iterations);
  c.SetInt("outer_iterations", report.outer_iterations);
  c.SetInt("terrain_clamps", terrain_clamps);
  PutSpline(c, "com", com);
  PutSpline(c, "orientation", orientation);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    PutSpline(c, LegPrefix("foot", leg), feet[leg]);
    PutSpline(c, LegPrefix("force", leg), forces[leg]);
    c.SetVector(LegPrefix("phases", leg), schedule.durations[leg]);
    c.SetInt(LegPrefix("starts_in_stance", leg),
             schedule.starts_in_stance[leg] ? 1 : 0);
  }
  std::vector<double> vars(variables.data(), variables.data() + variables.size());
  c.SetVector("variables", vars);
  return c;
}

CentroidalSolution CentroidalSolution::FromConfig(const KeyValueConfig& c) {
  CentroidalSolution s;
  s.seed = static_cast<std::uint64_t>(c.GetInt("seed", 0));
  s.report.status = ParseStatus(c.GetString("status"));
  s.report.max_violation = c.GetDouble("max_violation", 0.0);
  s.report.initial_violation = c.GetDouble("initial_violation", 0.0);
  s.report.iterations = c.GetInt("iterations", 0);
  s.report.outer_iterations = c.GetInt("outer_iterations", 0);
  s.terrain_clamps = c.GetInt("terrain_clamps", 0);
  s.com = GetSpline(c, "com");
  s.orientation = GetSpline(c, "orientation");
  s.schedule.durations.resize(kNumLegs);
  s.schedule.starts_in_stance.resize(kNumLegs);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    s.feet[leg] = GetSpline(c, LegPrefix("foot", leg));
    s.forces[leg] = GetSpline(c, LegPrefix("force", leg));
    s.schedule.durations[leg] = c.GetVector(LegPrefix("phases", leg));
    s.schedule.starts_in_stance[leg] =
        c.GetInt(LegPrefix("starts_in_stance", leg), 1) != 0;
  }
  if (c.Has("variables")) {
    const auto v = c.GetVector("variables");
    s.variables = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  }
  return s;
}

}  // namespace timit
