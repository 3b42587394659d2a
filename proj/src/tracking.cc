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

#include "timit/tracking.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "timit/rotation.h"

namespace timit {
namespace {

constexpr const char* kTermNames[5] = {"com", "ee", "linvel", "angvel",
                                       "quat"};

double Term(double weight, double exponent, double squared_error) {
  return weight * std::exp(-exponent * squared_error);
}

}  // namespace

void TrackingConfig::Validate() const {
  if (!(tau > 0.0)) throw TrackingError("tau must be positive");
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12) {
    throw TrackingError("reward weights must sum to 1, got " +
                        FormatDouble(sum));
  }
  for (double e : exponents) {
    if (!(e > 0.0)) throw TrackingError("reward exponents must be positive");
  }
  if (image_pixels < 1 || !(image_extent > 0.0)) {
    throw TrackingError("bad height image size");
  }
  if (!(image_rate > 0.0) || !(control_rate >= image_rate)) {
    throw TrackingError("image rate must be positive and <= control rate");
  }
  if (command_lookahead < 0) throw TrackingError("negative command lookahead");
  for (const auto& b : bodies) {
    bool known = b == "base";
    for (const char* leg : kLegNames) known = known || b == leg;
    if (!known) throw TrackingError("unknown body '" + b + "'");
  }
}

int TrackingConfig::ImagePeriod() const {
  return std::max(1, static_cast<int>(std::lround(control_rate / image_rate)));
}

KeyValueConfig TrackingConfig::ToConfig() const {
  KeyValueConfig c;
  c.SetDouble("tau", tau);
  c.SetVector("weights", {weights.begin(), weights.end()});
  c.SetVector("exponents", {exponents.begin(), exponents.end()});
  c.SetInt("image_pixels", image_pixels);
  c.SetDouble("image_extent", image_extent);
  c.SetDouble("image_ahead", image_ahead);
  c.SetDouble("image_rate", image_rate);
  c.SetDouble("control_rate", control_rate);
  c.SetInt("command_lookahead", command_lookahead);
  c.SetDouble("finetune_velocity", finetune_velocity);
  c.SetVector("eval_command", {eval_command.x(), eval_command.y()});
  std::string names;
  for (const auto& b : bodies) names += (names.empty() ? "" : " ") + b;
  c.Set("bodies", names);
  return c;
}

TrackingConfig TrackingConfig::FromConfig(const KeyValueConfig& c) {
  TrackingConfig t;
  t.tau = c.GetDouble("tau", t.tau);
  auto array5 = [&](const std::string& key, std::array<double, 5>& dst) {
    if (!c.Has(key)) return;
    const auto v = c.GetVector(key);
    if (v.size() != 5) throw ConfigError(key + " needs 5 values");
    std::copy(v.begin(), v.end(), dst.begin());
  };
  array5("weights", t.weights);
  array5("exponents", t.exponents);
  t.image_pixels = c.GetInt("image_pixels", t.image_pixels);
  t.image_extent = c.GetDouble("image_extent", t.image_extent);
  t.image_ahead = c.GetDouble("image_ahead", t.image_ahead);
  t.image_rate = c.GetDouble("image_rate", t.image_rate);
  t.control_rate = c.GetDouble("control_rate", t.control_rate);
  t.command_lookahead = c.GetInt("command_lookahead", t.command_lookahead);
  t.finetune_velocity = c.GetDouble("finetune_velocity", t.finetune_velocity);
  if (c.Has("eval_command")) {
    const auto v = c.GetVector("eval_command");
    if (v.size() != 2) throw ConfigError("eval_command needs 2 values");
    t.eval_command = Eigen::Vector2d(v[0], v[1]);
  }
  if (c.Has("bodies")) {
    t.bodies.clear();
    std::istringstream names(c.GetString("bodies"));
    std::string name;
    while (names >> name) t.bodies.push_back(name);
  }
  t.Validate();
  return t;
}

TrackingConfig TrackingConfig::Load(const std::string& path) {
  return FromConfig(KeyValueConfig::Load(path));
}

SimState StateFromClip(const TrajectoryClip& clip, int frame,
                       const TrackingConfig& config) {
  if (frame < 0 || frame >= clip.frames) {
    throw TrackingError("frame " + std::to_string(frame) + " outside clip");
  }
  SimState s;
  s.com_pos = clip.Vec3("com_pos", frame);
  s.com_linvel = clip.Vec3("com_linvel", frame);
  s.com_angvel = clip.Vec3("com_angvel", frame);
  s.base_quat = clip.BaseQuat(frame).normalized();
  for (int leg = 0; leg < kNumLegs; ++leg) s.ee_pos[leg] = clip.FootPos(frame, leg);
  s.joints = clip.Joints("q", frame);
  s.joint_velocities = clip.Joints("qdot", frame);
  for (const auto& b : config.bodies) {
    if (b == "base") {
      s.body_positions.push_back(s.com_pos);
      continue;
    }
    for (int leg = 0; leg < kNumLegs; ++leg) {
      if (b == kLegNames[leg]) s.body_positions.push_back(s.ee_pos[leg]);
    }
  }
  return s;
}

Truncation TruncationError(const SimState& sim, const SimState& ref,
                           const TrackingConfig& config) {
  if (sim.body_positions.size() != ref.body_positions.size()) {
    throw TrackingError("body count mismatch: " +
                        std::to_string(sim.body_positions.size()) + " vs " +
                        std::to_string(ref.body_positions.size()));
  }
  if (sim.joints.size() != ref.joints.size()) {
    throw TrackingError("joint count mismatch: " +
                        std::to_string(sim.joints.size()) + " vs " +
                        std::to_string(ref.joints.size()));
  }
  Truncation out;
  const size_t nb = sim.body_positions.size();
  if (nb > 0) {
    double sum = 0.0;
    for (size_t i = 0; i < nb; ++i) {
      sum += (sim.body_positions[i] - ref.body_positions[i]).lpNorm<1>();
    }
    out.epsilon += sum / (3.0 * static_cast<double>(nb));
  }
  if (sim.joints.size() > 0) {
    out.epsilon += (sim.joints - ref.joints).lpNorm<1>() /
                   static_cast<double>(sim.joints.size());
  }
  out.r_trunc = 1.0 - out.epsilon / config.tau;
  out.terminate = out.epsilon >= config.tau;
  return out;
}

TrackingRewards ComputeTrackingRewards(const SimState& sim, const SimState& ref,
                                       const TrackingConfig& config) {
  double ee = 0.0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    ee += (sim.ee_pos[leg] - ref.ee_pos[leg]).squaredNorm();
  }
  const double angle = QuaternionAngleBetween(sim.base_quat, ref.base_quat);
  const std::array<double, 5> errors{
      (sim.com_pos - ref.com_pos).squaredNorm(), ee,
      (sim.com_linvel - ref.com_linvel).squaredNorm(),
      (sim.com_angvel - ref.com_angvel).squaredNorm(), angle * angle};
  std::array<double, 5> r;
  for (int k = 0; k < 5; ++k) {
    r[k] = Term(config.weights[k], config.exponents[k], errors[k]);
  }
  TrackingRewards out{r[0], r[1], r[2], r[3], r[4], 0.0};
  out.total = r[0] + r[1] + r[2] + r[3] + r[4];
  return out;
}

double FinetuneReward(const SimState& sim, const TrackingConfig& config) {
  const double dv = sim.com_linvel.x() - config.finetune_velocity;
  const double y = sim.com_pos.y();
  return Term(config.weights[0], config.exponents[0], dv * dv + y * y);
}

bool NonEndEffectorContact(std::span<const BodyContact> contacts,
                           std::span<const int> end_effector_bodies) {
  auto is_ee = [&](int body) {
    return std::find(end_effector_bodies.begin(), end_effector_bodies.end(),
                     body) != end_effector_bodies.end();
  };
  for (const auto& c : contacts) {
    const bool ok = (c.body_a == kEnvironment && is_ee(c.body_b)) ||
                    (c.body_b == kEnvironment && is_ee(c.body_a));
    if (!ok) return true;
  }
  return false;
}

Eigen::MatrixXd LocalHeightImage(const HeightField& terrain,
                                 const Eigen::Vector3d& com,
                                 const Eigen::Matrix3d& base_rotation,
                                 const TrackingConfig& config) {
  const int n = config.image_pixels;
  const double step = config.image_extent / n;
  const double yaw = std::atan2(base_rotation(1, 0), base_rotation(0, 0));
  const Eigen::Matrix2d rot = YawMatrix(yaw).topLeftCorner<2, 2>();
  Eigen::MatrixXd image(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const Eigen::Vector2d local(
          config.image_ahead - 0.5 * config.image_extent + (r + 0.5) * step,
          -0.5 * config.image_extent + (c + 0.5) * step);
      const Eigen::Vector2d p =
          terrain.ClampToFootprint(com.head<2>() + rot * local);
      image(r, c) = terrain.QueryOrThrow(p).height;
    }
  }
  return image;
}

Observation AssembleObservation(const SimState& sim, const HeightField& terrain,
                                const TrajectoryClip& clip, int frame,
                                const ImageAnchor* last,
                                const TrackingConfig& config,
                                CommandMode mode) {
  if (frame < 0 || frame >= clip.frames) {
    throw TrackingError("frame " + std::to_string(frame) + " outside clip");
  }
  const Eigen::Matrix3d R = sim.base_quat.normalized().toRotationMatrix();
  Observation obs;
  if (last == nullptr || frame % config.ImagePeriod() == 0) {
    obs.anchor.frame = frame;
    obs.anchor.position = sim.com_pos;
    obs.anchor.rotation = R;
    obs.anchor.image = LocalHeightImage(terrain, sim.com_pos, R, config);
  } else {
    obs.anchor = *last;
  }
  obs.height_image = obs.anchor.image;
  obs.q = sim.joints;
  obs.qdot = sim.joint_velocities;
  obs.linvel = R.transpose() * sim.com_linvel;
  obs.angvel = R.transpose() * sim.com_angvel;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    obs.feet[leg] = R.transpose() * (sim.ee_pos[leg] - sim.com_pos);
  }
  const Eigen::Vector2d under = terrain.ClampToFootprint(sim.com_pos.head<2>());
  obs.height = sim.com_pos.z() - terrain.QueryOrThrow(under).height;
  obs.c = obs.anchor.rotation.transpose() * (sim.com_pos - obs.anchor.position);
  obs.X = R;
  obs.X_hat = obs.anchor.rotation.transpose() * R;
  obs.previous_action = sim.previous_action;
  obs.com_y = sim.com_pos.y();
  if (mode == CommandMode::kEvaluation) {
    obs.command = config.eval_command;
  } else {
    const int ahead = std::min(frame + config.command_lookahead, clip.frames - 1);
    const Eigen::Vector3d ref = clip.Vec3("com_pos", ahead);
    obs.command = Eigen::Vector2d(ref.x() - sim.com_pos.x(), ref.y());
  }
  return obs;
}

Eigen::VectorXd Observation::Flatten() const {
  std::vector<double> v;
  for (int r = 0; r < height_image.rows(); ++r) {
    for (int c = 0; c < height_image.cols(); ++c) v.push_back(height_image(r, c));
  }
  auto put = [&](const auto& x) {
    for (Eigen::Index k = 0; k < x.size(); ++k) v.push_back(x(k));
  };
  auto put_matrix = [&](const Eigen::Matrix3d& m) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) v.push_back(m(r, c));
    }
  };
  put(q);
  put(qdot);
  put(linvel);
  put(angvel);
  for (const auto& f : feet) put(f);
  v.push_back(height);
  put(c);
  put_matrix(X);
  put_matrix(X_hat);
  put(previous_action);
  v.push_back(com_y);
  put(command);
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

TraceEvaluation EvaluateTrace(const TrajectoryClip& sim,
                              const TrajectoryClip& ref,
                              const TrackingConfig& config) {
  if (sim.frames != ref.frames) {
    throw TrackingError("trace has " + std::to_string(sim.frames) +
                        " frames, clip has " + std::to_string(ref.frames));
  }
  TraceEvaluation out;
  for (int f = 0; f < ref.frames; ++f) {
    const SimState s = StateFromClip(sim, f, config);
    const SimState r = StateFromClip(ref, f, config);
    out.rewards.push_back(ComputeTrackingRewards(s, r, config));
    out.truncation.push_back(TruncationError(s, r, config));
    if (out.first_termination < 0 && out.truncation.back().terminate) {
      out.first_termination = f;
    }
  }
  return out;
}

std::string TraceEvaluation::Table() const {
  std::ostringstream out;
  out << "frame";
  for (const char* name : kTermNames) out << "\tr_" << name;
  out << "\ttotal\tepsilon\tr_trunc\tterminate\n";
  for (size_t f = 0; f < rewards.size(); ++f) {
    out << f;
    for (double r : rewards[f].terms()) out << '\t' << FormatDouble(r);
    out << '\t' << FormatDouble(rewards[f].total) << '\t'
        << FormatDouble(truncation[f].epsilon) << '\t'
        << FormatDouble(truncation[f].r_trunc) << '\t'
        << (truncation[f].terminate ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace timit
