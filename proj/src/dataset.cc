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

#include "timit/dataset.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "timit/config_file.h"
#include "timit/rotation.h"

namespace timit {
namespace {

namespace fs = std::filesystem;

struct ChannelSpec {
  const char* name;
  int width;
};

constexpr ChannelSpec kChannels[] = {
    {"time", 1},       {"com_pos", 3}, {"com_linvel", 3},
    {"com_angvel", 3}, {"base_quat", 4}, {"ee_pos", 12},
    {"contact", 4},    {"q", 12},      {"qdot", 12},
};

static_assert(std::endian::native == std::endian::little,
              "clip payloads are written in native byte order");

void WriteFloats(const fs::path& path, const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!out) throw DatasetError("short write to " + path.string());
}

std::vector<float> ReadFloats(const fs::path& path, size_t count,
                              const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("missing channel '" + what + "' (" +
                              path.string() + ")");
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<size_t>(in.tellg());
  in.seekg(0);
  if (bytes < count * sizeof(float)) {
    throw DatasetError("truncated channel '" + what + "': expected " +
                       std::to_string(count * sizeof(float)) + " bytes, got " +
                       std::to_string(bytes));
  }
  if (bytes > count * sizeof(float)) {
    throw DatasetError("channel '" + what + "' holds " +
                       std::to_string(bytes / sizeof(float)) +
                       " values but the manifest frame count implies " +
                       std::to_string(count));
  }
  std::vector<float> values(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(bytes));
  return values;
}

std::string LegKey(const std::string& prefix, int leg) {
  return prefix + "_" + kLegNames[leg];
}

void Append(std::vector<float>& dst, const Eigen::Vector3d& v) {
  for (int k = 0; k < 3; ++k) dst.push_back(static_cast<float>(v[k]));
}

}  // namespace

const ClipChannel& TrajectoryClip::channel(const std::string& name) const {
  for (const auto& c : channels) {
    if (c.name == name) return c;
  }
  throw DatasetError("clip has no channel '" + name + "'");
}

ClipChannel& TrajectoryClip::channel(const std::string& name) {
  for (auto& c : channels) {
    if (c.name == name) return c;
  }
  throw DatasetError("clip has no channel '" + name + "'");
}

Eigen::Vector3d TrajectoryClip::Vec3(const std::string& name, int frame,
                                     int offset) const {
  const ClipChannel& c = channel(name);
  return Eigen::Vector3d(c.at(frame, offset), c.at(frame, offset + 1),
                         c.at(frame, offset + 2));
}

Eigen::Quaterniond TrajectoryClip::BaseQuat(int frame) const {
  const ClipChannel& c = channel("base_quat");
  return Eigen::Quaterniond(c.at(frame, 0), c.at(frame, 1), c.at(frame, 2),
                            c.at(frame, 3));
}

Vector12d TrajectoryClip::Joints(const std::string& name, int frame) const {
  const ClipChannel& c = channel(name);
  Vector12d q;
  for (int k = 0; k < kNumJoints; ++k) q[k] = c.at(frame, k);
  return q;
}

HeightField TrajectoryClip::TerrainPatch() const {
  std::vector<double> heights(terrain_image.begin(), terrain_image.end());
  return HeightField(image_rows, image_cols, image_cell_size, image_origin,
                     std::move(heights));
}

bool TrajectoryClip::operator==(const TrajectoryClip& other) const {
  return horizon == other.horizon && rate == other.rate &&
         frames == other.frames && image_rows == other.image_rows &&
         image_cols == other.image_cols &&
         image_cell_size == other.image_cell_size &&
         image_origin == other.image_origin &&
         terrain_image == other.terrain_image && channels == other.channels &&
         schedule.durations == other.schedule.durations &&
         schedule.starts_in_stance == other.schedule.starts_in_stance &&
         robot_hash == other.robot_hash &&
         terrain_seed == other.terrain_seed && plan_seed == other.plan_seed;
}

int ClipFrameCount(double horizon, double rate) {
  return static_cast<int>(std::lround(horizon * rate)) + 1;
}

TrajectoryClip SampleClip(const CentroidalSolution& solution,
                          const HeightField& terrain_patch,
                          const RobotModel& model) {
  TrajectoryClip clip;
  clip.horizon = solution.horizon();
  clip.frames = ClipFrameCount(clip.horizon, clip.rate);
  clip.schedule = solution.schedule;
  clip.robot_hash = model.Hash();
  clip.plan_seed = solution.seed;
  clip.image_rows = terrain_patch.rows();
  clip.image_cols = terrain_patch.cols();
  clip.image_cell_size = terrain_patch.cell_size();
  clip.image_origin = terrain_patch.origin();
  for (double h : terrain_patch.heights()) {
    clip.terrain_image.push_back(static_cast<float>(h));
  }

  std::vector<float> time, com_pos, com_linvel, com_angvel, quat, ee, contact,
      q_flat, qdot_flat;
  std::vector<Vector12d> joints;
  const double dt = 1.0 / clip.rate;
  for (int f = 0; f < clip.frames; ++f) {
    // The last frame lands on the horizon exactly.
    const double t = std::min(f * dt, clip.horizon);
    time.push_back(static_cast<float>(t));
    const SplineState com = solution.com.EvalExtrapolated(t);
    const SplineState rpy = solution.orientation.EvalExtrapolated(t);
    Append(com_pos, com.pos);
    Append(com_linvel, com.vel);
    Append(com_angvel, EulerZyxRatesToWorldOmega(rpy.pos, rpy.vel));
    const Eigen::Quaterniond qb = EulerZyxToQuaternion(rpy.pos);
    if (std::abs(qb.norm() - 1.0) > 1e-9) {
      throw DatasetError("non-unit base quaternion at frame " +
                         std::to_string(f));
    }
    for (double v : {qb.w(), qb.x(), qb.y(), qb.z()}) {
      quat.push_back(static_cast<float>(v));
    }

    BasePose base{com.pos, EulerZyxToMatrix(rpy.pos)};
    std::array<Eigen::Vector3d, kNumLegs> feet;
    for (int leg = 0; leg < kNumLegs; ++leg) {
      feet[leg] = solution.feet[leg].EvalExtrapolated(t).pos;
      Append(ee, feet[leg]);
      contact.push_back(solution.schedule.InStance(leg, t) ? 1.0f : 0.0f);
    }
    try {
      joints.push_back(InverseKinematicsAll(model, base, feet));
    } catch (const std::exception& e) {
      throw DatasetError("inverse kinematics failed at frame " +
                         std::to_string(f) + " (t=" + FormatDouble(t) +
                         "): " + e.what());
    }
    for (int k = 0; k < kNumJoints; ++k) {
      q_flat.push_back(static_cast<float>(joints.back()[k]));
    }
  }
  for (const Vector12d& qd : JointVelocitiesByDifferences(joints, dt)) {
    for (int k = 0; k < kNumJoints; ++k) {
      qdot_flat.push_back(static_cast<float>(qd[k]));
    }
  }

  std::vector<float>* data[] = {&time, &com_pos, &com_linvel,
                                &com_angvel, &quat, &ee,
                                &contact, &q_flat, &qdot_flat};
  for (size_t c = 0; c < std::size(kChannels); ++c) {
    clip.channels.push_back(
        {kChannels[c].name, kChannels[c].width, std::move(*data[c])});
  }
  return clip;
}

void SaveClip(const TrajectoryClip& clip, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root);
  KeyValueConfig manifest;
  manifest.Set("format", "timit_clip 1");
  manifest.SetInt("frames", clip.frames);
  manifest.SetDouble("horizon", clip.horizon);
  manifest.SetDouble("rate", clip.rate);
  manifest.Set("robot_hash", clip.robot_hash);
  manifest.Set("terrain_seed", std::to_string(clip.terrain_seed));
  manifest.Set("plan_seed", std::to_string(clip.plan_seed));
  manifest.SetInt("image_rows", clip.image_rows);
  manifest.SetInt("image_cols", clip.image_cols);
  manifest.SetDouble("image_cell_size", clip.image_cell_size);
  manifest.SetVector("image_origin",
                     {clip.image_origin.x(), clip.image_origin.y()});
  std::string names;
  for (const auto& c : clip.channels) {
    if (!names.empty()) names += ' ';
    names += c.name;
    manifest.SetInt("width_" + c.name, c.width);
  }
  manifest.Set("channels", names);
  for (int leg = 0; leg < clip.schedule.leg_count(); ++leg) {
    manifest.SetVector(LegKey("phases", leg), clip.schedule.durations[leg]);
    manifest.SetInt(LegKey("starts_in_stance", leg),
                    clip.schedule.starts_in_stance[leg] ? 1 : 0);
  }
  manifest.Save((root / "manifest.txt").string());

  WriteFloats(root / "terrain_image.f32", clip.terrain_image);
  for (const auto& c : clip.channels) {
    if (c.data.size() != static_cast<size_t>(clip.frames) * c.width) {
      throw DatasetError("channel '" + c.name + "' has the wrong size");
    }
    WriteFloats(root / (c.name + ".f32"), c.data);
  }
}

TrajectoryClip LoadClip(const std::string& dir) {
  const fs::path root(dir);
  const fs::path manifest_path = root / "manifest.txt";
  if (!fs::exists(manifest_path)) {
    throw DatasetError("missing clip manifest " + manifest_path.string());
  }
  TrajectoryClip clip;
  try {
    const KeyValueConfig m = KeyValueConfig::Load(manifest_path.string());
    clip.frames = m.GetInt("frames");
    clip.horizon = m.GetDouble("horizon");
    clip.rate = m.GetDouble("rate");
    clip.robot_hash = m.GetString("robot_hash");
    clip.terrain_seed = std::stoull(m.GetString("terrain_seed"));
    clip.plan_seed = std::stoull(m.GetString("plan_seed"));
    clip.image_rows = m.GetInt("image_rows");
    clip.image_cols = m.GetInt("image_cols");
    clip.image_cell_size = m.GetDouble("image_cell_size");
    const auto origin = m.GetVector("image_origin");
    if (origin.size() != 2) throw DatasetError("bad image_origin");
    clip.image_origin = Eigen::Vector2d(origin[0], origin[1]);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      if (!m.Has(LegKey("phases", leg))) {
        throw DatasetError("manifest has no schedule for leg " +
                           std::string(kLegNames[leg]));
      }
      clip.schedule.durations.push_back(m.GetVector(LegKey("phases", leg)));
      clip.schedule.starts_in_stance.push_back(
          m.GetInt(LegKey("starts_in_stance", leg)) != 0);
    }
    if (clip.frames <= 0) throw DatasetError("non-positive frame count");
    if (clip.frames != ClipFrameCount(clip.horizon, clip.rate)) {
      throw DatasetError("manifest frame count " +
                         std::to_string(clip.frames) +
                         " does not match horizon " +
                         FormatDouble(clip.horizon));
    }
    std::istringstream names(m.GetString("channels"));
    std::string name;
    while (names >> name) {
      ClipChannel c;
      c.name = name;
      c.width = m.GetInt("width_" + name);
      c.data = ReadFloats(root / (name + ".f32"),
                          static_cast<size_t>(clip.frames) * c.width, name);
      clip.channels.push_back(std::move(c));
    }
  } catch (const ConfigError& e) {
    throw DatasetError("bad clip manifest " + manifest_path.string() + ": " +
                       e.what());
  }
  clip.terrain_image =
      ReadFloats(root / "terrain_image.f32",
                 static_cast<size_t>(clip.image_rows) * clip.image_cols,
                 "terrain_image");
  return clip;
}

void SaveClipSources(const std::string& dir, const HeightField& planning_terrain,
                     const CentroidalSolution& solution,
                     const PlannerConfig& config, const RobotModel& model) {
  const fs::path root(dir);
  fs::create_directories(root);
  SaveHeightFieldText(planning_terrain, (root / "terrain.txt").string());
  solution.ToConfig().Save((root / "solution.txt").string());
  config.ToConfig().Save((root / "planner.txt").string());
  model.Save((root / "robot.txt").string());
}

std::vector<ContactOnset> ContactOnsets(std::span<const TrajectoryClip> clips,
                                        double max_x) {
  std::vector<ContactOnset> onsets;
  for (size_t c = 0; c < clips.size(); ++c) {
    const TrajectoryClip& clip = clips[c];
    const ClipChannel& contact = clip.channel("contact");
    for (int leg = 0; leg < contact.width; ++leg) {
      for (int f = 0; f < clip.frames; ++f) {
        const bool now = contact.at(f, leg) > 0.5f;
        const bool before = f > 0 && contact.at(f - 1, leg) > 0.5f;
        if (!now || before) continue;
        const Eigen::Vector3d p = clip.FootPos(f, leg);
        if (p.x() > max_x) continue;
        onsets.push_back({static_cast<int>(c), leg, f, p.x(), p.y()});
      }
    }
  }
  return onsets;
}

DatasetStats ComputeDatasetStats(std::span<const TrajectoryClip> clips,
                                 double max_x) {
  if (clips.empty()) throw DatasetError("dataset statistics need >= 1 clip");
  DatasetStats stats;
  stats.onsets = ContactOnsets(clips, max_x);
  for (const auto& clip : clips) {
    std::vector<double> v, t;
    const ClipChannel& vel = clip.channel("com_linvel");
    for (int f = 0; f < clip.frames; ++f) {
      v.push_back(vel.at(f, 0));
      t.push_back(clip.time(f));
    }
    stats.forward_velocity.push_back(std::move(v));
    stats.times.push_back(std::move(t));
  }
  return stats;
}

std::string DatasetStats::ContactTable() const {
  std::ostringstream out;
  out << "clip\tleg\tframe\tx\ty\n";
  for (const auto& o : onsets) {
    out << o.clip << '\t' << kLegNames[o.leg] << '\t' << o.frame << '\t'
        << FormatDouble(o.x) << '\t' << FormatDouble(o.y) << '\n';
  }
  return out.str();
}

std::string DatasetStats::VelocityTable() const {
  std::ostringstream out;
  out << "clip\tframe\tt\tvx\n";
  for (size_t c = 0; c < forward_velocity.size(); ++c) {
    for (size_t f = 0; f < forward_velocity[c].size(); ++f) {
      out << c << '\t' << f << '\t' << FormatDouble(times[c][f]) << '\t'
          << FormatDouble(forward_velocity[c][f]) << '\n';
    }
  }
  return out.str();
}

std::vector<std::string> CheckClipInvariants(const TrajectoryClip& clip,
                                             const RobotModel& model) {
  std::vector<std::string> problems;
  auto fail = [&](const std::string& what) { problems.push_back(what); };
  if (clip.frames != ClipFrameCount(clip.horizon, clip.rate)) {
    fail("frame count " + std::to_string(clip.frames) + " != round(T*rate)+1");
  }
  for (const auto& spec : kChannels) {
    bool found = false;
    for (const auto& c : clip.channels) {
      if (c.name != spec.name) continue;
      found = true;
      if (c.width != spec.width ||
          c.data.size() != static_cast<size_t>(clip.frames) * spec.width) {
        fail("channel " + c.name + " has the wrong shape");
      }
      for (float v : c.data) {
        if (!std::isfinite(v)) {
          fail("channel " + c.name + " has non-finite values");
          break;
        }
      }
    }
    if (!found) fail(std::string("missing channel ") + spec.name);
  }
  if (!problems.empty()) return problems;

  const double dt = 1.0 / clip.rate;
  double worst_clock = 0.0, worst_quat = 0.0, worst_fk = 0.0;
  int contact_mismatch = 0;
  for (int f = 0; f < clip.frames; ++f) {
    const double expected = std::min(f * dt, clip.horizon);
    worst_clock = std::max(worst_clock, std::abs(clip.time(f) - expected));
    worst_quat = std::max(worst_quat, std::abs(clip.BaseQuat(f).norm() - 1.0));
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const bool planned = clip.schedule.InStance(leg, expected);
      if (planned != clip.Contact(f, leg)) ++contact_mismatch;
    }
    BasePose base{clip.Vec3("com_pos", f),
                  clip.BaseQuat(f).normalized().toRotationMatrix()};
    const auto fk = ForwardKinematics(model, base, clip.Joints("q", f));
    for (int leg = 0; leg < kNumLegs; ++leg) {
      worst_fk = std::max(worst_fk, (fk[leg] - clip.FootPos(f, leg)).norm());
    }
  }
  // float32 storage bounds the achievable precision of the stored values.
  if (worst_clock > 1e-6) fail("frame clock off by " + FormatDouble(worst_clock));
  if (worst_quat > 1e-6) fail("quaternion norm off by " + FormatDouble(worst_quat));
  if (worst_fk > 1e-4) fail("FK(q) differs from ee_pos by " + FormatDouble(worst_fk));
  if (contact_mismatch > 0) {
    fail(std::to_string(contact_mismatch) +
         " contact flags disagree with the schedule");
  }
  for (int leg = 0; leg < kNumLegs; ++leg) {
    int onsets = 0;
    for (int f = 1; f < clip.frames; ++f) {
      if (clip.Contact(f, leg) && !clip.Contact(f - 1, leg)) ++onsets;
    }
    const int stance = clip.schedule.StancePhaseCount(leg);
    const int expected = stance - (clip.schedule.starts_in_stance[leg] ? 1 : 0);
    if (onsets != expected) {
      fail(std::string("leg ") + kLegNames[leg] + " has " +
           std::to_string(onsets) + " contact onsets, schedule implies " +
           std::to_string(expected));
    }
  }
  return problems;
}

}  // namespace timit
