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

#ifndef TIMIT_DATASET_H_
#define TIMIT_DATASET_H_

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "timit/heightfield.h"
#include "timit/planner.h"
#include "timit/robot_model.h"
#include "timit/spline.h"

namespace timit {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kClipRate = 100.0;

// One named per-frame channel, row-major [frame][component].
struct ClipChannel {
  std::string name;
  int width = 0;
  std::vector<float> data;

  float at(int frame, int component) const {
    return data[static_cast<size_t>(frame) * width + component];
  }
  bool operator==(const ClipChannel&) const = default;
};

// A planned trajectory sampled at 100 Hz. Channels, in order:
//   time (1), com_pos (3), com_linvel (3), com_angvel (3),
//   base_quat (4, w x y z), ee_pos (12, leg-major), contact (4),
//   q (12), qdot (12).
// Values are stored as float32, which makes save/load bit-exact.
struct TrajectoryClip {
  double horizon = 0.0;
  double rate = kClipRate;
  int frames = 0;
  // Vertex heights of the 16x16 planning patch (row-major) and its placement.
  int image_rows = 0;
  int image_cols = 0;
  double image_cell_size = 0.0;
  Eigen::Vector2d image_origin = Eigen::Vector2d::Zero();
  std::vector<float> terrain_image;
  std::vector<ClipChannel> channels;

  PhaseSchedule schedule;
  std::string robot_hash;
  std::uint64_t terrain_seed = 0;
  std::uint64_t plan_seed = 0;

  const ClipChannel& channel(const std::string& name) const;
  ClipChannel& channel(const std::string& name);

  double time(int frame) const { return channel("time").at(frame, 0); }
  Eigen::Vector3d Vec3(const std::string& name, int frame, int offset = 0) const;
  Eigen::Quaterniond BaseQuat(int frame) const;
  Eigen::Vector3d FootPos(int frame, int leg) const {
    return Vec3("ee_pos", frame, 3 * leg);
  }
  bool Contact(int frame, int leg) const {
    return channel("contact").at(frame, leg) > 0.5f;
  }
  Vector12d Joints(const std::string& name, int frame) const;

  // The patch as a height field (float32 heights widened to double).
  HeightField TerrainPatch() const;

  bool operator==(const TrajectoryClip& other) const;
};

// Number of frames for a horizon: round(T * rate) + 1.
int ClipFrameCount(double horizon, double rate = kClipRate);

// Samples the solution splines every 1 / rate seconds. Throws DatasetError
// when inverse kinematics fails on any frame.
TrajectoryClip SampleClip(const CentroidalSolution& solution,
                          const HeightField& terrain_patch,
                          const RobotModel& model);

// Directory layout:
//   manifest.txt   key-value header (counts, T, rate, shapes, hashes, seeds,
//                  phase durations)
//   <channel>.f32  raw little-endian float32, row-major [frame][component]
//   terrain_image.f32
void SaveClip(const TrajectoryClip& clip, const std::string& dir);
TrajectoryClip LoadClip(const std::string& dir);

// Writes the planner inputs and solution alongside a saved clip so the clip
// can be audited without re-running the solver.
void SaveClipSources(const std::string& dir, const HeightField& planning_terrain,
                     const CentroidalSolution& solution,
                     const PlannerConfig& config, const RobotModel& model);

// Contact onsets: frame 0 when in contact there, plus every 0 -> 1
// transition of the contact flag.
struct ContactOnset {
  int clip = 0;
  int leg = 0;
  int frame = 0;
  double x = 0.0;
  double y = 0.0;
};
std::vector<ContactOnset> ContactOnsets(std::span<const TrajectoryClip> clips,
                                        double max_x = 1.75);

struct DatasetStats {
  std::vector<ContactOnset> onsets;
  // Per clip: forward CoM velocity at every frame.
  std::vector<std::vector<double>> forward_velocity;
  std::vector<std::vector<double>> times;

  // Tab-separated tables with a header row.
  std::string ContactTable() const;
  std::string VelocityTable() const;
};
DatasetStats ComputeDatasetStats(std::span<const TrajectoryClip> clips,
                                 double max_x = 1.75);

// Consistency checks of one clip: frame count, single clock, unit
// quaternions, contact flags against the schedule, finite channels and
// FK(q) against ee_pos. Returns human-readable problems (empty when clean).
std::vector<std::string> CheckClipInvariants(const TrajectoryClip& clip,
                                             const RobotModel& model);

}  // namespace timit

#endif  // TIMIT_DATASET_H_
