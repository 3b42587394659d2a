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

#ifndef TIMIT_ENVGEN_H_
#define TIMIT_ENVGEN_H_

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "timit/heightfield.h"

namespace timit {

class EnvgenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evaluation tracks run along +x from x = 0 and span y in [-1, 1].
inline constexpr double kTrackWidth = 2.0;
inline constexpr double kTrackResolution = 0.02;
inline constexpr double kPerlinVerticesPerMetre = 65.0;
inline constexpr double kPerlinMaxHeight = 0.5;
inline constexpr double kSteppingStoneHeight = 0.72;

enum class SegmentKind { kPlatform, kProcedural, kStairs, kWavySteps, kSlits, kPerlin };

const char* SegmentKindName(SegmentKind kind);
SegmentKind SegmentKindFromName(const std::string& name);

// Oriented box; rotation is Rz(yaw) Ry(pitch) Rx(roll) about the centre.
struct EnvBox {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extents = Eigen::Vector3d::Zero();
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  int segment = 0;
  // Stairs obstacles: sampled height and the overlap shift along x.
  double sampled_height = 0.0;
  double x_offset = 0.0;

  // Height of the top face above (x, y), if the point lies under it.
  std::optional<double> TopAt(double x, double y) const;
  // Axis-aligned xy bounds of the top face.
  std::array<double, 4> TopBounds() const;  // x_min, x_max, y_min, y_max
};

struct StepSpec {
  double x_start = 0.0;
  double length = 0.0;
  double height = 0.0;     // sampled step height (rise magnitude)
  double elevation = 0.0;  // surface height relative to the segment datum
};

struct WavyPair {
  double gap = 0.0;         // longitudinal gap before the pair
  double length = 0.0;      // step length (x)
  double width = 0.0;       // step width (y)
  double separation = 0.0;  // lateral space between the two steps
  double x_start = 0.0;
  std::array<double, 2> dz{};     // vertical offsets (left, right)
  std::array<double, 2> dx{};     // longitudinal offsets
  std::array<double, 2> roll{};
  std::array<double, 2> pitch{};
};

struct SegmentSpec {
  SegmentKind kind = SegmentKind::kPlatform;
  double x_start = 0.0;
  double length = 0.0;
  // Surface reference height, and the height of gaps between stones/slits.
  double datum = 0.0;
  double floor = 0.0;
  std::uint64_t seed = 0;  // procedural patch or Perlin field
  std::vector<StepSpec> steps;
  std::vector<WavyPair> pairs;
  bool sine = false;
  std::vector<double> platform_lengths;  // slits, as sampled
  std::vector<double> gap_lengths;
  std::vector<std::array<double, 2>> platforms;  // slits, placed (x, length)
  double box_spread = 0.0;  // stairs, per-episode bound

  double x_end() const { return x_start + length; }
};

struct TrackSpec {
  std::uint64_t rng_seed = 0;
  std::vector<SegmentSpec> segments;
  std::vector<EnvBox> boxes;
  double width = kTrackWidth;
  double total_length = 0.0;
};

struct Track {
  TrackSpec spec;
  HeightField field;
};

struct StairsOptions {
  int steps = 20;
  double start_platform = 1.0;
  // Random rise direction per step instead of monotone ascent.
  bool mixed_direction = false;
  std::optional<double> step_height;  // forces every step height
  // Places each step's boxes on top of each other to exercise the shift.
  bool force_overlap = false;
  double box_size = 0.15;
};

struct WavyOptions {
  double length = 12.0;
  double start_platform = 1.0;
  bool sine = true;
  // Zero rotations and offsets (a level, symmetric corridor).
  bool no_perturbation = false;
};

struct MixedOptions {
  int segments = 15;
  // Overrides the i.i.d. segment draws when non-empty.
  std::vector<SegmentKind> sequence;
};

// sin((x - 6) / 3), x in metres along the track.
double WavySine(double x);

TrackSpec SampleStairs(std::uint64_t seed, const StairsOptions& options = {});
TrackSpec SampleProceduralTrack(std::uint64_t seed);
TrackSpec SampleWavySteps(std::uint64_t seed, const WavyOptions& options = {});
TrackSpec SampleMixed(std::uint64_t seed, const MixedOptions& options = {});

// Rasterizes the segments and boxes at kTrackResolution. Box top faces are
// evaluated through their plane equations.
HeightField RasterizeTrack(const TrackSpec& spec);

Track BuildStairs(std::uint64_t seed, const StairsOptions& options = {});
Track BuildProceduralTrack(std::uint64_t seed);
Track BuildWavySteps(std::uint64_t seed, const WavyOptions& options = {});
Track BuildMixed(std::uint64_t seed, const MixedOptions& options = {});

// Gradient-lattice noise, 6 octaves with persistence 0.5, normalised to
// [0, kPerlinMaxHeight] on a kPerlinVerticesPerMetre grid. The field starts
// at (x0, -width / 2).
HeightField BuildPerlinSegment(std::uint64_t seed, double length = 4.0,
                               double x0 = 0.0);

// Text table, one box per line: segment cx cy cz hx hy hz roll pitch yaw.
std::string BoxListText(const std::vector<EnvBox>& boxes);
// Key-value listing of the segment layout and sampled parameters.
std::string TrackSpecText(const TrackSpec& spec);

// Checks every sampled parameter against its range and the layout for
// contiguity. Returns human-readable problems (empty when clean).
std::vector<std::string> AuditTrackSpec(const TrackSpec& spec);

}  // namespace timit

#endif  // TIMIT_ENVGEN_H_
