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

#include "timit/envgen.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Geometry>

#include "timit/config_file.h"
#include "timit/random.h"
#include "timit/rotation.h"

namespace timit {
namespace {

constexpr double kHalfWidth = 0.5 * kTrackWidth;
constexpr double kMixedDatum = kSteppingStoneHeight;
// With the sine term a stone bottom can sink 1.05 m below the datum; the
// standalone track is lifted by this much so the pit floor sits at zero.
constexpr double kWavyLift = 1.05;

constexpr double kStepHeightMax = 0.10;
constexpr double kStepLengthMin = 0.10, kStepLengthMax = 0.75;
constexpr double kBoxSpreadMax = 1.0;
constexpr double kOverlapShift = 0.05;

constexpr double kPairSeparationMin = 0.10, kPairSeparationMax = 0.15;
constexpr double kStoneOffset = 0.05;
constexpr double kStoneGapMin = 0.15, kStoneGapMax = 0.20;
constexpr double kStoneLengthMin = 0.20, kStoneLengthMax = 0.40;
constexpr double kStoneWidthMin = 0.30, kStoneWidthMax = 0.60;
constexpr double kStoneTilt = 0.15;

constexpr double kSlitPlatformMin = 0.1, kSlitPlatformMax = 1.0;
constexpr double kSlitGapMin = 0.15, kSlitGapMax = 0.20;

constexpr double kMixedProceduralLength = 4.0;
constexpr double kMixedWavyLength = 4.0;
constexpr double kMixedSlitsLength = 3.0;
constexpr double kMixedPerlinLength = 4.0;
constexpr int kMixedStairSteps = 5;
constexpr double kProceduralPlatform = 3.0;
constexpr int kProceduralPatches = 15;

Eigen::Matrix3d BoxRotation(const EnvBox& box) {
  return EulerZyxToMatrix(Eigen::Vector3d(box.roll, box.pitch, box.yaw));
}

SegmentSpec& Append(TrackSpec& spec, SegmentKind kind, double length,
                    double datum) {
  SegmentSpec s;
  s.kind = kind;
  s.x_start = spec.total_length;
  s.length = length;
  s.datum = datum;
  s.floor = datum;
  spec.segments.push_back(s);
  spec.total_length += length;
  return spec.segments.back();
}

bool Overlaps(const EnvBox& a, const EnvBox& b) {
  return std::abs(a.center.x() - b.center.x()) <
             a.half_extents.x() + b.half_extents.x() &&
         std::abs(a.center.y() - b.center.y()) <
             a.half_extents.y() + b.half_extents.y();
}

void AppendStairs(TrackSpec& spec, Rng& rng, int steps, double datum,
                  const StairsOptions& options) {
  const int index = static_cast<int>(spec.segments.size());
  SegmentSpec seg;
  seg.kind = SegmentKind::kStairs;
  seg.x_start = spec.total_length;
  seg.datum = datum;
  seg.floor = datum;
  seg.box_spread = rng.Uniform(0.0, kBoxSpreadMax);
  const double half = 0.5 * options.box_size;
  double x = seg.x_start;
  double elevation = 0.0;
  for (int k = 0; k < steps; ++k) {
    StepSpec step;
    step.height = options.step_height ? *options.step_height
                                      : rng.Uniform(0.0, kStepHeightMax);
    step.length = rng.Uniform(kStepLengthMin, kStepLengthMax);
    const double sign =
        options.mixed_direction && rng.Uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    elevation += sign * step.height;
    step.x_start = x;
    step.elevation = elevation;
    seg.steps.push_back(step);

    const Eigen::Vector2d anchor(rng.Uniform(x, x + step.length),
                                 rng.Uniform(-kHalfWidth, kHalfWidth));
    const size_t first = spec.boxes.size();
    for (int b = 0; b < 3; ++b) {
      EnvBox box;
      box.segment = index;
      box.sampled_height = rng.Uniform(0.0, kStepHeightMax);
      Eigen::Vector2d xy = anchor;
      if (!options.force_overlap) {
        xy += Eigen::Vector2d(rng.Uniform(-0.5, 0.5), rng.Uniform(-0.5, 0.5)) *
              seg.box_spread;
      }
      xy.x() = step.length > options.box_size
                   ? std::clamp(xy.x(), x + half, x + step.length - half)
                   : x + 0.5 * step.length;
      xy.y() = std::clamp(xy.y(), -kHalfWidth + half, kHalfWidth - half);
      box.half_extents = Eigen::Vector3d(half, half, 0.5 * box.sampled_height);
      box.center = Eigen::Vector3d(xy.x(), xy.y(),
                                   datum + elevation + 0.5 * box.sampled_height);
      for (size_t j = first; j < spec.boxes.size(); ++j) {
        if (Overlaps(box, spec.boxes[j])) {
          box.x_offset = kOverlapShift;
          box.center.x() += kOverlapShift;
          break;
        }
      }
      spec.boxes.push_back(box);
    }
    x += step.length;
  }
  seg.length = x - seg.x_start;
  spec.total_length = x;
  spec.segments.push_back(std::move(seg));
}

void AppendWavy(TrackSpec& spec, Rng& rng, double length, bool sine,
                bool perturb, double base, double floor) {
  const int index = static_cast<int>(spec.segments.size());
  SegmentSpec seg;
  seg.kind = SegmentKind::kWavySteps;
  seg.x_start = spec.total_length;
  seg.length = length;
  seg.datum = base + kSteppingStoneHeight;
  seg.floor = floor;
  seg.sine = sine;
  const double end = seg.x_start + length;
  double x = seg.x_start;
  for (;;) {
    WavyPair pair;
    pair.gap = rng.Uniform(kStoneGapMin, kStoneGapMax);
    pair.length = rng.Uniform(kStoneLengthMin, kStoneLengthMax);
    pair.width = rng.Uniform(kStoneWidthMin, kStoneWidthMax);
    pair.separation = perturb
                          ? rng.Uniform(kPairSeparationMin, kPairSeparationMax)
                          : kPairSeparationMin;
    for (int side = 0; side < 2 && perturb; ++side) {
      pair.dz[side] = rng.Uniform(-kStoneOffset, kStoneOffset);
      pair.dx[side] = rng.Uniform(-kStoneOffset, kStoneOffset);
      pair.roll[side] = rng.Uniform(-kStoneTilt, kStoneTilt);
      pair.pitch[side] = rng.Uniform(-kStoneTilt, kStoneTilt);
    }
    if (x + pair.gap + pair.length > end) break;
    pair.x_start = x + pair.gap;
    for (int side = 0; side < 2; ++side) {
      EnvBox box;
      box.segment = index;
      box.half_extents =
          Eigen::Vector3d(0.5 * pair.length, 0.5 * pair.width,
                          0.5 * kSteppingStoneHeight);
      const double cx = pair.x_start + 0.5 * pair.length + pair.dx[side];
      const double cy = (side == 0 ? 1.0 : -1.0) *
                        (0.5 * pair.separation + 0.5 * pair.width);
      const double bottom = base + pair.dz[side] + (sine ? WavySine(cx) : 0.0);
      box.center = Eigen::Vector3d(cx, cy, bottom + 0.5 * kSteppingStoneHeight);
      box.roll = pair.roll[side];
      box.pitch = pair.pitch[side];
      spec.boxes.push_back(box);
    }
    seg.pairs.push_back(pair);
    x = pair.x_start + pair.length;
  }
  spec.total_length = end;
  spec.segments.push_back(std::move(seg));
}

void AppendSlits(TrackSpec& spec, Rng& rng, double length) {
  SegmentSpec& seg = Append(spec, SegmentKind::kSlits, length, kMixedDatum);
  seg.floor = 0.0;
  const double end = seg.x_end();
  double x = seg.x_start;
  while (x < end) {
    const double p = rng.Uniform(kSlitPlatformMin, kSlitPlatformMax);
    seg.platform_lengths.push_back(p);
    if (x + p >= end) {
      seg.platforms.push_back({x, end - x});
      break;
    }
    seg.platforms.push_back({x, p});
    x += p;
    const double g = rng.Uniform(kSlitGapMin, kSlitGapMax);
    if (x + g + kSlitPlatformMin > end) {
      // No room for a full gap and a platform: the platform runs to the end.
      seg.platforms.back()[1] = end - seg.platforms.back()[0];
      break;
    }
    seg.gap_lengths.push_back(g);
    x += g;
  }
}

std::uint64_t SubSeed(Rng& rng) { return rng.engine()(); }

// 2-D gradient noise on the integer lattice.
class GradientNoise {
 public:
  explicit GradientNoise(Rng& rng) {
    for (int i = 0; i < 256; ++i) perm_[i] = i;
    for (int i = 255; i > 0; --i) std::swap(perm_[i], perm_[rng.UniformInt(0, i)]);
  }

  double operator()(double x, double y) const {
    const double fx = std::floor(x), fy = std::floor(y);
    const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
    const double tx = x - fx, ty = y - fy;
    auto corner = [&](int cx, int cy) {
      const int h = perm_[(perm_[(ix + cx) & 255] + iy + cy) & 255];
      const double angle = h * (2.0 * M_PI / 256.0);
      return std::cos(angle) * (tx - cx) + std::sin(angle) * (ty - cy);
    };
    auto fade = [](double t) { return t * t * t * (t * (6.0 * t - 15.0) + 10.0); };
    const double u = fade(tx), v = fade(ty);
    const double a = corner(0, 0) + u * (corner(1, 0) - corner(0, 0));
    const double b = corner(0, 1) + u * (corner(1, 1) - corner(0, 1));
    return a + v * (b - a);
  }

 private:
  std::array<int, 256> perm_{};
};

}  // namespace

const char* SegmentKindName(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::kPlatform: return "platform";
    case SegmentKind::kProcedural: return "procedural";
    case SegmentKind::kStairs: return "stairs";
    case SegmentKind::kWavySteps: return "wavy";
    case SegmentKind::kSlits: return "slits";
    case SegmentKind::kPerlin: return "perlin";
  }
  return "unknown";
}

SegmentKind SegmentKindFromName(const std::string& name) {
  for (SegmentKind k :
       {SegmentKind::kPlatform, SegmentKind::kProcedural, SegmentKind::kStairs,
        SegmentKind::kWavySteps, SegmentKind::kSlits, SegmentKind::kPerlin}) {
    if (name == SegmentKindName(k)) return k;
  }
  throw EnvgenError("unknown segment kind '" + name + "'");
}

std::optional<double> EnvBox::TopAt(double x, double y) const {
  const Eigen::Matrix3d R = BoxRotation(*this);
  const Eigen::Vector3d n = R.col(2);
  if (n.z() <= 1e-9) return std::nullopt;
  const double dx = x - center.x(), dy = y - center.y();
  const double z =
      center.z() + (half_extents.z() - n.x() * dx - n.y() * dy) / n.z();
  const Eigen::Vector3d local = R.transpose() * Eigen::Vector3d(dx, dy, z - center.z());
  constexpr double kEps = 1e-12;
  if (std::abs(local.x()) > half_extents.x() + kEps ||
      std::abs(local.y()) > half_extents.y() + kEps) {
    return std::nullopt;
  }
  return z;
}

std::array<double, 4> EnvBox::TopBounds() const {
  const Eigen::Matrix3d R = BoxRotation(*this);
  std::array<double, 4> b{std::numeric_limits<double>::infinity(),
                          -std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity(),
                          -std::numeric_limits<double>::infinity()};
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      const Eigen::Vector3d p =
          center + R * Eigen::Vector3d(sx * half_extents.x(),
                                       sy * half_extents.y(), half_extents.z());
      b[0] = std::min(b[0], p.x());
      b[1] = std::max(b[1], p.x());
      b[2] = std::min(b[2], p.y());
      b[3] = std::max(b[3], p.y());
    }
  }
  return b;
}

double WavySine(double x) { return std::sin((x - 6.0) / 3.0); }

TrackSpec SampleStairs(std::uint64_t seed, const StairsOptions& options) {
  if (options.steps < 1) throw EnvgenError("stairs need at least one step");
  Rng rng(seed);
  TrackSpec spec;
  spec.rng_seed = seed;
  if (options.start_platform > 0.0) {
    Append(spec, SegmentKind::kPlatform, options.start_platform, 0.0);
  }
  AppendStairs(spec, rng, options.steps, 0.0, options);
  return spec;
}

TrackSpec SampleProceduralTrack(std::uint64_t seed) {
  Rng rng(seed);
  TrackSpec spec;
  spec.rng_seed = seed;
  Append(spec, SegmentKind::kPlatform, kProceduralPlatform, 0.0);
  for (int k = 0; k < kProceduralPatches; ++k) {
    Append(spec, SegmentKind::kProcedural, kTerrainFootprint, 0.0).seed =
        SubSeed(rng);
    Append(spec, SegmentKind::kPlatform, kProceduralPlatform, 0.0);
  }
  return spec;
}

TrackSpec SampleWavySteps(std::uint64_t seed, const WavyOptions& options) {
  Rng rng(seed);
  TrackSpec spec;
  spec.rng_seed = seed;
  const double base = options.sine ? kWavyLift : 0.0;
  if (options.start_platform > 0.0) {
    const double top = base + kSteppingStoneHeight +
                       (options.sine ? WavySine(options.start_platform) : 0.0);
    Append(spec, SegmentKind::kPlatform, options.start_platform, top);
  }
  AppendWavy(spec, rng, options.length, options.sine, !options.no_perturbation,
             base, 0.0);
  return spec;
}

TrackSpec SampleMixed(std::uint64_t seed, const MixedOptions& options) {
  if (options.segments < 1 && options.sequence.empty()) {
    throw EnvgenError("mixed track needs at least one segment");
  }
  Rng rng(seed);
  TrackSpec spec;
  spec.rng_seed = seed;
  constexpr SegmentKind kChoices[] = {SegmentKind::kProcedural,
                                      SegmentKind::kStairs,
                                      SegmentKind::kWavySteps,
                                      SegmentKind::kSlits, SegmentKind::kPerlin};
  const int count = options.sequence.empty()
                        ? options.segments
                        : static_cast<int>(options.sequence.size());
  for (int k = 0; k < count; ++k) {
    const SegmentKind kind = options.sequence.empty()
                                 ? kChoices[rng.UniformInt(0, 4)]
                                 : options.sequence[k];
    switch (kind) {
      case SegmentKind::kProcedural:
        Append(spec, kind, kMixedProceduralLength, kMixedDatum).seed =
            SubSeed(rng);
        break;
      case SegmentKind::kStairs: {
        StairsOptions stairs;
        stairs.start_platform = 0.0;
        AppendStairs(spec, rng, kMixedStairSteps, kMixedDatum, stairs);
        break;
      }
      case SegmentKind::kWavySteps:
        AppendWavy(spec, rng, kMixedWavyLength, false, true, 0.0, 0.0);
        break;
      case SegmentKind::kSlits:
        AppendSlits(spec, rng, kMixedSlitsLength);
        break;
      case SegmentKind::kPerlin:
        Append(spec, kind, kMixedPerlinLength, kMixedDatum).seed = SubSeed(rng);
        break;
      case SegmentKind::kPlatform:
        Append(spec, kind, kProceduralPlatform, kMixedDatum);
        break;
    }
  }
  return spec;
}

HeightField BuildPerlinSegment(std::uint64_t seed, double length, double x0) {
  Rng rng(seed);
  GradientNoise noise(rng);
  const int rows = static_cast<int>(std::lround(length * kPerlinVerticesPerMetre)) + 1;
  const int cols =
      static_cast<int>(std::lround(kTrackWidth * kPerlinVerticesPerMetre)) + 1;
  const double cell = 1.0 / kPerlinVerticesPerMetre;
  std::array<Eigen::Vector2d, 6> shifts;
  for (auto& s : shifts) s = Eigen::Vector2d(rng.Uniform(0, 256), rng.Uniform(0, 256));
  std::vector<double> h(static_cast<size_t>(rows) * cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const Eigen::Vector2d p(i * cell, j * cell);
      double v = 0.0, amplitude = 1.0, frequency = 1.0;
      for (const auto& s : shifts) {
        v += amplitude * noise(frequency * p.x() + s.x(), frequency * p.y() + s.y());
        amplitude *= 0.5;
        frequency *= 2.0;
      }
      h[static_cast<size_t>(i) * cols + j] = v;
    }
  }
  const auto [lo, hi] = std::minmax_element(h.begin(), h.end());
  const double min = *lo, span = *hi - *lo;
  for (double& v : h) v = span > 0.0 ? (v - min) / span * kPerlinMaxHeight : 0.0;
  return HeightField(rows, cols, cell, Eigen::Vector2d(x0, -kHalfWidth),
                     std::move(h));
}

HeightField RasterizeTrack(const TrackSpec& spec) {
  if (spec.segments.empty()) throw EnvgenError("track has no segments");
  const int rows =
      static_cast<int>(std::ceil(spec.total_length / kTrackResolution - 1e-9)) + 1;
  const int cols = static_cast<int>(std::lround(spec.width / kTrackResolution)) + 1;
  HeightField field = HeightField::Flat(rows, cols, kTrackResolution,
                                        {0.0, -0.5 * spec.width}, 0.0);

  std::vector<std::optional<HeightField>> patches(spec.segments.size());
  for (size_t s = 0; s < spec.segments.size(); ++s) {
    const SegmentSpec& seg = spec.segments[s];
    if (seg.kind == SegmentKind::kProcedural) {
      HeightField patch = GenerateTerrain(seg.seed);
      const double x0 = seg.x_start + 0.5 * (seg.length - kTerrainFootprint);
      patches[s] = HeightField(patch.rows(), patch.cols(), patch.cell_size(),
                               {x0, patch.origin().y()}, patch.heights());
    } else if (seg.kind == SegmentKind::kPerlin) {
      patches[s] = BuildPerlinSegment(seg.seed, seg.length, seg.x_start);
    }
  }

  auto& h = field.mutable_heights();
  size_t s = 0;
  for (int i = 0; i < rows; ++i) {
    const double x = std::min(i * kTrackResolution, spec.total_length);
    while (s + 1 < spec.segments.size() && x >= spec.segments[s + 1].x_start) ++s;
    const SegmentSpec& seg = spec.segments[s];
    for (int j = 0; j < cols; ++j) {
      const Eigen::Vector2d p = field.VertexPosition(i, j);
      double z = seg.datum;
      switch (seg.kind) {
        case SegmentKind::kPlatform:
          break;
        case SegmentKind::kProcedural:
        case SegmentKind::kPerlin: {
          const HeightField& patch = *patches[s];
          if (patch.Contains({x, p.y()})) z += patch.QueryOrThrow({x, p.y()}).height;
          break;
        }
        case SegmentKind::kStairs:
          for (const auto& step : seg.steps) {
            if (x >= step.x_start) z = seg.datum + step.elevation;
          }
          break;
        case SegmentKind::kWavySteps:
          z = seg.floor;
          break;
        case SegmentKind::kSlits:
          z = seg.floor;
          for (const auto& pl : seg.platforms) {
            if (x >= pl[0] && x <= pl[0] + pl[1]) z = seg.datum;
          }
          break;
      }
      h[field.Index(i, j)] = z;
    }
  }

  for (const EnvBox& box : spec.boxes) {
    const auto b = box.TopBounds();
    const int i0 = std::max(0, static_cast<int>(std::floor(b[0] / kTrackResolution)));
    const int i1 = std::min(rows - 1, static_cast<int>(std::ceil(b[1] / kTrackResolution)));
    const double y0 = field.origin().y();
    const int j0 = std::max(0, static_cast<int>(std::floor((b[2] - y0) / kTrackResolution)));
    const int j1 = std::min(cols - 1, static_cast<int>(std::ceil((b[3] - y0) / kTrackResolution)));
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) {
        const Eigen::Vector2d p = field.VertexPosition(i, j);
        if (auto top = box.TopAt(p.x(), p.y())) {
          double& z = h[field.Index(i, j)];
          z = std::max(z, *top);
        }
      }
    }
  }
  return field;
}

Track BuildStairs(std::uint64_t seed, const StairsOptions& options) {
  Track t{SampleStairs(seed, options), {}};
  t.field = RasterizeTrack(t.spec);
  return t;
}

Track BuildProceduralTrack(std::uint64_t seed) {
  Track t{SampleProceduralTrack(seed), {}};
  t.field = RasterizeTrack(t.spec);
  return t;
}

Track BuildWavySteps(std::uint64_t seed, const WavyOptions& options) {
  Track t{SampleWavySteps(seed, options), {}};
  t.field = RasterizeTrack(t.spec);
  return t;
}

Track BuildMixed(std::uint64_t seed, const MixedOptions& options) {
  Track t{SampleMixed(seed, options), {}};
  t.field = RasterizeTrack(t.spec);
  return t;
}

std::string BoxListText(const std::vector<EnvBox>& boxes) {
  std::ostringstream out;
  out << "# segment cx cy cz hx hy hz roll pitch yaw\n";
  for (const auto& b : boxes) {
    out << b.segment;
    for (double v : {b.center.x(), b.center.y(), b.center.z(), b.half_extents.x(),
                     b.half_extents.y(), b.half_extents.z(), b.roll, b.pitch,
                     b.yaw}) {
      out << ' ' << FormatDouble(v);
    }
    out << '\n';
  }
  return out.str();
}

std::string TrackSpecText(const TrackSpec& spec) {
  KeyValueConfig c;
  c.Set("rng_seed", std::to_string(spec.rng_seed));
  c.SetDouble("total_length", spec.total_length);
  c.SetDouble("width", spec.width);
  c.SetInt("segments", static_cast<long long>(spec.segments.size()));
  c.SetInt("boxes", static_cast<long long>(spec.boxes.size()));
  for (size_t k = 0; k < spec.segments.size(); ++k) {
    const SegmentSpec& s = spec.segments[k];
    const std::string p = "segment_" + std::to_string(k) + "_";
    c.Set(p + "kind", SegmentKindName(s.kind));
    c.SetVector(p + "extent", {s.x_start, s.length});
    c.SetVector(p + "datum_floor", {s.datum, s.floor});
    if (s.kind == SegmentKind::kProcedural || s.kind == SegmentKind::kPerlin) {
      c.Set(p + "seed", std::to_string(s.seed));
    }
    if (!s.steps.empty()) {
      std::vector<double> heights, lengths;
      for (const auto& st : s.steps) {
        heights.push_back(st.height);
        lengths.push_back(st.length);
      }
      c.SetVector(p + "step_heights", heights);
      c.SetVector(p + "step_lengths", lengths);
      c.SetDouble(p + "box_spread", s.box_spread);
    }
    if (!s.pairs.empty()) c.SetInt(p + "pairs", static_cast<long long>(s.pairs.size()));
    if (!s.platforms.empty()) {
      c.SetVector(p + "platform_lengths", s.platform_lengths);
      c.SetVector(p + "gap_lengths", s.gap_lengths);
    }
  }
  return c.ToString();
}

std::vector<std::string> AuditTrackSpec(const TrackSpec& spec) {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& what, double value) {
    if (!ok) problems.push_back(what + " = " + FormatDouble(value));
  };
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  double x = 0.0;
  for (size_t k = 0; k < spec.segments.size(); ++k) {
    const SegmentSpec& s = spec.segments[k];
    const std::string where = "segment " + std::to_string(k) + " ";
    check(std::abs(s.x_start - x) <= 1e-9, where + "start", s.x_start);
    check(s.length > 0.0, where + "length", s.length);
    x = s.x_end();
    for (const auto& st : s.steps) {
      check(in(st.height, 0.0, kStepHeightMax), where + "step height", st.height);
      check(in(st.length, kStepLengthMin, kStepLengthMax), where + "step length",
            st.length);
    }
    if (s.kind == SegmentKind::kStairs) {
      check(in(s.box_spread, 0.0, kBoxSpreadMax), where + "box spread",
            s.box_spread);
    }
    for (const auto& p : s.pairs) {
      check(in(p.gap, kStoneGapMin, kStoneGapMax), where + "stone gap", p.gap);
      check(in(p.length, kStoneLengthMin, kStoneLengthMax), where + "stone length",
            p.length);
      check(in(p.width, kStoneWidthMin, kStoneWidthMax), where + "stone width",
            p.width);
      check(in(p.separation, kPairSeparationMin, kPairSeparationMax),
            where + "pair separation", p.separation);
      for (int side = 0; side < 2; ++side) {
        check(in(p.dz[side], -kStoneOffset, kStoneOffset), where + "stone dz",
              p.dz[side]);
        check(in(p.dx[side], -kStoneOffset, kStoneOffset), where + "stone dx",
              p.dx[side]);
        check(in(p.roll[side], -kStoneTilt, kStoneTilt), where + "stone roll",
              p.roll[side]);
        check(in(p.pitch[side], -kStoneTilt, kStoneTilt), where + "stone pitch",
              p.pitch[side]);
      }
    }
    for (double v : s.platform_lengths) {
      check(in(v, kSlitPlatformMin, kSlitPlatformMax), where + "slit platform", v);
    }
    for (double v : s.gap_lengths) {
      check(in(v, kSlitGapMin, kSlitGapMax), where + "slit gap", v);
    }
  }
  check(std::abs(spec.total_length - x) <= 1e-9, "total length", spec.total_length);
  for (const auto& b : spec.boxes) {
    if (spec.segments[b.segment].kind != SegmentKind::kStairs) continue;
    check(in(b.sampled_height, 0.0, kStepHeightMax), "box height", b.sampled_height);
    check(b.x_offset == 0.0 || b.x_offset == kOverlapShift, "box x offset",
          b.x_offset);
  }
  return problems;
}

}  // namespace timit
