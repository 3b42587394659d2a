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

#ifndef TIMIT_HEIGHTFIELD_H_
#define TIMIT_HEIGHTFIELD_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace timit {

class TerrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TerrainSample {
  double height = 0.0;
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  // dh/dx, dh/dy of the containing triangle.
  Eigen::Vector2d slope = Eigen::Vector2d::Zero();
};

// Regular grid of vertex elevations. Row index i runs along world x, column
// index j along world y; vertex (i, j) sits at origin + cell_size * (i, j).
// Each cell is split into two triangles along the diagonal from (i, j) to
// (i+1, j+1), and heights inside a triangle are barycentric interpolants.
class HeightField {
 public:
  HeightField() = default;
  HeightField(int rows, int cols, double cell_size, Eigen::Vector2d origin,
              std::vector<double> heights);
  static HeightField Flat(int rows, int cols, double cell_size,
                          Eigen::Vector2d origin, double height);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double cell_size() const { return cell_size_; }
  const Eigen::Vector2d& origin() const { return origin_; }
  const std::vector<double>& heights() const { return heights_; }

  double at(int i, int j) const { return heights_[Index(i, j)]; }
  Eigen::Vector2d VertexPosition(int i, int j) const;
  double MaxHeight() const;
  double MinHeight() const;

  Eigen::Vector2d lower_corner() const { return origin_; }
  Eigen::Vector2d upper_corner() const;
  bool Contains(const Eigen::Vector2d& p) const;
  Eigen::Vector2d ClampToFootprint(const Eigen::Vector2d& p) const;

  // Height, unit normal and slope at a planar point; nullopt outside the
  // footprint.
  std::optional<TerrainSample> Query(const Eigen::Vector2d& p) const;
  // Same as Query but throws TerrainError outside the footprint.
  TerrainSample QueryOrThrow(const Eigen::Vector2d& p) const;

  // The three vertex (i, j) index pairs of triangle `tri` (0 = below the
  // diagonal, 1 = above) of cell (ci, cj).
  std::array<std::array<int, 2>, 3> TriangleVertices(int ci, int cj,
                                                     int tri) const;

  std::vector<double>& mutable_heights() { return heights_; }
  int Index(int i, int j) const { return i * cols_ + j; }

  bool operator==(const HeightField& other) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  double cell_size_ = 1.0;
  Eigen::Vector2d origin_ = Eigen::Vector2d::Zero();
  std::vector<double> heights_;
};

// Text format:
//   heightfield 1
//   rows <n>
//   cols <n>
//   cell_size <m>
//   origin <x> <y>
//   <rows lines of cols heights>
// Heights use round-trip decimal precision.
void SaveHeightFieldText(const HeightField& field, const std::string& path);
HeightField LoadHeightFieldText(const std::string& path);
std::string HeightFieldToText(const HeightField& field);
HeightField HeightFieldFromText(const std::string& text);

// Raw little-endian float32 row-major array at `path` plus a key-value
// sidecar at `path + ".manifest"`.
void SaveHeightFieldRaw(const HeightField& field, const std::string& path);
HeightField LoadHeightFieldRaw(const std::string& path);

// ---------------------------------------------------------------------------
// Procedural terrain.

inline constexpr double kTerrainMaxHeight = 0.30;
inline constexpr double kTerrainFootprint = 2.0;
inline constexpr int kTerrainGrid = 16;

// Every random quantity drawn by the procedural generator. Building from an
// explicit recipe allows forcing particular draws.
struct TerrainRecipe {
  int rows = kTerrainGrid;
  int cols = kTerrainGrid;
  Eigen::Vector2d footprint{kTerrainFootprint, kTerrainFootprint};
  // (rows/2) x (cols/2) tile heights, row-major.
  std::vector<double> tile_coefficients;
  int column_shift = 0;
  std::array<Eigen::Vector2d, 3> bump_centers;
  std::array<double, 3> bump_eta{};
};

TerrainRecipe SampleTerrainRecipe(std::uint64_t seed, int rows = kTerrainGrid,
                                  int cols = kTerrainGrid,
                                  Eigen::Vector2d footprint = {
                                      kTerrainFootprint, kTerrainFootprint});

// Tiles the coefficients 2x2, shifts columns cyclically, multiplies by the
// max of three radial envelopes and rescales to kTerrainMaxHeight. The field
// origin places the patch at x in [0, footprint_x], y centred on zero.
HeightField BuildTerrain(const TerrainRecipe& recipe);

// Uniformly scales heights so the maximum equals `target`; an all-zero field
// is returned unchanged.
HeightField RescaledToMax(const HeightField& field, double target);

HeightField GenerateTerrain(std::uint64_t seed, int rows = kTerrainGrid,
                            int cols = kTerrainGrid,
                            Eigen::Vector2d footprint = {kTerrainFootprint,
                                                         kTerrainFootprint});

// ---------------------------------------------------------------------------
// Embedding and distortion.

struct Embedding {
  HeightField field;
  int row_offset = 0;
  int col_offset = 0;
};

// Places `patch` at the centre of a rows x cols grid with the same cell size,
// zero heights elsewhere. World coordinates of the patch vertices are kept.
Embedding EmbedCentered(const HeightField& patch, int rows, int cols);

struct DistortionSpec {
  int embed_rows = 46;
  int embed_cols = 46;
  int n_rectangles = 8;
  std::array<double, 2> inner_scale_range{0.7, 1.0};
  std::array<double, 2> outer_scale_range{0.8, 1.5};
  double contact_patch_side = 0.10;
  std::uint64_t rng_seed = 0;

  void Validate() const;
};

// Inclusive vertex-index rectangle.
struct ScaledRectangle {
  int row_min = 0, row_max = 0, col_min = 0, col_max = 0;
  bool inner = false;
  double factor = 1.0;
};

struct DistortionResult {
  HeightField embedded;   // before distortion
  HeightField distorted;  // after distortion and contact restoration
  int row_offset = 0;
  int col_offset = 0;
  std::vector<ScaledRectangle> rectangles;
  int restored_triangles = 0;
};

DistortionResult DistortTerrain(const HeightField& patch,
                                std::span<const Eigen::Vector2d> contacts,
                                const DistortionSpec& spec);

// True when the closed triangle (a, b, c) and the closed axis-aligned square
// of half side `half` centred at `center` intersect.
bool TriangleOverlapsSquare(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                            const Eigen::Vector2d& c,
                            const Eigen::Vector2d& center, double half);

}  // namespace timit

#endif  // TIMIT_HEIGHTFIELD_H_
