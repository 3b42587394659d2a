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

#include "timit/heightfield.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "timit/config_file.h"
#include "timit/random.h"

namespace timit {

HeightField::HeightField(int rows, int cols, double cell_size,
                         Eigen::Vector2d origin, std::vector<double> heights)
    : rows_(rows),
      cols_(cols),
      cell_size_(cell_size),
      origin_(std::move(origin)),
      heights_(std::move(heights)) {
  if (rows_ < 2 || cols_ < 2) {
    throw TerrainError("height field needs at least 2x2 vertices");
  }
  if (!(cell_size_ > 0.0) || !std::isfinite(cell_size_)) {
    throw TerrainError("height field cell size must be positive");
  }
  if (heights_.size() != static_cast<size_t>(rows_) * cols_) {
    throw TerrainError("height field: expected " +
                       std::to_string(rows_ * cols_) + " heights, got " +
                       std::to_string(heights_.size()));
  }
  for (double h : heights_) {
    if (!std::isfinite(h) || h < 0.0) {
      throw TerrainError("height field heights must be finite and >= 0");
    }
  }
}

HeightField HeightField::Flat(int rows, int cols, double cell_size,
                              Eigen::Vector2d origin, double height) {
  return HeightField(rows, cols, cell_size, std::move(origin),
                     std::vector<double>(static_cast<size_t>(rows) * cols,
                                         height));
}

Eigen::Vector2d HeightField::VertexPosition(int i, int j) const {
  return origin_ + cell_size_ * Eigen::Vector2d(i, j);
}

double HeightField::MaxHeight() const {
  return *std::max_element(heights_.begin(), heights_.end());
}

double HeightField::MinHeight() const {
  return *std::min_element(heights_.begin(), heights_.end());
}

Eigen::Vector2d HeightField::upper_corner() const {
  return VertexPosition(rows_ - 1, cols_ - 1);
}

bool HeightField::Contains(const Eigen::Vector2d& p) const {
  const Eigen::Vector2d hi = upper_corner();
  return p.x() >= origin_.x() && p.y() >= origin_.y() && p.x() <= hi.x() &&
         p.y() <= hi.y();
}

Eigen::Vector2d HeightField::ClampToFootprint(const Eigen::Vector2d& p) const {
  const Eigen::Vector2d hi = upper_corner();
  return {std::clamp(p.x(), origin_.x(), hi.x()),
          std::clamp(p.y(), origin_.y(), hi.y())};
}

std::optional<TerrainSample> HeightField::Query(
    const Eigen::Vector2d& p) const {
  if (!Contains(p)) return std::nullopt;
  // Grid coordinates within rounding of a grid line are snapped onto it, so a
  // query at a vertex returns the stored height exactly.
  auto snap = [](double g) {
    const double r = std::round(g);
    return std::abs(g - r) < 1e-9 ? r : g;
  };
  const double gx = snap((p.x() - origin_.x()) / cell_size_);
  const double gy = snap((p.y() - origin_.y()) / cell_size_);
  const int ci = std::clamp(static_cast<int>(std::floor(gx)), 0, rows_ - 2);
  const int cj = std::clamp(static_cast<int>(std::floor(gy)), 0, cols_ - 2);
  const double u = gx - ci;
  const double v = gy - cj;
  const double h00 = at(ci, cj);
  const double h10 = at(ci + 1, cj);
  const double h11 = at(ci + 1, cj + 1);
  const double h01 = at(ci, cj + 1);

  TerrainSample sample;
  double dhdu = 0.0, dhdv = 0.0;
  if (u >= v) {
    // (0,0), (1,0), (1,1)
    sample.height = (1.0 - u) * h00 + (u - v) * h10 + v * h11;
    dhdu = h10 - h00;
    dhdv = h11 - h10;
  } else {
    // (0,0), (1,1), (0,1)
    sample.height = (1.0 - v) * h00 + u * h11 + (v - u) * h01;
    dhdu = h11 - h01;
    dhdv = h01 - h00;
  }
  sample.slope = Eigen::Vector2d(dhdu, dhdv) / cell_size_;
  sample.normal =
      Eigen::Vector3d(-sample.slope.x(), -sample.slope.y(), 1.0).normalized();
  return sample;
}

TerrainSample HeightField::QueryOrThrow(const Eigen::Vector2d& p) const {
  auto sample = Query(p);
  if (!sample) {
    std::ostringstream msg;
    msg << "height query outside terrain footprint at (" << p.x() << ", "
        << p.y() << ")";
    throw TerrainError(msg.str());
  }
  return *sample;
}

std::array<std::array<int, 2>, 3> HeightField::TriangleVertices(
    int ci, int cj, int tri) const {
  if (tri == 0) {
    return {{{ci, cj}, {ci + 1, cj}, {ci + 1, cj + 1}}};
  }
  return {{{ci, cj}, {ci + 1, cj + 1}, {ci, cj + 1}}};
}

bool HeightField::operator==(const HeightField& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ &&
         cell_size_ == other.cell_size_ && origin_ == other.origin_ &&
         heights_ == other.heights_;
}

// ---------------------------------------------------------------------------
// Serialization.

std::string HeightFieldToText(const HeightField& field) {
  std::string out = "heightfield 1\n";
  out += "rows " + std::to_string(field.rows()) + "\n";
  out += "cols " + std::to_string(field.cols()) + "\n";
  out += "cell_size " + FormatDouble(field.cell_size()) + "\n";
  out += "origin " + FormatDouble(field.origin().x()) + " " +
         FormatDouble(field.origin().y()) + "\n";
  for (int i = 0; i < field.rows(); ++i) {
    for (int j = 0; j < field.cols(); ++j) {
      if (j > 0) out += ' ';
      out += FormatDouble(field.at(i, j));
    }
    out += '\n';
  }
  return out;
}

HeightField HeightFieldFromText(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "heightfield" || version != 1) {
    throw TerrainError("not a heightfield text file (bad header)");
  }
  auto expect = [&](const char* key) {
    std::string got;
    if (!(in >> got) || got != key) {
      throw TerrainError(std::string("heightfield text: expected '") + key +
                         "'");
    }
  };
  int rows = 0, cols = 0;
  double cell = 0.0, ox = 0.0, oy = 0.0;
  expect("rows");
  in >> rows;
  expect("cols");
  in >> cols;
  expect("cell_size");
  in >> cell;
  expect("origin");
  in >> ox >> oy;
  if (!in || rows < 2 || cols < 2) {
    throw TerrainError("heightfield text: malformed header");
  }
  std::vector<double> heights(static_cast<size_t>(rows) * cols);
  for (auto& h : heights) {
    if (!(in >> h)) throw TerrainError("heightfield text: truncated heights");
  }
  return HeightField(rows, cols, cell, {ox, oy}, std::move(heights));
}

void SaveHeightFieldText(const HeightField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw TerrainError("cannot write " + path);
  out << HeightFieldToText(field);
}

HeightField LoadHeightFieldText(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TerrainError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return HeightFieldFromText(buffer.str());
}

void SaveHeightFieldRaw(const HeightField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TerrainError("cannot write " + path);
  for (double h : field.heights()) {
    const float f = static_cast<float>(h);
    unsigned char bytes[4];
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    for (int k = 0; k < 4; ++k) bytes[k] = (bits >> (8 * k)) & 0xff;
    out.write(reinterpret_cast<const char*>(bytes), 4);
  }
  KeyValueConfig manifest;
  manifest.Set("format", "float32_le_row_major");
  manifest.SetInt("rows", field.rows());
  manifest.SetInt("cols", field.cols());
  manifest.SetDouble("cell_size", field.cell_size());
  manifest.SetVector("origin", {field.origin().x(), field.origin().y()});
  manifest.Save(path + ".manifest");
}

HeightField LoadHeightFieldRaw(const std::string& path) {
  const auto manifest = KeyValueConfig::Load(path + ".manifest");
  const int rows = manifest.GetInt("rows");
  const int cols = manifest.GetInt("cols");
  const auto origin = manifest.GetVector("origin");
  if (origin.size() != 2) throw TerrainError("raw manifest: bad origin");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TerrainError("cannot open " + path);
  std::vector<double> heights(static_cast<size_t>(rows) * cols);
  for (auto& h : heights) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
      throw TerrainError("raw heightfield truncated: " + path);
    }
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= std::uint32_t(bytes[k]) << (8 * k);
    float f;
    std::memcpy(&f, &bits, 4);
    h = f;
  }
  return HeightField(rows, cols, manifest.GetDouble("cell_size"),
                     {origin[0], origin[1]}, std::move(heights));
}

// ---------------------------------------------------------------------------
// Procedural terrain.

TerrainRecipe SampleTerrainRecipe(std::uint64_t seed, int rows, int cols,
                                  Eigen::Vector2d footprint) {
  if (rows % 2 != 0 || cols % 2 != 0 || rows < 2 || cols < 2) {
    throw TerrainError("terrain grid dimensions must be even");
  }
  if (!(footprint.x() > 0.0) || !(footprint.y() > 0.0)) {
    throw TerrainError("terrain footprint must be positive");
  }
  Rng rng(seed);
  TerrainRecipe recipe;
  recipe.rows = rows;
  recipe.cols = cols;
  recipe.footprint = footprint;
  recipe.tile_coefficients.resize(static_cast<size_t>(rows / 2) * (cols / 2));
  for (auto& c : recipe.tile_coefficients) c = rng.Uniform(0.0, 0.2);
  recipe.column_shift = rng.UniformInt(0, cols - 1);
  for (int k = 0; k < 3; ++k) {
    const double x = rng.Uniform(0.0, footprint.x());
    const double y = rng.Uniform(-0.5 * footprint.y(), 0.5 * footprint.y());
    recipe.bump_centers[k] = {x, y};
    recipe.bump_eta[k] = rng.Uniform(0.0, 1.0);
  }
  return recipe;
}

namespace {

void RescaleToMax(std::vector<double>& heights, double target) {
  const double max = *std::max_element(heights.begin(), heights.end());
  if (max <= 0.0) return;
  const double scale = target / max;
  for (auto& h : heights) h *= scale;
}

}  // namespace

HeightField BuildTerrain(const TerrainRecipe& recipe) {
  const int rows = recipe.rows;
  const int cols = recipe.cols;
  const double cell = recipe.footprint.x() / (rows - 1);
  if (std::abs(recipe.footprint.y() / (cols - 1) - cell) > 1e-12 * cell) {
    throw TerrainError("terrain footprint must give square cells");
  }
  const int tile_cols = cols / 2;
  if (recipe.tile_coefficients.size() !=
      static_cast<size_t>(rows / 2) * tile_cols) {
    throw TerrainError("terrain recipe: wrong coefficient count");
  }
  const Eigen::Vector2d origin(0.0, -0.5 * recipe.footprint.y());

  std::vector<double> heights(static_cast<size_t>(rows) * cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      // Kronecker product with ones(2, 2), then cyclic column shift.
      const int src_col = ((j - recipe.column_shift) % cols + cols) % cols;
      const double tile =
          recipe.tile_coefficients[(i / 2) * tile_cols + src_col / 2];
      const Eigen::Vector2d p = origin + cell * Eigen::Vector2d(i, j);
      double envelope = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double bandwidth = std::exp(-2.0 * recipe.bump_eta[k]);
        envelope = std::max(
            envelope,
            std::exp(-(recipe.bump_centers[k] - p).norm() / bandwidth));
      }
      heights[i * cols + j] = tile * envelope;
    }
  }
  RescaleToMax(heights, kTerrainMaxHeight);
  return HeightField(rows, cols, cell, origin, std::move(heights));
}

HeightField RescaledToMax(const HeightField& field, double target) {
  std::vector<double> heights = field.heights();
  RescaleToMax(heights, target);
  return HeightField(field.rows(), field.cols(), field.cell_size(),
                     field.origin(), std::move(heights));
}

HeightField GenerateTerrain(std::uint64_t seed, int rows, int cols,
                            Eigen::Vector2d footprint) {
  return BuildTerrain(SampleTerrainRecipe(seed, rows, cols, footprint));
}

// ---------------------------------------------------------------------------
// Embedding and distortion.

Embedding EmbedCentered(const HeightField& patch, int rows, int cols) {
  if (rows < patch.rows() || cols < patch.cols()) {
    throw TerrainError("embedding grid smaller than the patch");
  }
  Embedding out;
  out.row_offset = (rows - patch.rows()) / 2;
  out.col_offset = (cols - patch.cols()) / 2;
  std::vector<double> heights(static_cast<size_t>(rows) * cols, 0.0);
  for (int i = 0; i < patch.rows(); ++i) {
    for (int j = 0; j < patch.cols(); ++j) {
      heights[(i + out.row_offset) * cols + j + out.col_offset] =
          patch.at(i, j);
    }
  }
  const Eigen::Vector2d origin =
      patch.origin() -
      patch.cell_size() * Eigen::Vector2d(out.row_offset, out.col_offset);
  out.field =
      HeightField(rows, cols, patch.cell_size(), origin, std::move(heights));
  return out;
}

void DistortionSpec::Validate() const {
  auto positive_interval = [](const std::array<double, 2>& r) {
    return r[0] > 0.0 && r[1] >= r[0];
  };
  if (!positive_interval(inner_scale_range) ||
      !positive_interval(outer_scale_range)) {
    throw TerrainError("distortion scale ranges must be positive intervals");
  }
  if (!(contact_patch_side > 0.0)) {
    throw TerrainError("distortion contact patch side must be positive");
  }
  if (n_rectangles < 0 || embed_rows < 2 || embed_cols < 2) {
    throw TerrainError("distortion spec: bad counts");
  }
}

bool TriangleOverlapsSquare(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                            const Eigen::Vector2d& c,
                            const Eigen::Vector2d& center, double half) {
  // Separating axis test over the square's two axes and the three edge
  // normals. Touching counts as overlap.
  const Eigen::Vector2d lo = center.array() - half;
  const Eigen::Vector2d hi = center.array() + half;
  for (int axis = 0; axis < 2; ++axis) {
    const double tmin = std::min({a[axis], b[axis], c[axis]});
    const double tmax = std::max({a[axis], b[axis], c[axis]});
    if (tmax < lo[axis] || tmin > hi[axis]) return false;
  }
  const std::array<Eigen::Vector2d, 3> verts{a, b, c};
  const std::array<Eigen::Vector2d, 4> corners{
      Eigen::Vector2d(lo.x(), lo.y()), Eigen::Vector2d(hi.x(), lo.y()),
      Eigen::Vector2d(hi.x(), hi.y()), Eigen::Vector2d(lo.x(), hi.y())};
  for (int e = 0; e < 3; ++e) {
    const Eigen::Vector2d edge = verts[(e + 1) % 3] - verts[e];
    const Eigen::Vector2d axis(-edge.y(), edge.x());
    double tmin = axis.dot(verts[0]), tmax = tmin;
    for (int k = 1; k < 3; ++k) {
      const double d = axis.dot(verts[k]);
      tmin = std::min(tmin, d);
      tmax = std::max(tmax, d);
    }
    double smin = axis.dot(corners[0]), smax = smin;
    for (int k = 1; k < 4; ++k) {
      const double d = axis.dot(corners[k]);
      smin = std::min(smin, d);
      smax = std::max(smax, d);
    }
    if (tmax < smin || smax < tmin) return false;
  }
  return true;
}

DistortionResult DistortTerrain(const HeightField& patch,
                                std::span<const Eigen::Vector2d> contacts,
                                const DistortionSpec& spec) {
  spec.Validate();
  if (patch.rows() != kTerrainGrid || patch.cols() != kTerrainGrid) {
    throw TerrainError("distortion expects a 16x16 terrain patch");
  }
  Embedding embedding = EmbedCentered(patch, spec.embed_rows, spec.embed_cols);
  DistortionResult result;
  result.row_offset = embedding.row_offset;
  result.col_offset = embedding.col_offset;
  result.embedded = embedding.field;
  for (const auto& c : contacts) {
    if (!result.embedded.Contains(c)) {
      throw TerrainError("distortion contact outside the embedded footprint");
    }
  }

  const int rows = spec.embed_rows;
  const int cols = spec.embed_cols;
  // Central patch and the band of rows ahead of it (larger x, the walking
  // direction) over the same columns.
  const int inner_row_min = embedding.row_offset;
  const int inner_row_max = rows - 1;
  const int inner_col_min = embedding.col_offset;
  const int inner_col_max = embedding.col_offset + patch.cols() - 1;

  Rng rng(spec.rng_seed);
  std::vector<double> heights = result.embedded.heights();
  for (int k = 0; k < spec.n_rectangles; ++k) {
    const int r0 = rng.UniformInt(0, rows - 1);
    const int r1 = rng.UniformInt(0, rows - 1);
    const int c0 = rng.UniformInt(0, cols - 1);
    const int c1 = rng.UniformInt(0, cols - 1);
    ScaledRectangle rect;
    rect.row_min = std::min(r0, r1);
    rect.row_max = std::max(r0, r1);
    rect.col_min = std::min(c0, c1);
    rect.col_max = std::max(c0, c1);
    rect.inner = rect.row_max >= inner_row_min &&
                 rect.row_min <= inner_row_max &&
                 rect.col_max >= inner_col_min && rect.col_min <= inner_col_max;
    const auto& range =
        rect.inner ? spec.inner_scale_range : spec.outer_scale_range;
    rect.factor = rng.Uniform(range[0], range[1]);
    result.rectangles.push_back(rect);
    if (rect.row_min == rect.row_max || rect.col_min == rect.col_max) {
      continue;  // zero area
    }
    for (int i = rect.row_min; i <= rect.row_max; ++i) {
      for (int j = rect.col_min; j <= rect.col_max; ++j) {
        heights[i * cols + j] *= rect.factor;
      }
    }
  }

  // Restore every triangle touching a contact square.
  const auto& original = result.embedded;
  const double half = 0.5 * spec.contact_patch_side;
  const double cell = original.cell_size();
  for (const auto& c : contacts) {
    const Eigen::Vector2d lo = (c.array() - half - original.origin().array()) /
                               cell;
    const Eigen::Vector2d hi = (c.array() + half - original.origin().array()) /
                               cell;
    const int i0 = std::clamp(static_cast<int>(std::floor(lo.x())) - 1, 0,
                              rows - 2);
    const int i1 = std::clamp(static_cast<int>(std::floor(hi.x())) + 1, 0,
                              rows - 2);
    const int j0 = std::clamp(static_cast<int>(std::floor(lo.y())) - 1, 0,
                              cols - 2);
    const int j1 = std::clamp(static_cast<int>(std::floor(hi.y())) + 1, 0,
                              cols - 2);
    for (int ci = i0; ci <= i1; ++ci) {
      for (int cj = j0; cj <= j1; ++cj) {
        for (int tri = 0; tri < 2; ++tri) {
          const auto verts = original.TriangleVertices(ci, cj, tri);
          const Eigen::Vector2d a =
              original.VertexPosition(verts[0][0], verts[0][1]);
          const Eigen::Vector2d b =
              original.VertexPosition(verts[1][0], verts[1][1]);
          const Eigen::Vector2d d =
              original.VertexPosition(verts[2][0], verts[2][1]);
          if (!TriangleOverlapsSquare(a, b, d, c, half)) continue;
          ++result.restored_triangles;
          for (const auto& v : verts) {
            const int idx = original.Index(v[0], v[1]);
            heights[idx] = original.heights()[idx];
          }
        }
      }
    }
  }
  result.distorted = HeightField(rows, cols, cell, original.origin(),
                                 std::move(heights));
  return result;
}

}  // namespace timit
