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

#ifndef TIMIT_SPARSE_DUAL_H_
#define TIMIT_SPARSE_DUAL_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

namespace timit {

// Forward-mode dual number with a sparse gradient over a global variable
// vector. Gradient entries are kept sorted by index with no duplicates.
class SparseDual {
 public:
  using Entry = std::pair<int, double>;

  SparseDual() = default;
  SparseDual(double value) : value_(value) {}  // NOLINT: implicit constant
  static SparseDual Variable(double value, int index) {
    SparseDual d(value);
    d.grad_.emplace_back(index, 1.0);
    return d;
  }
  // sum_k w_k * x[idx_k]; `terms` need not be sorted.
  static SparseDual Linear(std::vector<Entry> terms, const double* x) {
    SparseDual d;
    std::sort(terms.begin(), terms.end(),
              [](const Entry& a, const Entry& b) { return a.first < b.first; });
    for (const auto& [i, w] : terms) {
      d.value_ += w * x[i];
      if (!d.grad_.empty() && d.grad_.back().first == i) {
        d.grad_.back().second += w;
      } else {
        d.grad_.emplace_back(i, w);
      }
    }
    return d;
  }

  double value() const { return value_; }
  const std::vector<Entry>& grad() const { return grad_; }

  void AppendTo(int row, std::vector<Eigen::Triplet<double>>* jacobian,
                double scale = 1.0) const {
    for (const auto& [i, g] : grad_) {
      if (g != 0.0) jacobian->emplace_back(row, i, scale * g);
    }
  }

  // a * x + b * y.
  static SparseDual Combine(double a, const SparseDual& x, double b,
                            const SparseDual& y) {
    SparseDual out(a * x.value_ + b * y.value_);
    out.grad_.reserve(x.grad_.size() + y.grad_.size());
    auto ix = x.grad_.begin(), iy = y.grad_.begin();
    while (ix != x.grad_.end() || iy != y.grad_.end()) {
      if (iy == y.grad_.end() || (ix != x.grad_.end() && ix->first < iy->first)) {
        out.grad_.emplace_back(ix->first, a * ix->second);
        ++ix;
      } else if (ix == x.grad_.end() || iy->first < ix->first) {
        out.grad_.emplace_back(iy->first, b * iy->second);
        ++iy;
      } else {
        out.grad_.emplace_back(ix->first, a * ix->second + b * iy->second);
        ++ix;
        ++iy;
      }
    }
    return out;
  }

  // Chain rule for a scalar function with derivative `slope` at value().
  SparseDual Apply(double new_value, double slope) const {
    SparseDual out(new_value);
    out.grad_ = grad_;
    for (auto& e : out.grad_) e.second *= slope;
    return out;
  }

  friend SparseDual operator+(const SparseDual& a, const SparseDual& b) {
    return Combine(1.0, a, 1.0, b);
  }
  friend SparseDual operator-(const SparseDual& a, const SparseDual& b) {
    return Combine(1.0, a, -1.0, b);
  }
  friend SparseDual operator-(const SparseDual& a) { return a.Apply(-a.value_, -1.0); }
  friend SparseDual operator*(const SparseDual& a, const SparseDual& b) {
    return Combine(b.value_, a, a.value_, b).WithValue(a.value_ * b.value_);
  }
  friend SparseDual operator/(const SparseDual& a, const SparseDual& b) {
    const double inv = 1.0 / b.value_;
    const double q = a.value_ * inv;
    return Combine(inv, a, -q * inv, b).WithValue(q);
  }
  friend SparseDual operator+(const SparseDual& a, double b) {
    SparseDual out = a;
    out.value_ += b;
    return out;
  }
  friend SparseDual operator+(double a, const SparseDual& b) { return b + a; }
  friend SparseDual operator-(const SparseDual& a, double b) { return a + (-b); }
  friend SparseDual operator-(double a, const SparseDual& b) {
    return b.Apply(a - b.value_, -1.0);
  }
  friend SparseDual operator*(const SparseDual& a, double b) {
    return a.Apply(a.value_ * b, b);
  }
  friend SparseDual operator*(double a, const SparseDual& b) { return b * a; }
  friend SparseDual operator/(const SparseDual& a, double b) {
    return a * (1.0 / b);
  }
  SparseDual& operator+=(const SparseDual& b) { return *this = *this + b; }
  SparseDual& operator-=(const SparseDual& b) { return *this = *this - b; }

  friend SparseDual sin(const SparseDual& a) {
    return a.Apply(std::sin(a.value_), std::cos(a.value_));
  }
  friend SparseDual cos(const SparseDual& a) {
    return a.Apply(std::cos(a.value_), -std::sin(a.value_));
  }

 private:
  SparseDual WithValue(double v) && {
    value_ = v;
    return std::move(*this);
  }

  double value_ = 0.0;
  std::vector<Entry> grad_;
};

using DualVec3 = std::array<SparseDual, 3>;

inline DualVec3 operator+(const DualVec3& a, const DualVec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline DualVec3 operator-(const DualVec3& a, const DualVec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline DualVec3 operator*(const SparseDual& s, const DualVec3& a) {
  return {s * a[0], s * a[1], s * a[2]};
}
inline DualVec3 operator*(double s, const DualVec3& a) {
  return {s * a[0], s * a[1], s * a[2]};
}
inline SparseDual Dot(const DualVec3& a, const DualVec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline DualVec3 Cross(const DualVec3& a, const DualVec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

// Row-major 3x3 matrix of duals.
using DualMat3 = std::array<DualVec3, 3>;

inline DualVec3 Multiply(const DualMat3& m, const DualVec3& v) {
  return {Dot(m[0], v), Dot(m[1], v), Dot(m[2], v)};
}
inline DualVec3 MultiplyTransposed(const DualMat3& m, const DualVec3& v) {
  return v[0] * m[0] + v[1] * m[1] + v[2] * m[2];
}

}  // namespace timit

#endif  // TIMIT_SPARSE_DUAL_H_
