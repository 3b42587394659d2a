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

#ifndef TIMIT_SPLINE_H_
#define TIMIT_SPLINE_H_

#include <array>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace timit {

class SplineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Weights of (p0, v0, p1, v1) in the `order`-th time derivative (0..3) of a
// cubic Hermite segment of duration d evaluated at local time tau.
std::array<double, 4> HermiteWeights(double tau, double d, int order);
// Partial derivative of HermiteWeights with respect to d at fixed tau
// (orders 0..2).
std::array<double, 4> HermiteWeightsDurationPartial(double tau, double d,
                                                    int order);

struct HermiteSegment {
  Eigen::Vector3d p0 = Eigen::Vector3d::Zero();
  Eigen::Vector3d v0 = Eigen::Vector3d::Zero();
  Eigen::Vector3d p1 = Eigen::Vector3d::Zero();
  Eigen::Vector3d v1 = Eigen::Vector3d::Zero();
  double duration = 1.0;

  // `order`-th derivative at local time tau.
  Eigen::Vector3d Derivative(double tau, int order) const;
};

enum class PhaseTag { kNone, kStance, kSwing };

struct SplineNode {
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  Eigen::Vector3d vel = Eigen::Vector3d::Zero();
};

struct SplineState {
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  Eigen::Vector3d vel = Eigen::Vector3d::Zero();
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
};

// Piecewise cubic Hermite curve in R^3. Segment k joins node k to node k+1,
// so value and first derivative are continuous at every interior knot.
class PhaseSpline {
 public:
  PhaseSpline() = default;
  PhaseSpline(std::vector<SplineNode> nodes, std::vector<double> durations,
              std::vector<PhaseTag> tags = {});

  int segment_count() const { return static_cast<int>(durations_.size()); }
  const std::vector<SplineNode>& nodes() const { return nodes_; }
  const std::vector<double>& durations() const { return durations_; }
  const std::vector<PhaseTag>& tags() const { return tags_; }
  double total_duration() const { return total_; }
  HermiteSegment segment(int k) const;

  struct Location {
    int segment = 0;
    double tau = 0.0;
  };
  // Segment containing t and the local time. A knot time maps to the end of
  // the segment on its left; t outside [0, T] maps onto the first or last
  // segment with tau outside [0, d].
  Location Locate(double t) const;

  // Throws SplineError for t outside [0, T] (1e-9 s slack).
  SplineState Eval(double t) const;
  // Extends the first and last segment polynomials beyond [0, T].
  SplineState EvalExtrapolated(double t) const;
  Eigen::Vector3d Derivative(double t, int order) const;

  // d(order-th derivative at t)/d(duration_k) for every segment k, columns in
  // segment order. Segments before the containing one shift the local time;
  // the containing segment also stretches.
  Eigen::Matrix3Xd DurationGradient(double t, int order) const;

 private:
  std::vector<SplineNode> nodes_;
  std::vector<double> durations_;
  std::vector<double> starts_;
  std::vector<PhaseTag> tags_;
  double total_ = 0.0;
};

// Alternating stance/swing durations per end-effector.
struct PhaseSchedule {
  std::vector<std::vector<double>> durations;
  std::vector<bool> starts_in_stance;

  int leg_count() const { return static_cast<int>(durations.size()); }
  int phase_count(int leg) const {
    return static_cast<int>(durations[leg].size());
  }
  bool IsStancePhase(int leg, int phase) const {
    return (phase % 2 == 0) == starts_in_stance[leg];
  }
  double Total(int leg) const;
  // Phase index containing t; phase j covers (start_j, end_j], with t = 0
  // assigned to the first phase.
  int PhaseAt(int leg, double t) const;
  bool InStance(int leg, double t) const {
    return IsStancePhase(leg, PhaseAt(leg, t));
  }
  int StancePhaseCount(int leg) const;

  // Checks bounds and that every leg's durations sum to `horizon`.
  void Validate(double min_duration, double max_duration, double horizon,
                double tol = 1e-9) const;
};

}  // namespace timit

#endif  // TIMIT_SPLINE_H_
