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

#include "timit/spline.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace timit {

std::array<double, 4> HermiteWeights(double tau, double d, int order) {
  const double d2 = d * d;
  const double d3 = d2 * d;
  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  switch (order) {
    case 0:
      return {1.0 - 3.0 * t2 / d2 + 2.0 * t3 / d3,
              tau - 2.0 * t2 / d + t3 / d2, 3.0 * t2 / d2 - 2.0 * t3 / d3,
              -t2 / d + t3 / d2};
    case 1:
      return {-6.0 * tau / d2 + 6.0 * t2 / d3,
              1.0 - 4.0 * tau / d + 3.0 * t2 / d2,
              6.0 * tau / d2 - 6.0 * t2 / d3, -2.0 * tau / d + 3.0 * t2 / d2};
    case 2:
      return {-6.0 / d2 + 12.0 * tau / d3, -4.0 / d + 6.0 * tau / d2,
              6.0 / d2 - 12.0 * tau / d3, -2.0 / d + 6.0 * tau / d2};
    case 3:
      return {12.0 / d3, 6.0 / d2, -12.0 / d3, 6.0 / d2};
    default:
      return {0.0, 0.0, 0.0, 0.0};
  }
}

std::array<double, 4> HermiteWeightsDurationPartial(double tau, double d,
                                                    int order) {
  const double d2 = d * d;
  const double d3 = d2 * d;
  const double d4 = d3 * d;
  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  switch (order) {
    case 0:
      return {6.0 * t2 / d3 - 6.0 * t3 / d4, 2.0 * t2 / d2 - 2.0 * t3 / d3,
              -6.0 * t2 / d3 + 6.0 * t3 / d4, t2 / d2 - 2.0 * t3 / d3};
    case 1:
      return {12.0 * tau / d3 - 18.0 * t2 / d4,
              4.0 * tau / d2 - 6.0 * t2 / d3,
              -12.0 * tau / d3 + 18.0 * t2 / d4,
              2.0 * tau / d2 - 6.0 * t2 / d3};
    case 2:
      return {12.0 / d3 - 36.0 * tau / d4, 4.0 / d2 - 12.0 * tau / d3,
              -12.0 / d3 + 36.0 * tau / d4, 2.0 / d2 - 12.0 * tau / d3};
    default:
      throw SplineError("duration partial only defined for orders 0..2");
  }
}

Eigen::Vector3d HermiteSegment::Derivative(double tau, int order) const {
  const auto w = HermiteWeights(tau, duration, order);
  return w[0] * p0 + w[1] * v0 + w[2] * p1 + w[3] * v1;
}

PhaseSpline::PhaseSpline(std::vector<SplineNode> nodes,
                         std::vector<double> durations,
                         std::vector<PhaseTag> tags)
    : nodes_(std::move(nodes)),
      durations_(std::move(durations)),
      tags_(std::move(tags)) {
  if (durations_.empty()) throw SplineError("spline needs a segment");
  if (nodes_.size() != durations_.size() + 1) {
    throw SplineError("spline needs one more node than segments");
  }
  if (tags_.empty()) tags_.assign(durations_.size(), PhaseTag::kNone);
  if (tags_.size() != durations_.size()) {
    throw SplineError("spline needs one phase tag per segment");
  }
  starts_.resize(durations_.size());
  total_ = 0.0;
  for (size_t k = 0; k < durations_.size(); ++k) {
    if (!(durations_[k] > 0.0)) {
      throw SplineError("spline segment " + std::to_string(k) +
                        " has non-positive duration");
    }
    starts_[k] = total_;
    total_ += durations_[k];
  }
}

HermiteSegment PhaseSpline::segment(int k) const {
  return {nodes_[k].pos, nodes_[k].vel, nodes_[k + 1].pos, nodes_[k + 1].vel,
          durations_[k]};
}

PhaseSpline::Location PhaseSpline::Locate(double t) const {
  // First segment whose end is >= t.
  int k = 0;
  const int n = segment_count();
  while (k < n - 1 && starts_[k] + durations_[k] < t) ++k;
  return {k, t - starts_[k]};
}

SplineState PhaseSpline::Eval(double t) const {
  const double slack = 1e-9;
  if (t < -slack || t > total_ + slack) {
    throw SplineError("spline evaluated at t=" + std::to_string(t) +
                      " outside [0, " + std::to_string(total_) + "]");
  }
  return EvalExtrapolated(std::clamp(t, 0.0, total_));
}

SplineState PhaseSpline::EvalExtrapolated(double t) const {
  const auto loc = Locate(t);
  const auto seg = segment(loc.segment);
  return {seg.Derivative(loc.tau, 0), seg.Derivative(loc.tau, 1),
          seg.Derivative(loc.tau, 2)};
}

Eigen::Vector3d PhaseSpline::Derivative(double t, int order) const {
  const auto loc = Locate(t);
  return segment(loc.segment).Derivative(loc.tau, order);
}

Eigen::Matrix3Xd PhaseSpline::DurationGradient(double t, int order) const {
  Eigen::Matrix3Xd grad = Eigen::Matrix3Xd::Zero(3, segment_count());
  const auto loc = Locate(t);
  const auto seg = segment(loc.segment);
  // Earlier segments move the start of the containing one: dtau = -dd.
  const Eigen::Vector3d shift = -seg.Derivative(loc.tau, order + 1);
  for (int k = 0; k < loc.segment; ++k) grad.col(k) = shift;
  const auto w = HermiteWeightsDurationPartial(loc.tau, seg.duration, order);
  grad.col(loc.segment) =
      w[0] * seg.p0 + w[1] * seg.v0 + w[2] * seg.p1 + w[3] * seg.v1;
  return grad;
}

double PhaseSchedule::Total(int leg) const {
  double total = 0.0;
  for (double d : durations[leg]) total += d;
  return total;
}

int PhaseSchedule::PhaseAt(int leg, double t) const {
  const auto& d = durations[leg];
  double end = 0.0;
  for (size_t j = 0; j < d.size(); ++j) {
    end += d[j];
    if (t <= end) return static_cast<int>(j);
  }
  return static_cast<int>(d.size()) - 1;
}

int PhaseSchedule::StancePhaseCount(int leg) const {
  int count = 0;
  for (int j = 0; j < phase_count(leg); ++j) count += IsStancePhase(leg, j);
  return count;
}

void PhaseSchedule::Validate(double min_duration, double max_duration,
                             double horizon, double tol) const {
  if (starts_in_stance.size() != durations.size()) {
    throw SplineError("phase schedule: leg count mismatch");
  }
  for (int leg = 0; leg < leg_count(); ++leg) {
    if (durations[leg].empty()) {
      throw SplineError("phase schedule: leg without phases");
    }
    for (double d : durations[leg]) {
      if (d < min_duration - tol || d > max_duration + tol) {
        throw SplineError("phase schedule: duration " + std::to_string(d) +
                          " outside bounds");
      }
    }
    if (std::abs(Total(leg) - horizon) > tol) {
      throw SplineError("phase schedule: leg " + std::to_string(leg) +
                        " durations do not sum to the horizon");
    }
  }
}

}  // namespace timit
