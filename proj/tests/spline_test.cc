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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "timit/random.h"

namespace timit {
namespace {

PhaseSpline RandomSpline(Rng& rng, int segments) {
  std::vector<SplineNode> nodes(segments + 1);
  for (auto& n : nodes) {
    for (int a = 0; a < 3; ++a) {
      n.pos[a] = rng.Uniform(-1.0, 1.0);
      n.vel[a] = rng.Uniform(-2.0, 2.0);
    }
  }
  std::vector<double> durations(segments);
  for (auto& d : durations) d = rng.Uniform(0.1, 0.8);
  return PhaseSpline(nodes, durations);
}

double RelError(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

TEST(SplineTest, ConstantSegment) {
  const Eigen::Vector3d c(0.3, -1.0, 2.0);
  const PhaseSpline s({{c, Eigen::Vector3d::Zero()}, {c, Eigen::Vector3d::Zero()}},
                      {0.7});
  for (double t : {0.0, 0.2, 0.35, 0.7}) {
    const SplineState st = s.Eval(t);
    EXPECT_NEAR((st.pos - c).norm(), 0.0, 1e-15);
    EXPECT_NEAR(st.vel.norm(), 0.0, 1e-15);
    EXPECT_NEAR(st.acc.norm(), 0.0, 1e-13);
    EXPECT_NEAR(s.DurationGradient(t, 0).norm(), 0.0, 1e-13);
  }
}

TEST(SplineTest, MidpointOfRestToRest) {
  for (double T : {0.5, 1.0, 3.0}) {
    const PhaseSpline s({{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()},
                         {Eigen::Vector3d::Ones(), Eigen::Vector3d::Zero()}},
                        {T});
    EXPECT_NEAR(s.Eval(T / 2).pos.x(), 0.5, 1e-15);
  }
}

TEST(SplineTest, StartStateAndSecondDerivative) {
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    const PhaseSpline s = RandomSpline(rng, 1);
    const HermiteSegment seg = s.segment(0);
    const double T = seg.duration;
    const SplineState st = s.Eval(0.0);
    const Eigen::Vector3d acc =
        6.0 * (seg.p1 - seg.p0) / (T * T) - (4.0 * seg.v0 + 2.0 * seg.v1) / T;
    EXPECT_NEAR((st.pos - seg.p0).norm(), 0.0, 1e-15);
    EXPECT_NEAR((st.vel - seg.v0).norm(), 0.0, 1e-15);
    EXPECT_NEAR((st.acc - acc).norm(), 0.0, 1e-10);
  }
}

TEST(SplineTest, OutsideHorizonThrows) {
  Rng rng(1);
  const PhaseSpline s = RandomSpline(rng, 3);
  EXPECT_THROW(s.Eval(-0.01), SplineError);
  EXPECT_THROW(s.Eval(s.total_duration() + 0.01), SplineError);
  EXPECT_NO_THROW(s.Eval(s.total_duration()));
  EXPECT_NO_THROW(s.EvalExtrapolated(s.total_duration() + 0.5));
}

TEST(SplineTest, KnotsAreC1AndBelongToLeftSegment) {
  Rng rng(4);
  const PhaseSpline s = RandomSpline(rng, 5);
  double t = 0.0;
  for (int k = 0; k + 1 < s.segment_count(); ++k) {
    t += s.durations()[k];
    const auto loc = s.Locate(t);
    EXPECT_EQ(loc.segment, k);
    const HermiteSegment right = s.segment(k + 1);
    const SplineState st = s.Eval(t);
    EXPECT_NEAR((st.pos - right.Derivative(0.0, 0)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((st.vel - right.Derivative(0.0, 1)).norm(), 0.0, 1e-12);
  }
}

TEST(SplineTest, LinearInNodeParameters) {
  Rng rng(7);
  const PhaseSpline a = RandomSpline(rng, 4);
  PhaseSpline b = RandomSpline(rng, 4);
  b = PhaseSpline(b.nodes(), a.durations());
  std::vector<SplineNode> sum(a.nodes().size());
  for (size_t k = 0; k < sum.size(); ++k) {
    sum[k].pos = 2.0 * a.nodes()[k].pos - 0.5 * b.nodes()[k].pos;
    sum[k].vel = 2.0 * a.nodes()[k].vel - 0.5 * b.nodes()[k].vel;
  }
  const PhaseSpline c(sum, a.durations());
  for (int i = 0; i <= 50; ++i) {
    const double t = a.total_duration() * i / 50.0;
    for (int order = 0; order < 3; ++order) {
      const Eigen::Vector3d expect =
          2.0 * a.Derivative(t, order) - 0.5 * b.Derivative(t, order);
      EXPECT_NEAR((c.Derivative(t, order) - expect).norm(), 0.0, 1e-11);
    }
  }
}

TEST(SplineTest, ParameterGradientMatchesFiniteDifferences) {
  Rng rng(21);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const PhaseSpline s = RandomSpline(rng, 3);
    const double t = rng.Uniform(0.0, s.total_duration());
    const auto loc = s.Locate(t);
    for (int order = 0; order < 3; ++order) {
      const auto w =
          HermiteWeights(loc.tau, s.durations()[loc.segment], order);
      // Perturb the x coordinate of each of the four parameters.
      for (int p = 0; p < 4; ++p) {
        auto plus = s.nodes(), minus = s.nodes();
        const int node = loc.segment + p / 2;
        auto& fp = (p % 2 == 0) ? plus[node].pos : plus[node].vel;
        auto& fm = (p % 2 == 0) ? minus[node].pos : minus[node].vel;
        fp.x() += h;
        fm.x() -= h;
        const double fd = (PhaseSpline(plus, s.durations()).Derivative(t, order).x() -
                           PhaseSpline(minus, s.durations()).Derivative(t, order).x()) /
                          (2 * h);
        EXPECT_LT(RelError(w[p], fd), 1e-4);
      }
    }
  }
}

TEST(SplineTest, DurationGradientMatchesFiniteDifferences) {
  Rng rng(33);
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const PhaseSpline s = RandomSpline(rng, 4);
    const double t = rng.Uniform(0.05, s.total_duration() - 0.05);
    for (int order = 0; order < 3; ++order) {
      const Eigen::Matrix3Xd g = s.DurationGradient(t, order);
      for (int k = 0; k < s.segment_count(); ++k) {
        auto dp = s.durations(), dm = s.durations();
        dp[k] += h;
        dm[k] -= h;
        const Eigen::Vector3d fd =
            (PhaseSpline(s.nodes(), dp).Derivative(t, order) -
             PhaseSpline(s.nodes(), dm).Derivative(t, order)) /
            (2 * h);
        for (int a = 0; a < 3; ++a) {
          EXPECT_LT(RelError(g(a, k), fd[a]), 1e-4)
              << "trial " << trial << " order " << order << " seg " << k;
        }
      }
    }
  }
}

TEST(SplineTest, LinearSegmentDurationSensitivity) {
  // p(t) = p0 + v t with fixed end node p1 = p0 + v T. With s = t / T the
  // value is p0 H00(s) + p1 H01(s) + T v (H10(s) + H11(s)); differentiating
  // in T at fixed t gives v (2 s^3 - 3 s^2).
  const Eigen::Vector3d p0(0.1, 0.2, 0.3), v(1.0, -0.5, 0.25);
  const double T = 0.8;
  const PhaseSpline s({{p0, v}, {p0 + v * T, v}}, {T});
  for (double t : {0.1, 0.4, 0.7}) {
    const double u = t / T;
    const Eigen::Vector3d expect = v * (2 * u * u * u - 3 * u * u);
    EXPECT_NEAR((s.DurationGradient(t, 0).col(0) - expect).norm(), 0.0, 1e-12);
  }
}

TEST(PhaseScheduleTest, BoundaryBelongsToEndingPhase) {
  PhaseSchedule sched;
  sched.durations = {{0.5, 0.3, 1.2}};
  sched.starts_in_stance = {true};
  EXPECT_EQ(sched.PhaseAt(0, 0.0), 0);
  EXPECT_EQ(sched.PhaseAt(0, 0.5), 0);
  EXPECT_EQ(sched.PhaseAt(0, 0.5000001), 1);
  EXPECT_TRUE(sched.InStance(0, 0.5));
  EXPECT_FALSE(sched.InStance(0, 0.8));
  EXPECT_TRUE(sched.InStance(0, 0.81));
  EXPECT_EQ(sched.StancePhaseCount(0), 2);
  EXPECT_NO_THROW(sched.Validate(0.1, 1.5, 2.0));
  EXPECT_THROW(sched.Validate(0.1, 1.0, 2.0), SplineError);
  EXPECT_THROW(sched.Validate(0.1, 1.5, 2.1), SplineError);
}

}  // namespace
}  // namespace timit
