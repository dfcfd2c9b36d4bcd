// Copyright 2026 The gaittune Authors
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

#include "gaittune/swing.hpp"

#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

namespace gaittune {
namespace {

TEST(PlanSwing, InPlaceHasZeroHorizontalMotion) {
  const SwingTrajectory s = plan_swing(Vec2::Zero(), Vec2::Zero(), 0.05, 0.8);
  for (int i = 0; i <= 100; ++i) {
    const Vec3 p = s.position(0.008 * i);
    EXPECT_EQ(p.x(), 0.0);
    EXPECT_EQ(p.y(), 0.0);
  }
}

TEST(PlanSwing, MidpointIsHalfwayAndAtApex) {
  const SwingTrajectory s = plan_swing(Vec2(0, 0), Vec2(0.3, 0), 0.05, 0.8);
  const Vec3 mid = s.position(0.4);
  EXPECT_NEAR(mid.x(), 0.15, 1e-12);
  EXPECT_DOUBLE_EQ(mid.z(), 0.05);
}

TEST(PlanSwing, BoundaryConditions) {
  const Vec2 a(0.1, -0.2), b(0.7, 0.15);
  const double T = 0.8, t0 = 1.25;
  const SwingTrajectory s = plan_swing(a, b, 0.07, T, t0);
  EXPECT_NEAR((s.position(t0) - Vec3(a.x(), a.y(), 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((s.position(t0 + T) - Vec3(b.x(), b.y(), 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(s.velocity(t0).norm(), 0.0, 1e-12);
  EXPECT_NEAR(s.velocity(t0 + T).norm(), 0.0, 1e-12);
  for (const Quintic* q : {&s.x, &s.y}) {
    EXPECT_NEAR(q->second_derivative(0.0), 0.0, 1e-12);
    EXPECT_NEAR(q->second_derivative(T), 0.0, 1e-9);
  }
  // Vertical velocity continuous at the apex.
  EXPECT_NEAR(s.rise.derivative(0.5 * T), s.fall.derivative(0.0), 1e-12);
}

TEST(PlanSwing, ApexIsTheMaximumHeight) {
  const SwingTrajectory s = plan_swing(Vec2(0, 0), Vec2(0.4, 0.2), 0.05, 0.8);
  double top = 0.0;
  for (int i = 0; i <= 100000; ++i) top = std::max(top, s.position(0.8 * i / 100000.0).z());
  EXPECT_NEAR(top, 0.05, 1e-9);
}

TEST(PlanSwing, RejectsBadInput) {
  EXPECT_THROW(plan_swing(Vec2(NAN, 0), Vec2::Zero(), 0.05, 0.8), std::invalid_argument);
  EXPECT_THROW(plan_swing(Vec2::Zero(), Vec2::Zero(), 0.05, 0.0), std::invalid_argument);
  EXPECT_THROW(plan_swing(Vec2::Zero(), Vec2::Zero(), 0.0, 0.8), std::invalid_argument);
}

}  // namespace
}  // namespace gaittune
