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

#pragma once

#include "gaittune/lipm.hpp"

namespace gaittune {

/// Rest-to-rest quintic p0 + (p1 - p0) s(t / T) with
/// s(u) = 10u^3 - 15u^4 + 6u^5: zero velocity and acceleration at both ends.
struct Quintic {
  double start = 0.0;
  double delta = 0.0;
  double duration = 1.0;

  double value(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;

  static Quintic rest_to_rest(double p0, double p1, double duration);
};

struct SwingTrajectory {
  Quintic x, y;
  Quintic rise, fall;   // vertical segments on [0, T/2] and [T/2, T]
  double apex = 0.0;
  double start_time = 0.0;
  double end_time = 0.0;

  double duration() const { return end_time - start_time; }
  /// Foot position at absolute time t, clamped to [start_time, end_time].
  Vec3 position(double t) const;
  Vec3 velocity(double t) const;
};

SwingTrajectory plan_swing(const Vec2& from, const Vec2& to, double apex,
                           double duration, double start_time = 0.0);

}  // namespace gaittune
