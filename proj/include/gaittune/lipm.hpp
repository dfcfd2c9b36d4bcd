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

#include <Eigen/Core>

namespace gaittune {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Horizontal CoM state of the linear inverted pendulum, one column per axis.
struct ComState {
  Vec2 position = Vec2::Zero();      // [m]
  Vec2 velocity = Vec2::Zero();      // [m/s]
  Vec2 acceleration = Vec2::Zero();  // [m/s^2]

  bool finite() const {
    return position.allFinite() && velocity.allFinite() &&
           acceleration.allFinite();
  }
};

struct LipmParams {
  double com_height = 0.8;     // [m]
  double gravity = 9.81;       // [m/s^2]
  double sample_period = 0.01; // [s]

  /// Throws std::invalid_argument unless all three are finite and positive.
  void validate() const;
  double omega_squared() const { return gravity / com_height; }
};

using ZmpPoint = Vec2;

/// Exact zero-order-hold update of the jerk-driven triple integrator.
ComState propagate(const ComState& state, const Vec2& jerk,
                   const LipmParams& params);

/// Same as propagate() with an explicit step length instead of
/// params.sample_period.
ComState propagate(const ComState& state, const Vec2& jerk, double dt);

/// z = c - (h/g) * c_ddot on each axis.
ZmpPoint zmp_of(const ComState& state, const LipmParams& params);

/// Required coefficient of friction, ||c_ddot|| / g (no vertical acceleration
/// under the pendulum assumption).
double rcof_of(const ComState& state, const LipmParams& params);

}  // namespace gaittune
