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

#include "gaittune/lipm.hpp"

#include <cmath>
#include <stdexcept>

namespace gaittune {

void LipmParams::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(com_height)) throw std::invalid_argument("lipm: com_height must be > 0");
  if (!positive(gravity)) throw std::invalid_argument("lipm: gravity must be > 0");
  if (!positive(sample_period)) throw std::invalid_argument("lipm: sample_period must be > 0");
}

ComState propagate(const ComState& state, const Vec2& jerk, double dt) {
  if (!(std::isfinite(dt) && dt > 0.0)) {
    throw std::invalid_argument("propagate: dt must be > 0");
  }
  if (!state.finite() || !jerk.allFinite()) {
    throw std::invalid_argument("propagate: non-finite state or jerk");
  }
  const double dt2 = dt * dt;
  const double dt3 = dt2 * dt;
  ComState next;
  next.position = state.position + dt * state.velocity +
                  0.5 * dt2 * state.acceleration + (dt3 / 6.0) * jerk;
  next.velocity = state.velocity + dt * state.acceleration + 0.5 * dt2 * jerk;
  next.acceleration = state.acceleration + dt * jerk;
  return next;
}

ComState propagate(const ComState& state, const Vec2& jerk,
                   const LipmParams& params) {
  return propagate(state, jerk, params.sample_period);
}

ZmpPoint zmp_of(const ComState& state, const LipmParams& params) {
  return state.position - (params.com_height / params.gravity) * state.acceleration;
}

double rcof_of(const ComState& state, const LipmParams& params) {
  return state.acceleration.norm() / params.gravity;
}

}  // namespace gaittune
