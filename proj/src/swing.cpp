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

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gaittune {

double Quintic::value(double t) const {
  const double u = t / duration;
  return start + delta * (u * u * u * (10.0 + u * (-15.0 + 6.0 * u)));
}

double Quintic::derivative(double t) const {
  const double u = t / duration;
  return delta / duration * (u * u * (30.0 + u * (-60.0 + 30.0 * u)));
}

double Quintic::second_derivative(double t) const {
  const double u = t / duration;
  return delta / (duration * duration) * (u * (60.0 + u * (-180.0 + 120.0 * u)));
}

Quintic Quintic::rest_to_rest(double p0, double p1, double duration) {
  return Quintic{p0, p1 - p0, duration};
}

SwingTrajectory plan_swing(const Vec2& from, const Vec2& to, double apex,
                           double duration, double start_time) {
  if (!from.allFinite() || !to.allFinite() || !std::isfinite(apex) ||
      !std::isfinite(duration) || !std::isfinite(start_time)) {
    throw std::invalid_argument("plan_swing: non-finite input");
  }
  if (duration <= 0.0) throw std::invalid_argument("plan_swing: duration must be > 0");
  if (apex <= 0.0) throw std::invalid_argument("plan_swing: apex must be > 0");
  SwingTrajectory s;
  s.x = Quintic::rest_to_rest(from.x(), to.x(), duration);
  s.y = Quintic::rest_to_rest(from.y(), to.y(), duration);
  s.rise = Quintic::rest_to_rest(0.0, apex, 0.5 * duration);
  s.fall = Quintic::rest_to_rest(apex, 0.0, 0.5 * duration);
  s.apex = apex;
  s.start_time = start_time;
  s.end_time = start_time + duration;
  return s;
}

Vec3 SwingTrajectory::position(double t) const {
  const double T = duration();
  const double tau = std::clamp(t - start_time, 0.0, T);
  const double z = tau <= 0.5 * T ? rise.value(tau) : fall.value(tau - 0.5 * T);
  return {x.value(tau), y.value(tau), z};
}

Vec3 SwingTrajectory::velocity(double t) const {
  const double T = duration();
  const double tau = std::clamp(t - start_time, 0.0, T);
  const double vz = tau <= 0.5 * T ? rise.derivative(tau) : fall.derivative(tau - 0.5 * T);
  return {x.derivative(tau), y.derivative(tau), vz};
}

}  // namespace gaittune
