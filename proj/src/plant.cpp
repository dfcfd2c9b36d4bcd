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

#include "gaittune/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gaittune {

void PlantParams::validate() const {
  if (!(mass > 0.0) || !(mass_scale > 0.0)) throw std::invalid_argument("plant: mass must be > 0");
  if (!(gravity > 0.0)) throw std::invalid_argument("plant: gravity must be > 0");
  if (!(surface_friction >= 0.0)) throw std::invalid_argument("plant: surface_friction must be >= 0");
  if (!(sim_step > 0.0)) throw std::invalid_argument("plant: sim_step must be > 0");
  if (!(foot_half_length > 0.0) || !(foot_half_width > 0.0)) throw std::invalid_argument("plant: foot size must be > 0");
  if (!(nominal_height > 0.0) || !(max_leg_length > 0.0)) throw std::invalid_argument("plant: heights must be > 0");
  if (!(capture_dwell >= 0.0)) throw std::invalid_argument("plant: capture_dwell must be >= 0");
}

void Disturbance::validate() const {
  if (!force.allFinite()) throw std::invalid_argument("disturbance: non-finite force");
  if (!(end > start)) throw std::invalid_argument("disturbance: end must be after start");
}

Vec3 total_push(const std::vector<Disturbance>& pushes, double t) {
  Vec3 f = Vec3::Zero();
  for (const Disturbance& d : pushes) {
    if (d.active(t)) f += d.force;
  }
  return f;
}

ContactForces contact_forces(const PlantState& state, const ContactCommand& command,
                             const PlantParams& params) {
  ContactForces out;
  const Vec2 half(params.foot_half_length, params.foot_half_width);
  const Vec2 lo = state.stance_foot - half;
  const Vec2 hi = state.stance_foot + half;
  out.cop = command.cop.cwiseMax(lo).cwiseMin(hi);
  out.cop_saturated = (out.cop - command.cop).cwiseAbs().maxCoeff() > 0.0;

  const Vec2 lever = state.com.head<2>() - out.cop;
  const double height = state.com.z();
  const double leg_length = std::hypot(lever.norm(), height);
  double fz = std::clamp(command.normal_force, 0.0, params.max_normal_force);
  if (height <= 0.0 || leg_length > params.max_leg_length) fz = 0.0;

  out.demanded_tangential = height > 0.0 ? Vec2(fz * lever / height) : Vec2::Zero();
  const double demand = out.demanded_tangential.norm();
  const double limit = params.surface_friction * fz;
  Vec2 tangential = out.demanded_tangential;
  if (demand > limit) {
    tangential = demand > 0.0 ? Vec2(out.demanded_tangential * (limit / demand)) : Vec2::Zero();
    out.mode = ContactMode::slip;
  }
  out.applied = Vec3(tangential.x(), tangential.y(), fz);
  return out;
}

PlantState step(const PlantState& state, const ContactCommand& command,
                const PlantParams& params, const Vec3& push, ContactForces* forces) {
  const ContactForces f = contact_forces(state, command, params);
  const double dt = params.sim_step;
  const double m = params.plant_mass();

  PlantState next = state;
  Vec3 accel = (f.applied + push) / m;
  accel.z() -= params.gravity;
  next.com_velocity = state.com_velocity + dt * accel;
  next.com = state.com + dt * next.com_velocity;
  if (next.com.z() < 0.0) {
    next.com.z() = 0.0;
    next.com_velocity.z() = std::max(0.0, next.com_velocity.z());
  }
  next.mode = f.mode;
  if (f.mode == ContactMode::slip && f.applied.z() > 0.0) {
    // The foot is pushed away from the CoM at a rate set by the unmet demand.
    const double demand = f.demanded_tangential.norm();
    const double excess_ratio = (demand - params.surface_friction * f.applied.z()) / f.applied.z();
    const Vec2 away = -f.demanded_tangential / demand;
    const double distance = params.slip_speed_gain * excess_ratio * dt;
    next.stance_foot = state.stance_foot + distance * away;
    next.slip_distance = state.slip_distance + distance;
  }
  next.time = state.time + dt;
  if (forces != nullptr) *forces = f;
  return next;
}

}  // namespace gaittune
