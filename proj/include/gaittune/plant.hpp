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

#include <string>
#include <vector>

#include "gaittune/lipm.hpp"

namespace gaittune {

/// Point mass on a massless telescopic leg. The leg transmits a force along
/// the line from the centre of pressure to the CoM, so the tangential ground
/// force follows from the normal force and the CoP location.
struct PlantParams {
  double mass = 41.0;              // [kg] model mass used by the controller
  double gravity = 9.81;           // [m/s^2]
  double surface_friction = 0.4;   // mu_surface
  double foot_half_length = 0.1;   // [m] CoP box
  double foot_half_width = 0.05;   // [m]
  double sim_step = 1e-3;          // [s]
  double nominal_height = 0.8;     // [m]
  double max_leg_length = 1.0;     // [m] the leg cannot push beyond this
  double max_normal_force = 3.0 * 41.0 * 9.81;  // [N]
  double slip_speed_gain = 10.0;   // [m/s] foot slide speed per unit excess friction ratio
  // Mismatch knobs (plant vs. controller model).
  double mass_scale = 1.0;
  double height_offset = 0.0;      // [m] added to the initial CoM height
  // Fall detection.
  double fall_height_ratio = 0.6;
  double capture_dwell = 0.3;      // [s]

  double plant_mass() const { return mass * mass_scale; }
  void validate() const;
};

struct Disturbance {
  Vec3 force = Vec3::Zero();  // [N]
  double start = 0.0;         // [s]
  double end = 0.0;           // [s]

  bool active(double t) const { return t >= start && t < end; }
  void validate() const;
};

Vec3 total_push(const std::vector<Disturbance>& pushes, double t);

enum class ContactMode { stick, slip };

struct PlantState {
  Vec3 com = Vec3::Zero();
  Vec3 com_velocity = Vec3::Zero();
  Vec2 stance_foot = Vec2::Zero();
  int stance_index = 0;
  ContactMode mode = ContactMode::stick;
  double time = 0.0;
  double slip_distance = 0.0;  // cumulative foot slide [m]

  bool finite() const {
    return com.allFinite() && com_velocity.allFinite() && stance_foot.allFinite();
  }
};

/// Controller output held over one control period.
struct ContactCommand {
  double normal_force = 0.0;  // [N] vertical component of the leg force
  Vec2 cop = Vec2::Zero();    // [m] world frame
};

/// What the plant actually applied during the last step.
struct ContactForces {
  Vec3 applied = Vec3::Zero();          // ground reaction on the CoM
  Vec2 demanded_tangential = Vec2::Zero();
  Vec2 cop = Vec2::Zero();              // after clamping to the foot box
  bool cop_saturated = false;
  ContactMode mode = ContactMode::stick;
};

/// One semi-implicit Euler step of length params.sim_step.
PlantState step(const PlantState& state, const ContactCommand& command,
                const PlantParams& params, const Vec3& push,
                ContactForces* forces = nullptr);

/// Contact forces the plant would apply for `command` in `state`, without
/// integrating.
ContactForces contact_forces(const PlantState& state, const ContactCommand& command,
                             const PlantParams& params);

}  // namespace gaittune
