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

#include "gaittune/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace gaittune {

std::string to_string(FallCause cause) {
  switch (cause) {
    case FallCause::none: return "none";
    case FallCause::height: return "height";
    case FallCause::capturability: return "capturability";
    case FallCause::diverged: return "diverged";
  }
  return "unknown";
}

double PlantTrace::max_velocity_error(const GaitPlan& plan) const {
  double worst = 0.0;
  for (std::size_t k = 0; k < velocity.size() && k < plan.com.size(); ++k) {
    worst = std::max(worst, (velocity[k] - plan.com[k].velocity).norm());
  }
  return worst;
}

namespace {

// Height at which a body that can no longer be captured crosses the fall
// threshold once the leg stops supporting it.
double collapse_height(PlantState state, const PlantParams& params, double fall_height) {
  const ContactCommand unloaded;
  const int limit = static_cast<int>(std::ceil(5.0 / params.sim_step));
  for (int i = 0; i < limit && state.com.z() >= fall_height; ++i) {
    state = step(state, unloaded, params, Vec3::Zero());
  }
  return state.com.z();
}

}  // namespace

PlantTrace simulate(const GaitPlan& plan, TrackingController& controller,
                    const PlantParams& params, const std::vector<Disturbance>& pushes) {
  params.validate();
  for (const Disturbance& d : pushes) d.validate();
  if (plan.samples() <= 0) throw std::invalid_argument("simulate: empty plan");

  const double period = controller.control_period();
  const int substeps = static_cast<int>(std::lround(period / params.sim_step));
  if (substeps < 1 || std::abs(substeps * params.sim_step - period) > 1e-9 * period) {
    throw std::invalid_argument("simulate: control period must be a multiple of sim_step");
  }
  const int per_sample = static_cast<int>(std::lround(plan.sample_period / period));
  if (per_sample < 1 || std::abs(per_sample * period - plan.sample_period) > 1e-9 * period) {
    throw std::invalid_argument("simulate: plan sample period must be a multiple of the control period");
  }
  const int ticks = plan.samples() * per_sample;

  PlantState state;
  state.com << plan.com[0].position, params.nominal_height + params.height_offset;
  state.com_velocity << plan.com[0].velocity, 0.0;
  state.stance_index = 0;
  state.stance_foot = plan.footsteps[0];

  controller.reset(plan, params);

  PlantTrace trace;
  trace.samples.reserve(static_cast<std::size_t>(ticks) + 1);
  const double fall_height = params.fall_height_ratio * params.nominal_height;
  const double half_diagonal = std::hypot(params.foot_half_length, params.foot_half_width);
  const double time_constant = std::sqrt(params.nominal_height / params.gravity);
  double outside_since = -1.0;
  ContactCommand cmd;

  auto record_velocity = [&](double t) {
    trace.sample_time.push_back(t);
    trace.velocity.push_back(state.com_velocity.head<2>());
  };
  auto fall = [&](FallCause cause) {
    trace.fallen = cause != FallCause::diverged;
    trace.cause = cause;
    trace.fall_time = state.time;
    trace.final_height = state.com.z();
  };

  for (int tick = 0; tick < ticks; ++tick) {
    const double t = tick * period;
    state.time = t;
    if (tick % per_sample == 0) record_velocity(t);

    const int stance = plan.support_at(t);
    if (stance != state.stance_index) {
      state.stance_index = stance;
      state.stance_foot = plan.footsteps[static_cast<std::size_t>(stance)];
      state.mode = ContactMode::stick;
    }

    bool ok = true;
    const ContactCommand next = controller.command(state, t, ok);
    if (ok) {
      cmd = next;
    } else {
      ++trace.controller_failures;
    }

    TraceSample row;
    row.time = t;
    row.com = state.com;
    row.com_velocity = state.com_velocity;
    row.command = cmd;
    row.controller_ok = ok;

    ContactForces forces;
    bool saturated = false;
    for (int s = 0; s < substeps; ++s) {
      const Vec3 push = total_push(pushes, t + s * params.sim_step);
      state = step(state, cmd, params, push, &forces);
      const bool leg_limit = cmd.normal_force > 0.0 && forces.applied.z() == 0.0;
      saturated = saturated || forces.cop_saturated || forces.mode == ContactMode::slip || leg_limit;
    }
    state.time = t + period;
    row.applied_force = forces.applied;
    row.cop = forces.cop;
    row.stance_foot = state.stance_foot;
    row.mode = forces.mode;
    row.saturated = saturated;
    if (saturated) ++trace.saturation_events;

    if (!state.finite()) {
      row.fallen = true;
      trace.samples.push_back(row);
      fall(FallCause::diverged);
      break;
    }

    bool fallen = false;
    if (state.com.z() < fall_height) {
      fall(FallCause::height);
      fallen = true;
    } else {
      const double offset = (state.com.head<2>() - forces.cop).norm();
      const double radius = time_constant * state.com_velocity.head<2>().norm() + half_diagonal;
      if (offset > radius) {
        if (outside_since < 0.0) outside_since = t;
        if (state.time - outside_since >= params.capture_dwell - 1e-9) {
          fall(FallCause::capturability);
          fallen = true;
          trace.final_height = collapse_height(state, params, fall_height);
        }
      } else {
        outside_since = -1.0;
      }
    }
    row.fallen = fallen;
    trace.samples.push_back(row);
    if (fallen) break;
  }

  if (trace.cause == FallCause::none) {
    record_velocity(state.time);
    trace.final_height = state.com.z();
  }
  // Hold the last realized velocity over the samples after a fall.
  const std::size_t total = static_cast<std::size_t>(plan.samples()) + 1;
  while (trace.velocity.size() < total) {
    const Vec2 held = state.finite() ? Vec2(state.com_velocity.head<2>())
                      : (trace.velocity.empty() ? Vec2::Zero() : trace.velocity.back());
    trace.sample_time.push_back(static_cast<double>(trace.velocity.size()) * plan.sample_period);
    trace.velocity.push_back(held);
  }
  trace.slip_distance = state.slip_distance;
  return trace;
}

void write_trace_csv(std::ostream& os, const PlantTrace& trace) {
  os << std::setprecision(10);
  os << "t,com_x,com_y,com_z,vel_x,vel_y,vel_z,cmd_fz,cmd_cop_x,cmd_cop_y,"
        "force_x,force_y,force_z,cop_x,cop_y,foot_x,foot_y,mode,saturated,controller_ok,fallen\n";
  for (const TraceSample& s : trace.samples) {
    os << s.time << ',' << s.com.x() << ',' << s.com.y() << ',' << s.com.z() << ','
       << s.com_velocity.x() << ',' << s.com_velocity.y() << ',' << s.com_velocity.z() << ','
       << s.command.normal_force << ',' << s.command.cop.x() << ',' << s.command.cop.y() << ','
       << s.applied_force.x() << ',' << s.applied_force.y() << ',' << s.applied_force.z() << ','
       << s.cop.x() << ',' << s.cop.y() << ',' << s.stance_foot.x() << ',' << s.stance_foot.y() << ','
       << (s.mode == ContactMode::slip ? "slip" : "stick") << ',' << (s.saturated ? 1 : 0) << ','
       << (s.controller_ok ? 1 : 0) << ',' << (s.fallen ? 1 : 0) << '\n';
  }
}

}  // namespace gaittune
