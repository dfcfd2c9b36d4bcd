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

#include <iosfwd>
#include <string>
#include <vector>

#include "gaittune/gait_qp.hpp"
#include "gaittune/plant.hpp"

namespace gaittune {

/// Controller driven by simulate(): reset once per run, then queried at every
/// control tick with the measured plant state.
class TrackingController {
 public:
  virtual ~TrackingController() = default;
  virtual void reset(const GaitPlan& plan, const PlantParams& params) = 0;
  /// Returns the command to hold until the next tick. `ok` is cleared when the
  /// optimizer failed and the previous command was held instead.
  virtual ContactCommand command(const PlantState& state, double time, bool& ok) = 0;
  virtual double control_period() const = 0;
};

enum class FallCause { none, height, capturability, diverged };

std::string to_string(FallCause cause);

/// One row per control tick.
struct TraceSample {
  double time = 0.0;
  Vec3 com = Vec3::Zero();
  Vec3 com_velocity = Vec3::Zero();
  ContactCommand command;
  Vec3 applied_force = Vec3::Zero();
  Vec2 cop = Vec2::Zero();
  Vec2 stance_foot = Vec2::Zero();
  ContactMode mode = ContactMode::stick;
  bool saturated = false;        // CoP clamped, friction clamped or leg at full length
  bool controller_ok = true;
  bool fallen = false;
};

struct PlantTrace {
  std::vector<double> sample_time;   // plan sample times
  std::vector<Vec2> velocity;        // realized horizontal CoM velocity at those times
  std::vector<TraceSample> samples;
  bool fallen = false;
  FallCause cause = FallCause::none;
  double fall_time = -1.0;
  double final_height = 0.0;         // at the end, or where a fall crosses the height threshold
  int controller_failures = 0;
  int saturation_events = 0;
  double slip_distance = 0.0;

  bool diverged() const { return cause == FallCause::diverged; }
  /// Largest horizontal velocity deviation from the plan's CoM velocity.
  double max_velocity_error(const GaitPlan& plan) const;
};

/// Runs the controller against the plant over the plan horizon. Footsteps are
/// exchanged at the planned times and placed at the planned positions.
PlantTrace simulate(const GaitPlan& plan, TrackingController& controller,
                    const PlantParams& params, const std::vector<Disturbance>& pushes);

/// CSV with one row per control tick.
void write_trace_csv(std::ostream& os, const PlantTrace& trace);

}  // namespace gaittune
