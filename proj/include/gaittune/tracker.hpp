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

#include <vector>

#include "gaittune/gait_qp.hpp"
#include "gaittune/ilqr.hpp"
#include "gaittune/plant.hpp"
#include "gaittune/simulation.hpp"

namespace gaittune {

/// Point mass driven directly by a 3-D force. State (c, v), control f.
struct PointMassModel {
  static constexpr int kStateDim = 6;
  static constexpr int kControlDim = 3;
  using T = LqTypes<6, 3>;

  double mass = 41.0;
  double gravity = 9.81;
  double dt = 0.01;

  T::State step(const T::State& x, const T::Control& u, int t) const;
  void linearize(const T::State& x, const T::Control& u, int t, T::StateMatrix& A,
                 T::ControlMatrix& B) const;
};

/// Point mass on a massless leg. Control (f_z, cop_x, cop_y): the leg force
/// points from the centre of pressure to the CoM with vertical part f_z.
struct LegCopModel {
  static constexpr int kStateDim = 6;
  static constexpr int kControlDim = 3;
  using T = LqTypes<6, 3>;

  double mass = 41.0;
  double gravity = 9.81;
  double dt = 0.01;

  Vec3 acceleration(const T::State& x, const T::Control& u) const;
  T::State step(const T::State& x, const T::Control& u, int t) const;
  void linearize(const T::State& x, const T::Control& u, int t, T::StateMatrix& A,
                 T::ControlMatrix& B) const;
};

double smooth_abs(double x, double eps);

struct TrackerWeights {
  double position = 400.0;  // smooth-abs on horizontal CoM position error
  double velocity = 10.0;   // horizontal and vertical CoM velocity error
  double cop = 1.0;         // CoP distance to the stance foot centre
  double effort = 0.1;      // (f_z - m g)^2 normalized by (m g)^2
  double height = 1000.0;   // CoM height error
  double terminal = 5.0;    // multiplier on the state terms at the final stage
  double smooth_eps = 0.01; // [m]

  void validate() const;
};

/// Stage cost of the tracker with references sampled from the plan.
struct TrackerCost {
  using T = LqTypes<6, 3>;
  TrackerWeights weights;
  double weight_force = 41.0 * 9.81;  // m g of the controller model
  std::vector<Vec3> com_ref;          // H+1
  std::vector<Vec3> velocity_ref;     // H+1
  std::vector<Vec2> foot_center;      // H

  double state_cost(const T::State& x, int t) const;
  double stage(const T::State& x, const T::Control& u, int t) const;
  double terminal(const T::State& x) const;
  void stage_expansion(const T::State& x, const T::Control& u, int t, T::State& lx,
                       T::Control& lu, T::StateMatrix& lxx, T::ControlHessian& luu,
                       T::Gain& lux) const;
  void terminal_expansion(const T::State& x, T::State& lx, T::StateMatrix& lxx) const;

 private:
  void state_expansion(const T::State& x, int t, double scale, T::State& lx,
                       T::StateMatrix& lxx) const;
};

struct TrackerConfig {
  double horizon = 0.4;          // [s]
  double control_period = 0.01;  // [s]
  double max_normal_force = 3.0 * 41.0 * 9.81;  // [N]
  int iterations_per_tick = 4;
  IlqrSettings ilqr;
  TrackerWeights weights;

  int stages() const;
  void validate() const;
};

/// Receding-horizon box-constrained iLQR. Each tick re-optimizes over the
/// horizon, warm-started from the previous solution shifted by one period.
class IlqrTracker : public TrackingController {
 public:
  using Solver = IlqrSolver<LegCopModel, TrackerCost>;
  using T = LqTypes<6, 3>;

  explicit IlqrTracker(TrackerConfig config = {});

  void reset(const GaitPlan& plan, const PlantParams& params) override;
  ContactCommand command(const PlantState& state, double time, bool& ok) override;
  double control_period() const override { return config_.control_period; }

  const TrackerConfig& config() const { return config_; }
  /// Cost at each tick's final iterate; diagnostics only.
  const std::vector<double>& cost_trace() const { return cost_trace_; }
  const std::vector<int>& iteration_trace() const { return iteration_trace_; }

  /// Control box for stage t of the horizon starting at `time`.
  void stage_bounds(const PlantState& state, double time, int t, T::Control& lower,
                    T::Control& upper) const;

 private:
  TrackerCost build_cost(const PlantState& state, double time) const;

  TrackerConfig config_;
  const GaitPlan* plan_ = nullptr;
  PlantParams plant_;
  LegCopModel model_;
  std::vector<T::Control> warm_;
  T::Control last_command_ = T::Control::Zero();
  std::vector<double> cost_trace_;
  std::vector<int> iteration_trace_;
};

}  // namespace gaittune
