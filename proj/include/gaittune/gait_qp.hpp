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

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaittune/lipm.hpp"
#include "gaittune/qp_solver.hpp"
#include "gaittune/swing.hpp"

namespace gaittune {

/// Cost weights of the gait QP: velocity tracking (alpha), ZMP centering
/// (beta) and friction demand (gamma), split per horizontal axis.
struct GaitWeights {
  double alpha_x = 1.0, alpha_y = 1.0;
  double beta_x = 0.0, beta_y = 0.0;
  double gamma_x = 0.0, gamma_y = 0.0;

  static GaitWeights uniform(double alpha, double beta, double gamma) {
    return {alpha, alpha, beta, beta, gamma, gamma};
  }
  void validate() const;
  std::array<double, 6> as_array() const {
    return {alpha_x, alpha_y, beta_x, beta_y, gamma_x, gamma_y};
  }
};

enum class Side { left, right };

inline Side opposite(Side s) { return s == Side::left ? Side::right : Side::left; }

struct GaitTask {
  /// Reference CoM velocity held constant over each step; one entry per step.
  std::vector<Vec2> desired_velocity;
  int n_steps = 10;
  double step_duration = 0.8;
  double foot_half_length = 0.1;
  double foot_half_width = 0.05;
  /// Displacement box from the previous footstep. The lateral range applies
  /// when the left foot is placed and is mirrored for the right foot.
  Vec2 step_min{-0.4, 0.1};
  Vec2 step_max{0.8, 0.4};
  double friction_limit = 0.4;
  Vec2 initial_stance{0.0, -0.1};
  Side initial_stance_side = Side::right;
  Vec2 initial_swing{0.0, 0.1};
  double swing_apex = 0.05;

  void validate() const;
  Vec2 velocity_for_step(int step) const;
};

/// Index layout of the decision vector [jerk_x(N) jerk_y(N) step_x(n) step_y(n)].
struct DecisionLayout {
  int samples = 0;
  int steps = 0;
  int jerk(int axis, int k) const { return axis * samples + k; }
  int step(int axis, int s) const { return 2 * samples + axis * steps + s; }
  int size() const { return 2 * samples + 2 * steps; }
};

struct GaitProblem {
  QpProblem qp;
  DecisionLayout layout;
  double cost_offset = 0.0;   // constant part of the objective
  std::vector<int> step_of_sample;  // stance index for samples 1..N (index k-1)
};

/// Constraint families, in the order used for QpProblem::group_names.
enum ConstraintFamily { kSupportPolygon = 0, kFrictionCone = 1, kReachableArea = 2 };

/// Row normals of the inscribed 8-face friction pyramid on (a_x, a_y); each
/// row reads n'a <= mu_max * g.
std::array<Vec2, 8> friction_pyramid_normals();

GaitProblem build_problem(const GaitTask& task, const GaitWeights& weights,
                          const ComState& initial, const LipmParams& params);

struct GaitPlan {
  double sample_period = 0.0;
  double step_duration = 0.0;
  std::vector<double> time;          // N+1 samples, t_0 = 0
  std::vector<ComState> com;         // N+1
  std::vector<Vec2> jerk;            // N
  std::vector<ZmpPoint> zmp;         // N+1
  std::vector<double> rcof;          // N+1
  std::vector<Vec2> reference_velocity;  // N+1
  std::vector<int> support;          // footstep index active at each sample
  std::vector<Vec2> footsteps;       // [0] initial stance, then n planned
  std::vector<Side> footstep_side;
  std::vector<SwingTrajectory> swings;  // one per step
  double foot_half_length = 0.0;
  double foot_half_width = 0.0;
  double com_height = 0.0;
  double qp_cost = 0.0;
  QpStatus status = QpStatus::optimal;
  KktResiduals residuals;
  int qp_iterations = 0;

  int samples() const { return static_cast<int>(jerk.size()); }
  double duration() const { return sample_period * samples(); }
  /// Exact CoM state at time t (clamped to the planned horizon).
  ComState state_at(double t) const;
  /// Footstep index in stance at time t (clamped to the planned horizon). The
  /// switch to footstep s happens at s * step_duration + sample_period / 2.
  int support_at(double t) const;
  double max_zmp_offset() const;     // max ||z - foot center||_inf over samples 1..N
  double max_rcof() const;           // over samples 1..N
  double mean_step_length() const;   // mean forward displacement of planned steps
};

class GaitInfeasible : public std::runtime_error {
 public:
  GaitInfeasible(const std::string& family, const std::string& what)
      : std::runtime_error(what), family_(family) {}
  const std::string& family() const { return family_; }

 private:
  std::string family_;
};

/// Solves the gait QP and rebuilds the CoM/ZMP/RCoF samples by propagating the
/// jerk solution. Throws GaitInfeasible when the solver does not return an
/// optimal point.
GaitPlan plan_gait(const GaitTask& task, const GaitWeights& weights,
                   const ComState& initial, const LipmParams& params,
                   const QpSettings& settings = {});

/// Largest violation per constraint family, recomputed from the plan samples.
struct PlanViolations {
  double support_polygon = 0.0;  // [m] beyond the foot box
  double friction = 0.0;         // RCoF above friction_limit
  double reachable = 0.0;        // [m] beyond the displacement box
  double max() const;
};

PlanViolations check_plan(const GaitPlan& plan, const GaitTask& task,
                          const LipmParams& params);

}  // namespace gaittune
