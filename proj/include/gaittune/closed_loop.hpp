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

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gaittune/bo.hpp"
#include "gaittune/gait_qp.hpp"
#include "gaittune/plant.hpp"
#include "gaittune/simulation.hpp"
#include "gaittune/tracker.hpp"

namespace gaittune {

/// J = sum_k ||v_k - v_des_k||^2 + fall_weight * max(|h_N - h_des| - threshold, 0)
struct ObjectiveConfig {
  double desired_speed = 1.0;     // [m/s] forward speed of the walking phase
  double fall_weight = 1000.0;    // lambda
  double desired_height = 0.8;    // [m]
  double height_threshold = 0.05; // [m]

  void validate() const;
  double height_penalty(double final_height) const;
};

enum class ScenarioId { nominal, push, slip, push_and_slip, custom };
std::string to_string(ScenarioId id);
ScenarioId scenario_from_string(const std::string& name);

/// two: (beta, gamma) with alpha fixed. six: (alpha_x, alpha_y, beta_x,
/// beta_y, gamma_x, gamma_y).
enum class WeightMode { two, six };
int dimension(WeightMode mode);

struct ScenarioConfig {
  std::string name = "nominal";
  ScenarioId id = ScenarioId::nominal;
  std::vector<Disturbance> pushes;
  double surface_friction = 0.4;
  double mass_scale = 1.0;
  double height_offset = 0.0;
  WeightMode mode = WeightMode::two;
  double fixed_alpha = 1.0;
  Eigen::VectorXd lower = Eigen::Vector2d(0.0, 0.0);
  Eigen::VectorXd upper = Eigen::Vector2d(1000.0, 1000.0);
  Eigen::VectorXd initial = Eigen::Vector2d(1000.0, 1000.0);
  Eigen::VectorXd evaluate = Eigen::Vector2d(0.0, 0.0);  // single point for plan and simulate
  std::vector<std::vector<double>> sweep_axes;           // cartesian grid, one axis per weight
  int budget = 40;
  std::uint64_t seed = 0;
  ObjectiveConfig objective;

  void validate() const;
  GaitWeights weights(const Eigen::VectorXd& point) const;
  std::vector<std::string> weight_names() const;
  PlantParams plant() const;
  InputBox bounds() const { return {lower, upper}; }
  std::vector<Eigen::VectorXd> sweep_grid() const;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& message)
      : std::runtime_error("config key '" + key + "': " + message), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Parses the JSON scenario schema; unknown or malformed keys raise
/// ConfigError naming the key.
ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario(const std::string& path);
/// Canonical JSON of the resolved configuration.
std::string canonical_json(const ScenarioConfig& config);
/// FNV-1a of the canonical JSON, as 16 hex digits.
std::string config_hash(const ScenarioConfig& config);

/// Built-in scenarios; `name` is one of nominal, push, slip, push_and_slip,
/// lateral_push, low_friction.
ScenarioConfig builtin_scenario(const std::string& name, WeightMode mode = WeightMode::two);

/// Ten steps at rest, six at `speed` forward, two at rest.
GaitTask walking_task(double speed = 1.0);
LipmParams walking_lipm();
ComState walking_start(const GaitTask& task);

struct ObjectiveResult {
  double value = 0.0;  // NaN when the plan is infeasible or the controller diverged
  double tracking = 0.0;
  double fall_penalty = 0.0;
  bool fallen = false;
  FallCause cause = FallCause::none;
  bool infeasible = false;
  std::string infeasible_family;
  double final_height = 0.0;
  double max_velocity_error = 0.0;
  double max_zmp_offset = 0.0;
  double max_rcof = 0.0;
  double mean_step_length = 0.0;
};

/// Objective from a plant trace against the plan's reference velocity.
ObjectiveResult score_trace(const GaitPlan& plan, const PlantTrace& trace, const ObjectiveConfig& objective);

/// plan_gait, track with iLQR, simulate the disturbed plant, score.
ObjectiveResult evaluate_objective(const Eigen::VectorXd& point, const ScenarioConfig& scenario,
                                   const TrackerConfig& tracker = {});

struct SweepRow {
  Eigen::VectorXd point;
  ObjectiveResult result;
};

/// One independent evaluation per grid point.
std::vector<SweepRow> weight_sweep(const ScenarioConfig& scenario, const std::vector<Eigen::VectorXd>& grid,
                                   Execution execution = Execution::parallel);

struct ScenarioReport {
  ScenarioConfig scenario;
  BoRun run;
  std::vector<ObjectiveResult> evaluations;  // one per BO iteration
  Eigen::VectorXd best_point;
  GaitWeights best_weights;
  double best_value = 0.0;
  double seconds = 0.0;
};

BoConfig bo_config(const ScenarioConfig& scenario);
ScenarioReport run_scenario(const ScenarioConfig& scenario, const BoConfig& config);

/// Per-iteration CSV: BO trace plus evaluation details.
void write_tune_csv(std::ostream& os, const ScenarioReport& report);
void write_sweep_csv(std::ostream& os, const ScenarioConfig& scenario, const std::vector<SweepRow>& rows);
void write_plan_csv(std::ostream& os, const GaitPlan& plan);
/// JSON summary with the best weights and run settings.
void write_report_json(std::ostream& os, const ScenarioReport& report);

}  // namespace gaittune
