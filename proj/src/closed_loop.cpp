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

#include "gaittune/closed_loop.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace gaittune {

using nlohmann::json;

namespace {

constexpr double kPushScale = 0.5;

void check_finite_vector(const Eigen::VectorXd& v, int size, const std::string& key) {
  if (v.size() != size) throw ConfigError(key, "expected " + std::to_string(size) + " numbers");
  if (!v.allFinite()) throw ConfigError(key, "values must be finite");
}

}  // namespace

void ObjectiveConfig::validate() const {
  if (!(desired_speed >= 0.0) || !std::isfinite(desired_speed))
    throw ConfigError("objective.desired_speed", "must be finite and non-negative");
  if (!(fall_weight >= 0.0) || !std::isfinite(fall_weight))
    throw ConfigError("objective.fall_weight", "must be finite and non-negative");
  if (!(desired_height > 0.0) || !std::isfinite(desired_height))
    throw ConfigError("objective.desired_height", "must be positive");
  if (!(height_threshold >= 0.0) || !std::isfinite(height_threshold))
    throw ConfigError("objective.height_threshold", "must be non-negative");
}

double ObjectiveConfig::height_penalty(double final_height) const {
  return std::max(std::abs(final_height - desired_height) - height_threshold, 0.0);
}

std::string to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::nominal:
      return "nominal";
    case ScenarioId::push:
      return "push";
    case ScenarioId::slip:
      return "slip";
    case ScenarioId::push_and_slip:
      return "push_and_slip";
    case ScenarioId::custom:
      return "custom";
  }
  return "custom";
}

ScenarioId scenario_from_string(const std::string& name) {
  for (ScenarioId id : {ScenarioId::nominal, ScenarioId::push, ScenarioId::slip, ScenarioId::push_and_slip,
                        ScenarioId::custom})
    if (to_string(id) == name) return id;
  throw ConfigError("scenario", "unknown scenario '" + name + "'");
}

int dimension(WeightMode mode) { return mode == WeightMode::two ? 2 : 6; }

void ScenarioConfig::validate() const {
  const int d = dimension(mode);
  check_finite_vector(lower, d, "weights.lower");
  check_finite_vector(upper, d, "weights.upper");
  check_finite_vector(initial, d, "weights.initial");
  check_finite_vector(evaluate, d, "weights.evaluate");
  for (int i = 0; i < d; ++i) {
    if (!(upper[i] > lower[i])) throw ConfigError("weights.upper", "each upper bound must exceed its lower bound");
    if (lower[i] < 0.0) throw ConfigError("weights.lower", "weights must be non-negative");
    if (initial[i] < lower[i] || initial[i] > upper[i]) throw ConfigError("weights.initial", "outside the bounds");
  }
  if (mode == WeightMode::six && (lower[0] <= 0.0 || lower[1] <= 0.0))
    throw ConfigError("weights.lower", "velocity weights must be positive");
  if (mode == WeightMode::two && !(fixed_alpha > 0.0)) throw ConfigError("weights.fixed_alpha", "must be positive");
  for (const Disturbance& d : pushes) {
    if (!d.force.allFinite() || !(d.end > d.start) || !(d.start >= 0.0))
      throw ConfigError("pushes", "each push needs 0 <= t_start < t_end and finite forces");
  }
  if (!(surface_friction > 0.0) || !std::isfinite(surface_friction))
    throw ConfigError("surface_friction", "must be positive");
  if (!(mass_scale > 0.0) || !std::isfinite(mass_scale)) throw ConfigError("mismatch.mass_scale", "must be positive");
  if (!std::isfinite(height_offset)) throw ConfigError("mismatch.height_offset", "must be finite");
  if (budget < 1) throw ConfigError("budget", "must be at least 1");
  if (!sweep_axes.empty() && static_cast<int>(sweep_axes.size()) != d)
    throw ConfigError("sweep", "expected one axis per weight");
  for (const auto& axis : sweep_axes)
    if (axis.empty()) throw ConfigError("sweep", "axes must be non-empty");
  objective.validate();
}

GaitWeights ScenarioConfig::weights(const Eigen::VectorXd& p) const {
  if (mode == WeightMode::two) return GaitWeights::uniform(fixed_alpha, p[0], p[1]);
  return {p[0], p[1], p[2], p[3], p[4], p[5]};
}

std::vector<std::string> ScenarioConfig::weight_names() const {
  if (mode == WeightMode::two) return {"beta", "gamma"};
  return {"alpha_x", "alpha_y", "beta_x", "beta_y", "gamma_x", "gamma_y"};
}

PlantParams ScenarioConfig::plant() const {
  PlantParams p;
  p.surface_friction = surface_friction;
  p.mass_scale = mass_scale;
  p.height_offset = height_offset;
  return p;
}

std::vector<Eigen::VectorXd> ScenarioConfig::sweep_grid() const {
  std::vector<Eigen::VectorXd> grid;
  if (sweep_axes.empty()) return grid;
  const int d = static_cast<int>(sweep_axes.size());
  std::vector<std::size_t> index(static_cast<std::size_t>(d), 0);
  while (true) {
    Eigen::VectorXd p(d);
    for (int j = 0; j < d; ++j) p[j] = sweep_axes[static_cast<std::size_t>(j)][index[static_cast<std::size_t>(j)]];
    grid.push_back(p);
    int j = d - 1;
    while (j >= 0 && ++index[static_cast<std::size_t>(j)] == sweep_axes[static_cast<std::size_t>(j)].size()) {
      index[static_cast<std::size_t>(j)] = 0;
      --j;
    }
    if (j < 0) break;
  }
  return grid;
}

namespace {

void set_mode_defaults(ScenarioConfig& c, WeightMode mode) {
  c.mode = mode;
  if (mode == WeightMode::two) {
    c.lower = Eigen::Vector2d(0, 0);
    c.upper = Eigen::Vector2d(1000, 1000);
    c.initial = Eigen::Vector2d(1000, 1000);
    c.evaluate = Eigen::Vector2d(0, 0);
    c.budget = 40;
  } else {
    c.lower.resize(6);
    c.lower << 1, 1, 0, 0, 0, 0;
    c.upper.resize(6);
    c.upper << 100, 100, 1000, 1000, 1000, 1000;
    c.initial.resize(6);
    c.initial << 1, 1, 1000, 1000, 1000, 1000;
    c.evaluate = c.lower;
    c.budget = 75;
  }
  c.sweep_axes.clear();
}

std::vector<Disturbance> two_direction_pushes() {
  return {{Vec3(50.0, 75.0, 0.0) * kPushScale, 3.25, 3.45}, {Vec3(-75.0, -65.0, 0.0) * kPushScale, 6.45, 6.65}};
}

}  // namespace

ScenarioConfig builtin_scenario(const std::string& name, WeightMode mode) {
  ScenarioConfig c;
  set_mode_defaults(c, mode);
  c.name = name;
  if (name == "nominal") {
    c.id = ScenarioId::nominal;
  } else if (name == "push") {
    c.id = ScenarioId::push;
    c.pushes = two_direction_pushes();
  } else if (name == "slip") {
    c.id = ScenarioId::slip;
    c.surface_friction = 0.1;
  } else if (name == "push_and_slip") {
    c.id = ScenarioId::push_and_slip;
    c.pushes = two_direction_pushes();
    c.surface_friction = 0.15;
  } else if (name == "lateral_push") {
    c.id = ScenarioId::custom;
    c.pushes = {{Vec3(0.0, 60.0, 0.0) * kPushScale, 4.85, 5.05}};
  } else if (name == "low_friction") {
    c.id = ScenarioId::custom;
    c.surface_friction = 0.15;
  } else {
    throw ConfigError("scenario", "unknown built-in scenario '" + name + "'");
  }
  return c;
}

namespace {

void reject_unknown(const json& object, const std::string& prefix, std::initializer_list<const char*> allowed) {
  for (auto it = object.begin(); it != object.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(prefix + it.key(), "unknown key");
  }
}

double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError(key, "expected a number");
  return j.get<double>();
}

Eigen::VectorXd get_vector(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError(key, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = get_number(j[i], key);
  return v;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("<document>", "expected a JSON object");
  reject_unknown(root, "", {"name", "scenario", "pushes", "surface_friction", "mismatch", "weights", "sweep", "budget",
                            "seed", "objective"});
  WeightMode mode = WeightMode::two;
  if (root.contains("weights")) {
    const json& w = root["weights"];
    if (!w.is_object()) throw ConfigError("weights", "expected an object");
    if (w.contains("mode")) {
      if (!w["mode"].is_string()) throw ConfigError("weights.mode", "expected \"two\" or \"six\"");
      const std::string m = w["mode"].get<std::string>();
      if (m == "six") {
        mode = WeightMode::six;
      } else if (m != "two") {
        throw ConfigError("weights.mode", "expected \"two\" or \"six\"");
      }
    }
  }
  std::string scenario = "nominal";
  if (root.contains("scenario")) {
    if (!root["scenario"].is_string()) throw ConfigError("scenario", "expected a string");
    scenario = root["scenario"].get<std::string>();
  }
  const ScenarioId id = scenario_from_string(scenario);
  ScenarioConfig c = builtin_scenario(id == ScenarioId::custom ? "nominal" : scenario, mode);
  c.id = id;
  c.name = scenario;
  if (root.contains("name")) {
    if (!root["name"].is_string()) throw ConfigError("name", "expected a string");
    c.name = root["name"].get<std::string>();
  }
  if (root.contains("pushes")) {
    const json& p = root["pushes"];
    if (!p.is_array()) throw ConfigError("pushes", "expected an array of [t_start, t_end, fx, fy, fz]");
    c.pushes.clear();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string key = "pushes[" + std::to_string(i) + "]";
      const Eigen::VectorXd v = get_vector(p[i], key);
      if (v.size() != 5) throw ConfigError(key, "expected [t_start, t_end, fx, fy, fz]");
      c.pushes.push_back({Vec3(v[2], v[3], v[4]), v[0], v[1]});
    }
  }
  if (root.contains("surface_friction")) c.surface_friction = get_number(root["surface_friction"], "surface_friction");
  if (root.contains("mismatch")) {
    const json& m = root["mismatch"];
    if (!m.is_object()) throw ConfigError("mismatch", "expected an object");
    reject_unknown(m, "mismatch.", {"mass_scale", "height_offset"});
    if (m.contains("mass_scale")) c.mass_scale = get_number(m["mass_scale"], "mismatch.mass_scale");
    if (m.contains("height_offset")) c.height_offset = get_number(m["height_offset"], "mismatch.height_offset");
  }
  if (root.contains("weights")) {
    const json& w = root["weights"];
    reject_unknown(w, "weights.", {"mode", "fixed_alpha", "lower", "upper", "initial", "evaluate"});
    if (w.contains("fixed_alpha")) c.fixed_alpha = get_number(w["fixed_alpha"], "weights.fixed_alpha");
    if (w.contains("lower")) c.lower = get_vector(w["lower"], "weights.lower");
    if (w.contains("upper")) c.upper = get_vector(w["upper"], "weights.upper");
    if (w.contains("initial")) c.initial = get_vector(w["initial"], "weights.initial");
    if (w.contains("evaluate")) c.evaluate = get_vector(w["evaluate"], "weights.evaluate");
  }
  if (root.contains("sweep")) {
    const json& s = root["sweep"];
    if (!s.is_array()) throw ConfigError("sweep", "expected one array of values per weight");
    c.sweep_axes.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Eigen::VectorXd v = get_vector(s[i], "sweep[" + std::to_string(i) + "]");
      c.sweep_axes.emplace_back(v.data(), v.data() + v.size());
    }
  }
  if (root.contains("budget")) {
    if (!root["budget"].is_number_integer()) throw ConfigError("budget", "expected an integer");
    c.budget = root["budget"].get<int>();
  }
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    c.seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("objective")) {
    const json& o = root["objective"];
    if (!o.is_object()) throw ConfigError("objective", "expected an object");
    reject_unknown(o, "objective.", {"desired_speed", "fall_weight", "desired_height", "height_threshold"});
    if (o.contains("desired_speed")) c.objective.desired_speed = get_number(o["desired_speed"], "objective.desired_speed");
    if (o.contains("fall_weight")) c.objective.fall_weight = get_number(o["fall_weight"], "objective.fall_weight");
    if (o.contains("desired_height"))
      c.objective.desired_height = get_number(o["desired_height"], "objective.desired_height");
    if (o.contains("height_threshold"))
      c.objective.height_threshold = get_number(o["height_threshold"], "objective.height_threshold");
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string canonical_json(const ScenarioConfig& c) {
  json root;
  root["name"] = c.name;
  root["scenario"] = to_string(c.id);
  json pushes = json::array();
  for (const Disturbance& d : c.pushes) pushes.push_back({d.start, d.end, d.force.x(), d.force.y(), d.force.z()});
  root["pushes"] = pushes;
  root["surface_friction"] = c.surface_friction;
  root["mismatch"] = {{"mass_scale", c.mass_scale}, {"height_offset", c.height_offset}};
  root["weights"] = {{"mode", c.mode == WeightMode::two ? "two" : "six"},
                     {"fixed_alpha", c.fixed_alpha},
                     {"lower", vector_json(c.lower)},
                     {"upper", vector_json(c.upper)},
                     {"initial", vector_json(c.initial)},
                     {"evaluate", vector_json(c.evaluate)}};
  root["sweep"] = c.sweep_axes;
  root["budget"] = c.budget;
  root["seed"] = c.seed;
  root["objective"] = {{"desired_speed", c.objective.desired_speed},
                       {"fall_weight", c.objective.fall_weight},
                       {"desired_height", c.objective.desired_height},
                       {"height_threshold", c.objective.height_threshold}};
  return root.dump(2);
}

std::string config_hash(const ScenarioConfig& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : canonical_json(config)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

GaitTask walking_task(double speed) {
  GaitTask task;
  task.n_steps = 10;
  task.step_min.y() = 0.15;
  for (int s = 0; s < task.n_steps; ++s) task.desired_velocity.push_back(Vec2(s >= 2 && s < 8 ? speed : 0.0, 0.0));
  return task;
}

LipmParams walking_lipm() {
  LipmParams p;
  p.sample_period = 0.1;
  return p;
}

ComState walking_start(const GaitTask& task) {
  ComState s;
  s.position = task.initial_stance;
  return s;
}

ObjectiveResult score_trace(const GaitPlan& plan, const PlantTrace& trace, const ObjectiveConfig& objective) {
  ObjectiveResult r;
  for (std::size_t k = 0; k < trace.velocity.size() && k < plan.reference_velocity.size(); ++k)
    r.tracking += (trace.velocity[k] - plan.reference_velocity[k]).squaredNorm();
  r.final_height = trace.final_height;
  r.fall_penalty = objective.fall_weight * objective.height_penalty(trace.final_height);
  r.fallen = trace.fallen;
  r.cause = trace.cause;
  r.max_velocity_error = trace.max_velocity_error(plan);
  r.max_zmp_offset = plan.max_zmp_offset();
  r.max_rcof = plan.max_rcof();
  r.mean_step_length = plan.mean_step_length();
  r.value = trace.diverged() ? std::numeric_limits<double>::quiet_NaN() : r.tracking + r.fall_penalty;
  return r;
}

ObjectiveResult evaluate_objective(const Eigen::VectorXd& point, const ScenarioConfig& scenario,
                                   const TrackerConfig& tracker_config) {
  const GaitTask task = walking_task(scenario.objective.desired_speed);
  GaitPlan plan;
  try {
    plan = plan_gait(task, scenario.weights(point), walking_start(task), walking_lipm());
  } catch (const GaitInfeasible& e) {
    ObjectiveResult r;
    r.infeasible = true;
    r.infeasible_family = e.family();
    r.value = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  IlqrTracker tracker(tracker_config);
  const PlantTrace trace = simulate(plan, tracker, scenario.plant(), scenario.pushes);
  return score_trace(plan, trace, scenario.objective);
}

std::vector<SweepRow> weight_sweep(const ScenarioConfig& scenario, const std::vector<Eigen::VectorXd>& grid,
                                   Execution execution) {
  if (grid.empty()) throw ConfigError("sweep", "grid must be non-empty");
  std::vector<SweepRow> rows(grid.size());
  const int n = static_cast<int>(grid.size());
  auto run = [&](int i) {
    const std::size_t k = static_cast<std::size_t>(i);
    rows[k].point = grid[k];
    rows[k].result = evaluate_objective(grid[k], scenario);
  };
  if (execution == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) run(i);
  } else {
    for (int i = 0; i < n; ++i) run(i);
  }
  return rows;
}

BoConfig bo_config(const ScenarioConfig& scenario) {
  BoConfig config;
  config.seed = scenario.seed;
  config.initial_point = scenario.initial;
  return config;
}

ScenarioReport run_scenario(const ScenarioConfig& scenario, const BoConfig& config) {
  scenario.validate();
  const auto start = std::chrono::steady_clock::now();
  std::vector<ObjectiveResult> evaluations;
  BoRun run = run_bo(
      [&](const Eigen::VectorXd& point) {
        evaluations.push_back(evaluate_objective(point, scenario));
        return evaluations.back().value;
      },
      scenario.bounds(), scenario.budget, config);
  ScenarioReport report{scenario, std::move(run), std::move(evaluations), {}, {}, 0.0, 0.0};
  report.best_point = report.run.best_input;
  report.best_weights = scenario.weights(report.best_point);
  report.best_value = report.run.best_value;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

namespace {

void write_result_columns(std::ostream& os, const ObjectiveResult& r) {
  os << r.tracking << "," << r.fall_penalty << "," << (r.fallen ? 1 : 0) << "," << to_string(r.cause) << ","
     << (r.infeasible ? r.infeasible_family : "") << "," << r.final_height << "," << r.max_velocity_error << ","
     << r.max_zmp_offset << "," << r.max_rcof << "," << r.mean_step_length;
}

constexpr const char* kResultHeader =
    "tracking,fall_penalty,fallen,cause,infeasible,final_height,max_velocity_error,max_zmp_offset,max_rcof,"
    "mean_step_length";

}  // namespace

void write_tune_csv(std::ostream& os, const ScenarioReport& report) {
  const auto old_precision = os.precision(12);
  os << "iteration";
  for (const std::string& n : report.scenario.weight_names()) os << "," << n;
  os << ",J,J_best,acquisition,failed," << kResultHeader << "\n";
  for (std::size_t i = 0; i < report.run.trace.size(); ++i) {
    const BoIteration& it = report.run.trace[i];
    os << it.iteration;
    for (Eigen::Index j = 0; j < it.input.size(); ++j) os << "," << it.input[j];
    os << "," << it.value << "," << it.best << "," << it.acquisition << "," << (it.failed ? 1 : 0) << ",";
    write_result_columns(os, report.evaluations[i]);
    os << "\n";
  }
  os.precision(old_precision);
}

void write_sweep_csv(std::ostream& os, const ScenarioConfig& scenario, const std::vector<SweepRow>& rows) {
  const auto old_precision = os.precision(12);
  bool first = true;
  for (const std::string& n : scenario.weight_names()) {
    os << (first ? "" : ",") << n;
    first = false;
  }
  os << ",J," << kResultHeader << "\n";
  for (const SweepRow& row : rows) {
    for (Eigen::Index j = 0; j < row.point.size(); ++j) os << (j ? "," : "") << row.point[j];
    os << "," << row.result.value << ",";
    write_result_columns(os, row.result);
    os << "\n";
  }
  os.precision(old_precision);
}

void write_plan_csv(std::ostream& os, const GaitPlan& plan) {
  const auto old_precision = os.precision(12);
  os << "t,com_x,com_y,vel_x,vel_y,acc_x,acc_y,zmp_x,zmp_y,foot_x,foot_y,support,rcof,ref_vel_x,ref_vel_y\n";
  for (std::size_t k = 0; k < plan.time.size(); ++k) {
    const ComState& c = plan.com[k];
    const Vec2& f = plan.footsteps[static_cast<std::size_t>(plan.support[k])];
    os << plan.time[k] << "," << c.position.x() << "," << c.position.y() << "," << c.velocity.x() << ","
       << c.velocity.y() << "," << c.acceleration.x() << "," << c.acceleration.y() << "," << plan.zmp[k].x() << ","
       << plan.zmp[k].y() << "," << f.x() << "," << f.y() << "," << plan.support[k] << "," << plan.rcof[k] << ","
       << plan.reference_velocity[k].x() << "," << plan.reference_velocity[k].y() << "\n";
  }
  os.precision(old_precision);
}

void write_report_json(std::ostream& os, const ScenarioReport& report) {
  json root;
  root["scenario"] = json::parse(canonical_json(report.scenario));
  root["config_hash"] = config_hash(report.scenario);
  root["best_point"] = vector_json(report.best_point);
  const auto w = report.best_weights.as_array();
  root["best_weights"] = {{"alpha_x", w[0]}, {"alpha_y", w[1]}, {"beta_x", w[2]},
                          {"beta_y", w[3]},  {"gamma_x", w[4]}, {"gamma_y", w[5]}};
  root["best_value"] = report.best_value;
  root["iterations"] = report.run.iterations;
  int falls = 0;
  int failures = 0;
  for (const ObjectiveResult& r : report.evaluations) falls += r.fallen ? 1 : 0;
  for (const BoIteration& it : report.run.trace) failures += it.failed ? 1 : 0;
  root["falls"] = falls;
  root["failed_evaluations"] = failures;
  root["wall_clock_seconds"] = report.seconds;
  os << root.dump(2) << "\n";
}

}  // namespace gaittune
