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

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "gaittune/closed_loop.hpp"

namespace fs = std::filesystem;
using namespace gaittune;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::string grid;
  std::string resume;
  std::vector<std::string> inputs;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int budget = 0;
  bool verbose = false;
};

void fail(const std::string& kind, const std::string& message, const std::string& key = "") {
  nlohmann::json j{{"error", kind}, {"message", message}};
  if (!key.empty()) j["key"] = key;
  std::cerr << j.dump() << "\n";
}

ScenarioConfig load(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config", "a scenario config file is required");
  ScenarioConfig c = load_scenario(o.config);
  if (o.seed_set) c.seed = o.seed;
  if (o.budget > 0) c.budget = o.budget;
  c.validate();
  return c;
}

fs::path output_file(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  return fs::path(o.out) / name;
}

std::ofstream open_csv(const Options& o, const std::string& name, const std::string& command, const ScenarioConfig& c) {
  const fs::path path = output_file(o, name);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "# gaittune " << command << " config_hash=" << config_hash(c) << " seed=" << c.seed << "\n";
  return f;
}

GaitPlan plan_for(const ScenarioConfig& c) {
  const GaitTask task = walking_task(c.objective.desired_speed);
  return plan_gait(task, c.weights(c.evaluate), walking_start(task), walking_lipm());
}

int run_plan(const Options& o) {
  const ScenarioConfig c = load(o);
  const GaitPlan plan = plan_for(c);
  std::ofstream f = open_csv(o, "plan.csv", "plan", c);
  write_plan_csv(f, plan);
  if (o.verbose)
    std::cerr << "plan: cost " << plan.qp_cost << ", max ZMP offset " << plan.max_zmp_offset() << ", max RCoF "
              << plan.max_rcof() << "\n";
  return 0;
}

int run_simulate(const Options& o) {
  const ScenarioConfig c = load(o);
  const GaitPlan plan = plan_for(c);
  IlqrTracker tracker;
  const PlantTrace trace = simulate(plan, tracker, c.plant(), c.pushes);
  const ObjectiveResult r = score_trace(plan, trace, c.objective);
  std::ofstream f = open_csv(o, "trace.csv", "simulate", c);
  write_trace_csv(f, trace);
  std::ofstream summary(output_file(o, "simulate.json"));
  nlohmann::json j{{"config_hash", config_hash(c)},
                   {"seed", c.seed},
                   {"J", r.value},
                   {"tracking", r.tracking},
                   {"fall_penalty", r.fall_penalty},
                   {"fallen", r.fallen},
                   {"cause", to_string(r.cause)},
                   {"fall_time", trace.fall_time},
                   {"final_height", r.final_height},
                   {"max_velocity_error", r.max_velocity_error},
                   {"slip_distance", trace.slip_distance},
                   {"controller_failures", trace.controller_failures}};
  summary << j.dump(2) << "\n";
  if (o.verbose) std::cerr << "simulate: J " << r.value << (r.fallen ? " (fell)" : "") << "\n";
  return 0;
}

std::vector<std::vector<double>> parse_grid(const std::string& spec, const ScenarioConfig& c) {
  std::vector<std::vector<double>> axes;
  const std::vector<std::string> names = c.weight_names();
  std::stringstream ss(spec);
  std::string axis;
  while (std::getline(ss, axis, ';')) {
    const std::size_t eq = axis.find('=');
    if (eq != std::string::npos) {
      const std::string name = axis.substr(0, eq);
      if (axes.size() >= names.size() || names[axes.size()] != name)
        throw ConfigError("--grid", "axis '" + name + "' out of order; expected " + (axes.size() < names.size() ? names[axes.size()] : "no more axes"));
      axis = axis.substr(eq + 1);
    }
    std::vector<double> values;
    std::stringstream vs(axis);
    std::string v;
    while (std::getline(vs, v, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(v, &used));
        if (used != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw ConfigError("--grid", "'" + v + "' is not a number");
      }
    }
    axes.push_back(values);
  }
  return axes;
}

int run_sweep(const Options& o) {
  ScenarioConfig c = load(o);
  if (!o.grid.empty()) c.sweep_axes = parse_grid(o.grid, c);
  if (c.sweep_axes.empty()) throw ConfigError("sweep", "no grid given in the config or with --grid");
  c.validate();
  const std::vector<SweepRow> rows = weight_sweep(c, c.sweep_grid());
  std::ofstream f = open_csv(o, "sweep.csv", "sweep", c);
  write_sweep_csv(f, c, rows);
  if (o.verbose) std::cerr << "sweep: " << rows.size() << " points\n";
  return 0;
}

int run_tune(const Options& o) {
  const ScenarioConfig c = load(o);
  const BoConfig bo = bo_config(c);
  std::vector<ObjectiveResult> evaluations;
  std::optional<GpDataset> resume;
  if (!o.resume.empty()) {
    std::ifstream in(o.resume);
    if (!in) throw std::runtime_error("cannot read " + o.resume);
    resume = GpDataset::read_csv(in, c.bounds());
  }
  ScenarioReport report{c, BoRun(c.bounds()), {}, {}, {}, 0.0, 0.0};
  const auto start = std::chrono::steady_clock::now();
  report.run = run_bo(
      [&](const Eigen::VectorXd& p) {
        evaluations.push_back(evaluate_objective(p, c));
        if (o.verbose)
          std::cerr << "tune: iteration " << (resume ? resume->size() : 0) + static_cast<int>(evaluations.size())
                    << " J " << evaluations.back().value << "\n";
        return evaluations.back().value;
      },
      c.bounds(), c.budget, bo, resume ? &*resume : nullptr);
  report.evaluations = std::move(evaluations);
  report.best_point = report.run.best_input;
  report.best_weights = c.weights(report.best_point);
  report.best_value = report.run.best_value;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  {
    std::ofstream f = open_csv(o, "tune_trace.csv", "tune", c);
    write_tune_csv(f, report);
  }
  {
    std::ofstream f(output_file(o, "dataset.csv"));
    report.run.dataset.write_csv(f);
  }
  std::ofstream manifest(output_file(o, "report.json"));
  write_report_json(manifest, report);
  return 0;
}

struct CsvTable {
  std::string comment;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

CsvTable read_table(const fs::path& path) {
  std::ifstream in(path);
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comment = line;
    } else if (t.header.empty()) {
      t.header = split(line);
    } else {
      t.rows.push_back(split(line));
    }
  }
  return t;
}

int run_report(const Options& o) {
  std::vector<fs::path> inputs;
  for (const std::string& i : o.inputs) inputs.emplace_back(i);
  if (inputs.empty()) inputs.push_back(fs::path(o.out) / "tune_trace.csv");
  std::vector<std::string> missing;
  for (const fs::path& p : inputs)
    if (!fs::exists(p)) missing.push_back(p.string());
  if (!missing.empty()) {
    nlohmann::json j{{"error", "missing_inputs"}, {"missing", missing}};
    std::cerr << j.dump() << "\n";
    return 3;
  }
  for (const fs::path& p : inputs) {
    const CsvTable t = read_table(p);
    const int iteration = t.column("iteration");
    const int value = t.column("J");
    const int acquisition = t.column("acquisition");
    if (iteration < 0 || value < 0 || acquisition < 0)
      throw std::runtime_error(p.string() + " is not a tune trace (needs iteration, J and acquisition columns)");
    std::string stem = p.parent_path().filename().string();
    if (stem.empty() || stem == ".") stem = p.stem().string();
    fs::create_directories(o.out);
    std::ofstream f(fs::path(o.out) / (stem + "_series.csv"));
    f.precision(12);
    if (!t.comment.empty()) f << t.comment << " source=" << p.filename().string() << "\n";
    f << "iteration";
    for (int c = iteration + 1; c < value; ++c) f << "," << t.header[static_cast<std::size_t>(c)];
    f << ",J,min_J_so_far,acquisition\n";
    double best = std::numeric_limits<double>::infinity();
    for (const auto& row : t.rows) {
      const double v = std::stod(row[static_cast<std::size_t>(value)]);
      best = std::min(best, v);
      f << row[static_cast<std::size_t>(iteration)];
      for (int c = iteration + 1; c < value; ++c) f << "," << row[static_cast<std::size_t>(c)];
      f << "," << v << "," << best << "," << row[static_cast<std::size_t>(acquisition)] << "\n";
    }
    if (o.verbose) std::cerr << "report: " << p << " -> " << stem << "_series.csv\n";
  }
  return 0;
}

void set_workers() {
  if (const char* w = std::getenv("GAITTUNE_WORKERS")) {
    const int n = std::atoi(w);
    if (n > 0) omp_set_num_threads(n);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gait QP weight tuning: plan, simulate, sweep, tune and report"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub, bool needs_config) {
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_flag("-v,--verbose", o.verbose, "Progress on stderr");
    if (needs_config) {
      sub->add_option("--config", o.config, "Scenario config (JSON)")->required();
      sub->add_option_function<std::uint64_t>(
          "--seed", [&](const std::uint64_t& s) { o.seed = s, o.seed_set = true; }, "Override the config seed");
    }
  };
  CLI::App* plan = app.add_subcommand("plan", "Solve the gait QP at the config's evaluate weights");
  common(plan, true);
  CLI::App* sim = app.add_subcommand("simulate", "Track the plan on the disturbed plant");
  common(sim, true);
  CLI::App* sweep = app.add_subcommand("sweep", "Evaluate the objective over a weight grid");
  common(sweep, true);
  sweep->add_option("--grid", o.grid, "Axes separated by ';', values by ',' (e.g. \"beta=0,70;gamma=0,30\")");
  CLI::App* tune = app.add_subcommand("tune", "Bayesian optimization of the weights");
  common(tune, true);
  tune->add_option("--budget", o.budget, "Override the config budget")->check(CLI::PositiveNumber);
  tune->add_option("--resume", o.resume, "Dataset CSV from an earlier tune run");
  CLI::App* report = app.add_subcommand("report", "Plot-ready series from tune traces");
  common(report, false);
  report->add_option("--input", o.inputs, "tune_trace.csv files (default: <out>/tune_trace.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  set_workers();
  try {
    if (*plan) return run_plan(o);
    if (*sim) return run_simulate(o);
    if (*sweep) return run_sweep(o);
    if (*tune) return run_tune(o);
    if (*report) return run_report(o);
  } catch (const ConfigError& e) {
    fail("config", e.what(), e.key());
    return 2;
  } catch (const GaitInfeasible& e) {
    fail("infeasible", e.what(), e.family());
    return 4;
  } catch (const std::exception& e) {
    fail("runtime", e.what());
    return 1;
  }
  return 1;
}
