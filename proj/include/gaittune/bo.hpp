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
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gaittune/gp.hpp"

namespace gaittune {

enum class AcquisitionKind { lcb, expected_improvement, probability_of_improvement };

/// Acquisition for minimization; larger scores are more desirable queries.
struct Acquisition {
  AcquisitionKind kind = AcquisitionKind::lcb;
  double kappa = 2.0;  // lcb exploration weight
  double xi = 0.01;    // improvement margin for EI and PI

  static Acquisition lcb(double kappa = 2.0) { return {AcquisitionKind::lcb, kappa, 0.0}; }
  static Acquisition expected_improvement(double xi = 0.01) {
    return {AcquisitionKind::expected_improvement, 0.0, xi};
  }
  static Acquisition probability_of_improvement(double xi = 0.01) {
    return {AcquisitionKind::probability_of_improvement, 0.0, xi};
  }
  std::string name() const;
  void validate() const;
};

double normal_cdf(double z);
double normal_pdf(double z);

/// lcb: -mu + kappa sigma. EI: (y_best - mu - xi) Phi(z) + sigma phi(z).
/// PI: Phi(z). z = (y_best - mu - xi) / sigma; sigma = 0 uses the limits.
double acquisition_value(const Acquisition& acquisition, double mean, double stddev, double y_best);

/// Softmax portfolio over acquisitions with cumulative gains.
struct HedgeState {
  std::vector<double> gains;
  double eta = 1.0;

  explicit HedgeState(std::size_t count = 3, double eta = 1.0);
  std::vector<double> probabilities() const;
  std::size_t select(std::mt19937_64& rng) const;
  /// Adds the negated posterior mean at each acquisition's own candidate.
  void update(const std::vector<double>& posterior_means);
};

enum class Execution { serial, parallel };

/// Acquisition values at each row of `unit_points`.
std::vector<double> score_candidates(const GpModel& model, const Acquisition& acquisition, double y_best,
                                     const Eigen::MatrixXd& unit_points, Execution execution);

/// Shifted Halton points in the unit box, one per row. The shift depends on
/// the seed only.
Eigen::MatrixXd quasi_random_points(int count, int dimension, std::uint64_t seed);

struct SuggestConfig {
  int seeds = 512;
  int refined = 8;
  int evaluations_per_refinement = 60;
  double initial_step = 0.1;
  double shrink = 0.5;
  Execution execution = Execution::parallel;
};

struct Suggestion {
  Eigen::VectorXd unit;
  double value = 0.0;
};

/// Multi-start maximization: score quasi-random seeds, refine the best by
/// coordinate pattern search inside the unit box. Each row of `extra_starts`
/// is refined as well.
Suggestion maximize_acquisition(const GpModel& model, const Acquisition& acquisition, double y_best,
                                const SuggestConfig& config, std::uint64_t seed,
                                const Eigen::MatrixXd& extra_starts = {});

struct BoConfig {
  std::uint64_t seed = 0;
  std::optional<Eigen::VectorXd> initial_point;  // raw units
  int space_filling = 4;
  SeKernel kernel;
  double noise = 1e-6;  // on standardized observations
  std::vector<Acquisition> portfolio = {Acquisition::lcb(), Acquisition::expected_improvement(),
                                        Acquisition::probability_of_improvement()};
  double eta = 1.0;
  SuggestConfig suggest;
  double failure_penalty_factor = 10.0;
  double penalty_without_data = 1e6;
  bool fit_hyperparameters = false;

  void validate(int dimension) const;
};

struct BoIteration {
  int iteration = 0;
  Eigen::VectorXd input;
  double value = 0.0;
  double best = 0.0;
  std::string acquisition;
  bool failed = false;
};

struct BoRun {
  GpDataset dataset;
  Eigen::VectorXd best_input;
  double best_value = 0.0;
  int iterations = 0;
  int budget = 0;
  std::uint64_t seed = 0;
  std::vector<BoIteration> trace;

  explicit BoRun(InputBox box) : dataset(std::move(box)) {}
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Next query in raw units. Returns the initial point, then space-filling
/// points, then the maximizer of `acquisition` under the fitted GP.
Eigen::VectorXd suggest(const BoRun& run, const BoConfig& config, const Acquisition& acquisition,
                        std::string* source = nullptr);

/// Fits the GP on the run's dataset with the configured kernel and noise.
GpModel fit_model(const GpDataset& data, const BoConfig& config);

/// Suggest, evaluate, update until `budget` observations exist. A throwing
/// or non-finite objective is recorded as a penalized observation. Existing
/// observations in `resume` count towards the budget.
BoRun run_bo(const Objective& objective, const InputBox& bounds, int budget, const BoConfig& config,
             const GpDataset* resume = nullptr);

/// iteration, x0..x{d-1}, y, y_best, acquisition, failed
void write_trace_csv(std::ostream& os, const BoRun& run, const std::vector<std::string>& names = {});

}  // namespace gaittune
