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

#include "gaittune/bo.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

namespace gaittune {
namespace {

double branin(const Eigen::VectorXd& x) {
  const double pi = std::numbers::pi;
  const double b = 5.1 / (4 * pi * pi);
  const double c = 5 / pi;
  const double t = 1 / (8 * pi);
  const double u = x[1] - b * x[0] * x[0] + c * x[0] - 6;
  return u * u + 10 * (1 - t) * std::cos(x[0]) + 10;
}

// Minimum at (pi, 2.275): u = 0 there, so the value is 10 (1 - t) cos(pi) + 10.
double branin_minimum() { return 10.0 / (8 * std::numbers::pi); }

GpModel frozen_model(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = unit(rng);
    x(i, 1) = unit(rng);
    y[i] = std::sin(5 * x(i, 0)) + std::cos(4 * x(i, 1));
  }
  y.array() -= y.mean();
  return GpModel(x, y, SeKernel{}, 1e-6);
}

double grid_max(const GpModel& model, const Acquisition& acq, double y_best) {
  double best = -1e300;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) {
      const Eigen::Vector2d q(i / 49.0, j / 49.0);
      const GpPrediction p = model.predict(q);
      best = std::max(best, acquisition_value(acq, p.mean, p.stddev(), y_best));
    }
  return best;
}

TEST(Acquisition, NoImprovementAtKnownValue) {
  EXPECT_EQ(acquisition_value(Acquisition::expected_improvement(0.0), 1.5, 0.0, 1.5), 0.0);
}

TEST(Acquisition, LowerConfidenceBoundSubstitution) {
  EXPECT_DOUBLE_EQ(acquisition_value(Acquisition::lcb(2.0), 1.0, 0.5, 0.0), 0.0);
}

TEST(Acquisition, ProbabilityOfImprovementOneSigma) {
  EXPECT_NEAR(acquisition_value(Acquisition::probability_of_improvement(0.0), 0.7, 0.3, 1.0), 0.8413447460685429,
              1e-12);
}

TEST(Acquisition, ExpectedImprovementMatchesQuadrature) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double mu = 2 * unit(rng) - 1;
    const double sigma = 0.05 + unit(rng);
    const double y_best = 2 * unit(rng) - 1;
    const double xi = 0.05 * unit(rng);
    double integral = 0.0;
    const int steps = 200000;
    const double lo = mu - 10 * sigma;
    const double h = 20 * sigma / steps;
    for (int k = 0; k < steps; ++k) {
      const double y = lo + (k + 0.5) * h;
      const double density = std::exp(-0.5 * std::pow((y - mu) / sigma, 2)) / (sigma * std::sqrt(2 * std::numbers::pi));
      integral += std::max(y_best - xi - y, 0.0) * density * h;
    }
    EXPECT_NEAR(acquisition_value(Acquisition::expected_improvement(xi), mu, sigma, y_best), integral, 1e-6);
  }
}

TEST(Acquisition, ZeroSigmaLimits) {
  const auto pi = Acquisition::probability_of_improvement(0.0);
  EXPECT_EQ(acquisition_value(pi, 0.0, 0.0, 1.0), 1.0);
  EXPECT_EQ(acquisition_value(pi, 2.0, 0.0, 1.0), 0.0);
  EXPECT_EQ(acquisition_value(Acquisition::expected_improvement(0.0), 0.25, 0.0, 1.0), 0.75);
}

TEST(Acquisition, ValidationRejectsBadParameters) {
  EXPECT_THROW(Acquisition::lcb(0.0).validate(), std::invalid_argument);
  EXPECT_THROW(Acquisition::expected_improvement(-0.1).validate(), std::invalid_argument);
}

double chi_square_p_value_2dof(const std::vector<int>& counts, int draws) {
  double chi2 = 0.0;
  const double expected = draws / 3.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  return std::exp(-0.5 * chi2);
}

TEST(Hedge, EqualGainsSelectUniformly) {
  HedgeState hedge(3, 1.0);
  hedge.gains = {0.7, 0.7, 0.7};
  std::mt19937_64 rng(42);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 10000; ++i) ++counts[hedge.select(rng)];
  EXPECT_GT(chi_square_p_value_2dof(counts, 10000), 0.01);
}

TEST(Hedge, SaturatedGainDominates) {
  HedgeState hedge(3, 1.0);
  hedge.gains = {0.0, 50.0, 0.0};
  std::mt19937_64 rng(43);
  int chosen = 0;
  for (int i = 0; i < 10000; ++i) chosen += hedge.select(rng) == 1 ? 1 : 0;
  EXPECT_GE(chosen, 9990);
}

TEST(Hedge, ZeroTemperatureIsUniform) {
  HedgeState hedge(3, 0.0);
  hedge.gains = {-30.0, 5.0, 100.0};
  for (double p : hedge.probabilities()) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
  std::mt19937_64 rng(44);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 10000; ++i) ++counts[hedge.select(rng)];
  EXPECT_GT(chi_square_p_value_2dof(counts, 10000), 0.01);
}

TEST(Hedge, UpdateNegatesPosteriorMeans) {
  HedgeState hedge(3, 1.0);
  hedge.update({1.0, -2.0, 0.5});
  hedge.update({0.5, 0.0, 0.5});
  EXPECT_EQ(hedge.gains, (std::vector<double>{-1.5, 2.0, -1.0}));
  const std::vector<double> p = hedge.probabilities();
  EXPECT_NEAR(p[1] / p[0], std::exp(3.5), 1e-9);
}

TEST(QuasiRandom, InUnitBoxAndSeedDeterministic) {
  const Eigen::MatrixXd a = quasi_random_points(512, 6, 9);
  const Eigen::MatrixXd b = quasi_random_points(512, 6, 9);
  const Eigen::MatrixXd c = quasi_random_points(512, 6, 10);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_GE(a.minCoeff(), 0.0);
  EXPECT_LT(a.maxCoeff(), 1.0);
  for (int j = 0; j < 6; ++j) EXPECT_NEAR(a.col(j).mean(), 0.5, 0.02);
}

TEST(Parallel, CandidateScoresMatchSerialBitwise) {
  const GpModel model = frozen_model(25, 5);
  const Eigen::MatrixXd points = quasi_random_points(4096, 2, 1);
  for (const Acquisition& acq : {Acquisition::lcb(), Acquisition::expected_improvement(),
                                 Acquisition::probability_of_improvement()}) {
    const auto serial = score_candidates(model, acq, -0.5, points, Execution::serial);
    const auto parallel = score_candidates(model, acq, -0.5, points, Execution::parallel);
    ASSERT_EQ(serial.size(), parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) ASSERT_EQ(serial[i], parallel[i]);
  }
}

TEST(Parallel, MaximizationMatchesSerialBitwise) {
  const GpModel model = frozen_model(25, 6);
  SuggestConfig serial;
  serial.execution = Execution::serial;
  SuggestConfig parallel;
  parallel.execution = Execution::parallel;
  const Suggestion a = maximize_acquisition(model, Acquisition::expected_improvement(), -1.0, serial, 77);
  const Suggestion b = maximize_acquisition(model, Acquisition::expected_improvement(), -1.0, parallel, 77);
  EXPECT_EQ(a.unit, b.unit);
  EXPECT_EQ(a.value, b.value);
}

TEST(Suggest, InitialPointComesFirst) {
  BoRun run(InputBox{Eigen::Vector2d(0, 0), Eigen::Vector2d(1000, 1000)});
  BoConfig config;
  config.initial_point = Eigen::Vector2d(1000, 1000);
  std::string source;
  EXPECT_EQ(suggest(run, config, Acquisition::lcb(), &source), Eigen::Vector2d(1000, 1000));
  EXPECT_EQ(source, "initial");
  run.dataset.add(Eigen::Vector2d(1000, 1000), 3.0);
  const Eigen::VectorXd next = suggest(run, config, Acquisition::lcb(), &source);
  EXPECT_EQ(source, "space_filling");
  EXPECT_GT((next - Eigen::Vector2d(1000, 1000)).norm(), 250.0);
}

TEST(Suggest, LargeKappaExploresAwayFromData) {
  BoRun run(InputBox{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)});
  run.dataset.add(Eigen::Vector2d(0.4, 0.6), 1.0);
  BoConfig config;
  config.space_filling = 0;
  const Eigen::VectorXd next = suggest(run, config, Acquisition::lcb(50.0));
  EXPECT_GE((next - Eigen::Vector2d(0.4, 0.6)).norm(), 0.25);
  const GpModel model = fit_model(run.dataset, config);
  const GpPrediction p = model.predict(next);
  EXPECT_GE(acquisition_value(Acquisition::lcb(50.0), p.mean, p.stddev(), 0.0),
            grid_max(model, Acquisition::lcb(50.0), 0.0) - 1e-3);
}

TEST(Suggest, BeatsGridOracle) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const GpModel model = frozen_model(8, seed);
    const double y_best = -1.2;
    for (const Acquisition& acq : {Acquisition::lcb(), Acquisition::expected_improvement(),
                                   Acquisition::probability_of_improvement()}) {
      const Suggestion s = maximize_acquisition(model, acq, y_best, SuggestConfig{}, seed);
      EXPECT_GE(s.value, grid_max(model, acq, y_best) - 1e-3) << acq.name() << " seed " << seed;
      EXPECT_GE(s.unit.minCoeff(), 0.0);
      EXPECT_LE(s.unit.maxCoeff(), 1.0);
    }
  }
}

TEST(Suggest, VanishingKappaFindsPosteriorMeanMinimizer) {
  const GpModel model = frozen_model(12, 4);
  double grid_min = 1e300;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) grid_min = std::min(grid_min, model.predict(Eigen::Vector2d(i / 49.0, j / 49.0)).mean);
  const Suggestion s = maximize_acquisition(model, Acquisition::lcb(1e-9), 0.0, SuggestConfig{}, 4);
  EXPECT_LE(model.predict(s.unit).mean, grid_min + 1e-3);
}

TEST(Run, QuadraticOneDimension) {
  BoConfig config;
  config.seed = 1;
  const BoRun run = run_bo([](const Eigen::VectorXd& x) { return std::pow(x[0] - 0.3, 2); },
                           InputBox{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)}, 30, config);
  EXPECT_EQ(run.dataset.size(), 30);
  EXPECT_LE(std::abs(run.best_input[0] - 0.3), 0.02);
}

TEST(Run, BraninReachesKnownMinimum) {
  BoConfig config;
  config.seed = 2;
  const BoRun run = run_bo(branin, InputBox{Eigen::Vector2d(-5, 0), Eigen::Vector2d(10, 15)}, 60, config);
  EXPECT_NEAR(branin_minimum(), 0.397887, 1e-6);
  EXPECT_LE(run.best_value - branin_minimum(), 1e-2) << "best " << run.best_value;
}

TEST(Run, ConstantObjective) {
  BoConfig config;
  const BoRun run = run_bo([](const Eigen::VectorXd&) { return 4.25; },
                           InputBox{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)}, 12, config);
  for (const BoIteration& it : run.trace) EXPECT_EQ(it.best, 4.25);
}

TEST(Run, BookkeepingAndBounds) {
  BoConfig config;
  config.seed = 5;
  config.initial_point = Eigen::Vector2d(10, 15);
  const InputBox box{Eigen::Vector2d(-5, 0), Eigen::Vector2d(10, 15)};
  const BoRun run = run_bo(branin, box, 25, config);
  EXPECT_EQ(run.trace.front().input, Eigen::Vector2d(10, 15));
  EXPECT_EQ(run.trace.front().acquisition, "initial");
  for (int i = 1; i <= 4; ++i) EXPECT_EQ(run.trace[static_cast<std::size_t>(i)].acquisition, "space_filling");
  double running = 1e300;
  for (std::size_t i = 0; i < run.trace.size(); ++i) {
    const BoIteration& it = run.trace[i];
    EXPECT_EQ(it.iteration, static_cast<int>(i) + 1);
    running = std::min(running, it.value);
    EXPECT_EQ(it.best, running);
    EXPECT_TRUE((it.input.array() >= box.lower.array()).all());
    EXPECT_TRUE((it.input.array() <= box.upper.array()).all());
  }
  EXPECT_EQ(run.best_value, running);
}

TEST(Run, DeterministicUnderSeed) {
  BoConfig config;
  config.seed = 9;
  const InputBox box{Eigen::Vector2d(-5, 0), Eigen::Vector2d(10, 15)};
  std::stringstream a, b, c;
  write_trace_csv(a, run_bo(branin, box, 15, config));
  write_trace_csv(b, run_bo(branin, box, 15, config));
  config.suggest.execution = Execution::serial;
  write_trace_csv(c, run_bo(branin, box, 15, config));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str(), c.str());
}

TEST(Run, FailedEvaluationsArePenalized) {
  BoConfig config;
  int calls = 0;
  const BoRun run = run_bo(
      [&](const Eigen::VectorXd& x) {
        ++calls;
        if (calls == 3) throw std::runtime_error("simulator crashed");
        if (calls == 4) return std::nan("");
        return 1.0 + x[0];
      },
      InputBox{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)}, 8, config);
  ASSERT_TRUE(run.trace[2].failed);
  ASSERT_TRUE(run.trace[3].failed);
  const double worst = std::max(run.trace[0].value, run.trace[1].value);
  EXPECT_DOUBLE_EQ(run.trace[2].value, 10 * worst);
  EXPECT_DOUBLE_EQ(run.trace[3].value, 10 * worst);
  EXPECT_EQ(run.dataset.size(), 8);
}

TEST(Run, ResumesFromSavedDataset) {
  BoConfig config;
  config.seed = 3;
  const InputBox box{Eigen::Vector2d(-5, 0), Eigen::Vector2d(10, 15)};
  const BoRun first = run_bo(branin, box, 10, config);
  std::stringstream saved;
  first.dataset.write_csv(saved);
  const GpDataset loaded = GpDataset::read_csv(saved, box);
  const BoRun resumed = run_bo(branin, box, 20, config, &loaded);
  EXPECT_EQ(resumed.dataset.size(), 20);
  EXPECT_EQ(resumed.trace.size(), 10u);
  EXPECT_EQ(resumed.trace.front().iteration, 11);
  EXPECT_LE(resumed.best_value, first.best_value);
}

TEST(Run, TraceCsvLayout) {
  BoConfig config;
  const BoRun run = run_bo([](const Eigen::VectorXd& x) { return x.sum(); },
                           InputBox{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)}, 3, config);
  std::stringstream ss;
  write_trace_csv(ss, run, {"beta", "gamma"});
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "iteration,beta,gamma,y,y_best,acquisition,failed");
  int rows = 0;
  for (std::string line; std::getline(ss, line);) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(Run, RejectsZeroBudget) {
  EXPECT_THROW(run_bo([](const Eigen::VectorXd&) { return 0.0; },
                      InputBox{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)}, 0, BoConfig{}),
               std::invalid_argument);
}

}  // namespace
}  // namespace gaittune
