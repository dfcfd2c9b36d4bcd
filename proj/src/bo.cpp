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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace gaittune {

std::string Acquisition::name() const {
  switch (kind) {
    case AcquisitionKind::lcb:
      return "lcb";
    case AcquisitionKind::expected_improvement:
      return "ei";
    case AcquisitionKind::probability_of_improvement:
      return "pi";
  }
  return "unknown";
}

void Acquisition::validate() const {
  if (kind == AcquisitionKind::lcb && !(kappa > 0.0)) throw std::invalid_argument("lcb kappa must be positive");
  if (!(xi >= 0.0)) throw std::invalid_argument("improvement margin must be non-negative");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double acquisition_value(const Acquisition& acquisition, double mean, double stddev, double y_best) {
  const double sigma = std::max(stddev, 0.0);
  if (acquisition.kind == AcquisitionKind::lcb) return -mean + acquisition.kappa * sigma;
  const double improvement = y_best - mean - acquisition.xi;
  if (sigma <= 0.0) {
    if (acquisition.kind == AcquisitionKind::expected_improvement) return std::max(improvement, 0.0);
    return improvement > 0.0 ? 1.0 : 0.0;
  }
  const double z = improvement / sigma;
  if (acquisition.kind == AcquisitionKind::expected_improvement)
    return improvement * normal_cdf(z) + sigma * normal_pdf(z);
  return normal_cdf(z);
}

HedgeState::HedgeState(std::size_t count, double eta_value) : gains(count, 0.0), eta(eta_value) {
  if (count == 0) throw std::invalid_argument("hedge needs at least one acquisition");
  if (!(eta >= 0.0)) throw std::invalid_argument("hedge temperature must be non-negative");
}

std::vector<double> HedgeState::probabilities() const {
  const double top = eta * *std::max_element(gains.begin(), gains.end());
  std::vector<double> p(gains.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    p[i] = std::exp(eta * gains[i] - top);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::size_t HedgeState::select(std::mt19937_64& rng) const {
  const std::vector<double> p = probabilities();
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cumulative += p[i];
    if (u < cumulative) return i;
  }
  return p.size() - 1;
}

void HedgeState::update(const std::vector<double>& posterior_means) {
  if (posterior_means.size() != gains.size()) throw std::invalid_argument("one mean per acquisition required");
  for (std::size_t i = 0; i < gains.size(); ++i) gains[i] -= posterior_means[i];
}

std::vector<double> score_candidates(const GpModel& model, const Acquisition& acquisition, double y_best,
                                     const Eigen::MatrixXd& unit_points, Execution execution) {
  const int n = static_cast<int>(unit_points.rows());
  std::vector<double> out(static_cast<std::size_t>(n));
  auto score = [&](int i) {
    const GpPrediction p = model.predict(unit_points.row(i).transpose());
    out[static_cast<std::size_t>(i)] = acquisition_value(acquisition, p.mean, p.stddev(), y_best);
  };
  if (execution == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) score(i);
  } else {
    for (int i = 0; i < n; ++i) score(i);
  }
  return out;
}

namespace {

double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
    f /= base;
  }
  return result;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

Suggestion pattern_search(const GpModel& model, const Acquisition& acquisition, double y_best,
                          const SuggestConfig& config, Eigen::VectorXd u, double value) {
  auto score = [&](const Eigen::VectorXd& x) {
    const GpPrediction p = model.predict(x);
    return acquisition_value(acquisition, p.mean, p.stddev(), y_best);
  };
  double step = config.initial_step;
  int evaluations = 0;
  while (evaluations < config.evaluations_per_refinement && step > 1e-9) {
    bool improved = false;
    for (Eigen::Index i = 0; i < u.size() && evaluations < config.evaluations_per_refinement; ++i) {
      for (double sign : {1.0, -1.0}) {
        if (evaluations >= config.evaluations_per_refinement) break;
        Eigen::VectorXd trial = u;
        trial[i] = std::clamp(trial[i] + sign * step, 0.0, 1.0);
        if (trial[i] == u[i]) continue;
        const double v = score(trial);
        ++evaluations;
        if (v > value) {
          u = trial;
          value = v;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= config.shrink;
  }
  return {u, value};
}

double failure_penalty(const BoRun& run, const BoConfig& config, int resumed) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < run.dataset.size(); ++i) {
    const bool failed = i >= resumed && run.trace[static_cast<std::size_t>(i - resumed)].failed;
    if (!failed) worst = std::max(worst, run.dataset.values()[static_cast<std::size_t>(i)]);
  }
  if (!std::isfinite(worst)) return config.penalty_without_data;
  return worst > 0.0 ? config.failure_penalty_factor * worst : worst + config.failure_penalty_factor;
}

Eigen::VectorXd space_filling_point(const BoRun& run, const BoConfig& config) {
  const int d = run.dataset.box().dimension();
  const Eigen::MatrixXd candidates = quasi_random_points(config.suggest.seeds, d, mix_seed(config.seed, 0x5f11));
  const Eigen::MatrixXd existing = run.dataset.unit_inputs();
  Eigen::Index best = 0;
  double best_distance = -1.0;
  for (Eigen::Index c = 0; c < candidates.rows(); ++c) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Eigen::Index e = 0; e < existing.rows(); ++e)
      nearest = std::min(nearest, (candidates.row(c) - existing.row(e)).squaredNorm());
    if (nearest > best_distance) {
      best_distance = nearest;
      best = c;
    }
  }
  return run.dataset.box().clamp(run.dataset.box().from_unit(candidates.row(best).transpose()));
}

Eigen::VectorXd model_suggestion(const BoRun& run, const BoConfig& config, const GpModel& model,
                                 const Acquisition& acquisition, std::size_t slot) {
  const std::uint64_t seed = mix_seed(config.seed, (static_cast<std::uint64_t>(run.dataset.size()) << 8) | slot);
  const Eigen::VectorXd z = run.dataset.standardized_values();
  Eigen::Index incumbent = 0;
  z.minCoeff(&incumbent);
  const Eigen::MatrixXd starts = run.dataset.unit_inputs().row(incumbent);
  const Suggestion s = maximize_acquisition(model, acquisition, z[incumbent], config.suggest, seed, starts);
  return run.dataset.box().clamp(run.dataset.box().from_unit(s.unit));
}

int initialization_count(const BoConfig& config) {
  return (config.initial_point ? 1 : 0) + config.space_filling;
}

}  // namespace

Eigen::MatrixXd quasi_random_points(int count, int dimension, std::uint64_t seed) {
  if (dimension < 1 || dimension > static_cast<int>(std::size(kPrimes)))
    throw std::invalid_argument("quasi-random points support 1 to 16 dimensions");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd shift(dimension);
  for (int j = 0; j < dimension; ++j) shift[j] = unit(rng);
  Eigen::MatrixXd out(count, dimension);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < dimension; ++j) {
      const double v = radical_inverse(static_cast<std::uint64_t>(i + 1), kPrimes[j]) + shift[j];
      out(i, j) = v - std::floor(v);
    }
  return out;
}

Suggestion maximize_acquisition(const GpModel& model, const Acquisition& acquisition, double y_best,
                                const SuggestConfig& config, std::uint64_t seed,
                                const Eigen::MatrixXd& extra_starts) {
  const Eigen::MatrixXd seeds = quasi_random_points(config.seeds, model.dimension(), seed);
  const std::vector<double> scores = score_candidates(model, acquisition, y_best, seeds, config.execution);
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  const int top = std::min<int>(config.refined, static_cast<int>(order.size()));
  const int refined = top + static_cast<int>(extra_starts.rows());
  std::vector<Suggestion> results(static_cast<std::size_t>(refined));
  auto refine = [&](int r) {
    if (r < top) {
      const int idx = order[static_cast<std::size_t>(r)];
      results[static_cast<std::size_t>(r)] = pattern_search(model, acquisition, y_best, config, seeds.row(idx).transpose(),
                                                            scores[static_cast<std::size_t>(idx)]);
    } else {
      const Eigen::VectorXd start = extra_starts.row(r - top).transpose().cwiseMax(0.0).cwiseMin(1.0);
      const GpPrediction p = model.predict(start);
      results[static_cast<std::size_t>(r)] = pattern_search(model, acquisition, y_best, config, start,
                                                            acquisition_value(acquisition, p.mean, p.stddev(), y_best));
    }
  };
  if (config.execution == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < refined; ++r) refine(r);
  } else {
    for (int r = 0; r < refined; ++r) refine(r);
  }
  Suggestion best = results.front();
  for (const Suggestion& s : results)
    if (s.value > best.value) best = s;
  return best;
}

void BoConfig::validate(int dimension) const {
  kernel.validate();
  if (!(noise >= 0.0)) throw std::invalid_argument("noise must be non-negative");
  if (space_filling < 0) throw std::invalid_argument("space_filling must be non-negative");
  if (portfolio.empty()) throw std::invalid_argument("portfolio must contain an acquisition");
  for (const Acquisition& a : portfolio) a.validate();
  if (!(eta >= 0.0)) throw std::invalid_argument("hedge temperature must be non-negative");
  if (initial_point && initial_point->size() != dimension)
    throw std::invalid_argument("initial point dimension does not match the bounds");
  if (suggest.seeds < 1 || suggest.refined < 1 || suggest.evaluations_per_refinement < 0 ||
      !(suggest.shrink > 0.0 && suggest.shrink < 1.0) || !(suggest.initial_step > 0.0))
    throw std::invalid_argument("invalid acquisition search settings");
}

GpModel fit_model(const GpDataset& data, const BoConfig& config) {
  const Eigen::MatrixXd x = data.unit_inputs();
  const Eigen::VectorXd y = data.standardized_values();
  if (!config.fit_hyperparameters || data.size() < 2) return GpModel(x, y, config.kernel, config.noise);
  double noise = config.noise;
  const SeKernel kernel = fit_hyperparameters(x, y, config.kernel, noise);
  return GpModel(x, y, kernel, noise);
}

Eigen::VectorXd suggest(const BoRun& run, const BoConfig& config, const Acquisition& acquisition,
                        std::string* source) {
  const int n = run.dataset.size();
  if (n == 0 && config.initial_point) {
    if (source) *source = "initial";
    return run.dataset.box().clamp(*config.initial_point);
  }
  if (n < initialization_count(config) || n == 0) {
    if (source) *source = "space_filling";
    return space_filling_point(run, config);
  }
  if (source) *source = acquisition.name();
  return model_suggestion(run, config, fit_model(run.dataset, config), acquisition, 0);
}

BoRun run_bo(const Objective& objective, const InputBox& bounds, int budget, const BoConfig& config,
             const GpDataset* resume) {
  if (budget < 1) throw std::invalid_argument("budget must be at least 1");
  bounds.validate();
  config.validate(bounds.dimension());
  BoRun run(bounds);
  run.budget = budget;
  run.seed = config.seed;
  int resumed = 0;
  if (resume) {
    if (resume->box().dimension() != bounds.dimension())
      throw std::invalid_argument("resumed dataset dimension does not match the bounds");
    for (int i = 0; i < resume->size(); ++i)
      run.dataset.add(resume->raw_inputs()[static_cast<std::size_t>(i)], resume->values()[static_cast<std::size_t>(i)]);
    resumed = run.dataset.size();
    for (int i = 0; i < resumed; ++i) {
      const double v = run.dataset.values()[static_cast<std::size_t>(i)];
      if (i == 0 || v < run.best_value) {
        run.best_value = v;
        run.best_input = run.dataset.raw_inputs()[static_cast<std::size_t>(i)];
      }
    }
  }
  std::mt19937_64 rng(config.seed);
  HedgeState hedge(config.portfolio.size(), config.eta);
  while (run.dataset.size() < budget) {
    BoIteration it;
    it.iteration = run.dataset.size() + 1;
    std::vector<Eigen::VectorXd> candidates;
    if (run.dataset.size() < initialization_count(config) || run.dataset.size() == 0) {
      it.input = suggest(run, config, config.portfolio.front(), &it.acquisition);
    } else {
      const GpModel model = fit_model(run.dataset, config);
      for (std::size_t i = 0; i < config.portfolio.size(); ++i)
        candidates.push_back(model_suggestion(run, config, model, config.portfolio[i], i));
      const std::size_t chosen = hedge.select(rng);
      it.input = candidates[chosen];
      it.acquisition = config.portfolio[chosen].name();
    }
    double value = std::numeric_limits<double>::quiet_NaN();
    try {
      value = objective(it.input);
    } catch (const std::exception&) {
      value = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(value)) {
      it.failed = true;
      value = failure_penalty(run, config, resumed);
    }
    it.value = value;
    run.dataset.add(it.input, value);
    if (run.dataset.size() == 1 || value < run.best_value) {
      run.best_value = value;
      run.best_input = it.input;
    }
    it.best = run.best_value;
    if (!candidates.empty()) {
      const GpModel updated = fit_model(run.dataset, config);
      std::vector<double> means;
      for (const Eigen::VectorXd& c : candidates) means.push_back(updated.predict(run.dataset.box().to_unit(c)).mean);
      hedge.update(means);
    }
    run.trace.push_back(std::move(it));
    ++run.iterations;
  }
  return run;
}

void write_trace_csv(std::ostream& os, const BoRun& run, const std::vector<std::string>& names) {
  const auto old_precision = os.precision(12);
  const int d = run.dataset.box().dimension();
  os << "iteration";
  for (int j = 0; j < d; ++j)
    os << "," << (static_cast<int>(names.size()) == d ? names[static_cast<std::size_t>(j)] : "x" + std::to_string(j));
  os << ",y,y_best,acquisition,failed\n";
  for (const BoIteration& it : run.trace) {
    os << it.iteration;
    for (int j = 0; j < d; ++j) os << "," << it.input[j];
    os << "," << it.value << "," << it.best << "," << it.acquisition << "," << (it.failed ? 1 : 0) << "\n";
  }
  os.precision(old_precision);
}

}  // namespace gaittune
