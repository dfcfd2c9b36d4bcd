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
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace gaittune {

/// k(x, x') = a exp(-||x - x'||^2 / (2 b)), optionally with one b per input
/// dimension.
struct SeKernel {
  double amplitude = 1.0;      // a
  double lengthscale_sq = 0.04;  // b
  std::vector<double> per_dimension;  // overrides b when non-empty

  double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  /// Sum of squared differences scaled by the per-dimension b (or b).
  double scaled_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  void validate() const;
};

double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const SeKernel& kernel);

class GpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
  double stddev() const;
};

struct JitterSchedule {
  double initial = 1e-10;  // relative to the kernel amplitude
  double maximum = 1e-4;
  double growth = 10.0;
};

/// GP conditioned on inputs X (one row per point) and targets y, both used
/// as given. Factorizes K + (noise + jitter) I once.
class GpModel {
 public:
  GpModel(Eigen::MatrixXd inputs, Eigen::VectorXd targets, SeKernel kernel, double noise,
          JitterSchedule jitter = {});

  int size() const { return static_cast<int>(targets_.size()); }
  int dimension() const { return static_cast<int>(inputs_.cols()); }
  double jitter() const { return jitter_; }
  const SeKernel& kernel() const { return kernel_; }

  GpPrediction predict(const Eigen::VectorXd& query) const;
  /// Predictions for each row of `queries`.
  std::vector<GpPrediction> predict_batch(const Eigen::MatrixXd& queries) const;
  /// Evidence log p(y | X) and, when `gradient` is given, its derivative
  /// with respect to (log a, log b, log sigma_n). Requires noise > 0 for the
  /// last component to be meaningful.
  double log_marginal_likelihood(Eigen::Vector3d* gradient = nullptr) const;

 private:
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  SeKernel kernel_;
  double noise_;
  double jitter_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
};

/// Maps raw inputs in [lower, upper] onto the unit box.
struct InputBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dimension() const { return static_cast<int>(lower.size()); }
  Eigen::VectorXd to_unit(const Eigen::VectorXd& raw) const;
  Eigen::VectorXd from_unit(const Eigen::VectorXd& unit) const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& raw) const;
  void validate() const;
};

/// Observations in raw units; the GP sees unit-box inputs and standardized
/// targets.
class GpDataset {
 public:
  explicit GpDataset(InputBox box);

  void add(const Eigen::VectorXd& raw_input, double value);
  int size() const { return static_cast<int>(values_.size()); }
  const InputBox& box() const { return box_; }
  const std::vector<Eigen::VectorXd>& raw_inputs() const { return raw_; }
  const std::vector<double>& values() const { return values_; }

  Eigen::MatrixXd unit_inputs() const;
  Eigen::VectorXd standardized_values() const;
  double mean() const;
  double scale() const;  // 1 when fewer than two distinct values
  double standardize(double value) const { return (value - mean()) / scale(); }
  double destandardize(double z) const { return mean() + scale() * z; }

  void write_csv(std::ostream& os) const;
  static GpDataset read_csv(std::istream& is, const InputBox& box);

 private:
  InputBox box_;
  std::vector<Eigen::VectorXd> raw_;
  std::vector<double> values_;
};

/// Posterior at a unit-box query; an empty dataset gives the prior.
GpPrediction posterior(const GpDataset& data, const SeKernel& kernel, double noise,
                       const Eigen::VectorXd& unit_query);

/// Evidence maximization over (log a, log b, log sigma_n) by gradient ascent
/// from several starts. Returns the best kernel and writes the noise.
SeKernel fit_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                             const SeKernel& start, double& noise, int restarts = 4);

}  // namespace gaittune
