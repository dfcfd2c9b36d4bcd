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

#include "gaittune/gp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace gaittune {

double SeKernel::scaled_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    const double b = per_dimension.empty() ? lengthscale_sq : per_dimension[static_cast<std::size_t>(i)];
    sum += d * d / b;
  }
  return sum;
}

double SeKernel::operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  return amplitude * std::exp(-0.5 * scaled_distance(x, y));
}

void SeKernel::validate() const {
  if (!(amplitude > 0.0) || !std::isfinite(amplitude)) throw GpError("kernel amplitude must be positive");
  if (!(lengthscale_sq > 0.0) || !std::isfinite(lengthscale_sq))
    throw GpError("kernel lengthscale must be positive");
  for (double b : per_dimension)
    if (!(b > 0.0) || !std::isfinite(b)) throw GpError("kernel lengthscale must be positive");
}

double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const SeKernel& kernel) {
  return kernel(x, y);
}

double GpPrediction::stddev() const { return std::sqrt(std::max(variance, 0.0)); }

GpModel::GpModel(Eigen::MatrixXd inputs, Eigen::VectorXd targets, SeKernel kernel, double noise,
                 JitterSchedule jitter)
    : inputs_(std::move(inputs)), targets_(std::move(targets)), kernel_(std::move(kernel)), noise_(noise) {
  kernel_.validate();
  if (!(noise_ >= 0.0)) throw GpError("noise variance must be non-negative");
  if (inputs_.rows() != targets_.size()) throw GpError("input and target counts differ");
  if (!kernel_.per_dimension.empty() &&
      static_cast<Eigen::Index>(kernel_.per_dimension.size()) != inputs_.cols())
    throw GpError("per-dimension lengthscales do not match the input dimension");
  const Eigen::Index n = targets_.size();
  if (n == 0) return;
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = kernel_(inputs_.row(i).transpose(), inputs_.row(j).transpose());
      gram(i, j) = k;
      gram(j, i) = k;
    }
  for (double level = jitter.initial * kernel_.amplitude; level <= jitter.maximum * kernel_.amplitude * (1 + 1e-9);
       level *= jitter.growth) {
    Eigen::MatrixXd k = gram;
    k.diagonal().array() += noise_ + level;
    chol_.compute(k);
    if (chol_.info() == Eigen::Success) {
      jitter_ = level;
      alpha_ = chol_.solve(targets_);
      return;
    }
  }
  throw GpError("covariance factorization failed at maximum jitter");
}

GpPrediction GpModel::predict(const Eigen::VectorXd& query) const {
  GpPrediction out;
  out.variance = kernel_.amplitude;
  if (targets_.size() == 0) return out;
  Eigen::VectorXd k_star(targets_.size());
  for (Eigen::Index i = 0; i < k_star.size(); ++i) k_star[i] = kernel_(inputs_.row(i).transpose(), query);
  out.mean = k_star.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(k_star);
  out.variance = std::max(kernel_.amplitude - v.squaredNorm(), 0.0);
  return out;
}

std::vector<GpPrediction> GpModel::predict_batch(const Eigen::MatrixXd& queries) const {
  std::vector<GpPrediction> out(static_cast<std::size_t>(queries.rows()));
  for (Eigen::Index i = 0; i < queries.rows(); ++i)
    out[static_cast<std::size_t>(i)] = predict(queries.row(i).transpose());
  return out;
}

double GpModel::log_marginal_likelihood(Eigen::Vector3d* gradient) const {
  const Eigen::Index n = targets_.size();
  if (gradient) gradient->setZero();
  if (n == 0) return 0.0;
  const Eigen::MatrixXd& l = chol_.matrixLLT();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const double value = -0.5 * targets_.dot(alpha_) - 0.5 * log_det -
                       0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (gradient) {
    const Eigen::MatrixXd inverse = chol_.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd w = alpha_ * alpha_.transpose() - inverse;
    double ga = 0.0;
    double gb = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::VectorXd xi = inputs_.row(i).transpose();
        const Eigen::VectorXd xj = inputs_.row(j).transpose();
        const double k = kernel_(xi, xj);
        ga += w(i, j) * k;
        gb += w(i, j) * k * 0.5 * kernel_.scaled_distance(xi, xj);
      }
    (*gradient)[0] = 0.5 * ga;
    (*gradient)[1] = 0.5 * gb;
    (*gradient)[2] = 0.5 * w.trace() * 2.0 * noise_;
  }
  return value;
}

void InputBox::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size()) throw GpError("bounds must be non-empty and match");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!(upper[i] > lower[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw GpError("each upper bound must exceed its lower bound");
}

Eigen::VectorXd InputBox::to_unit(const Eigen::VectorXd& raw) const {
  return ((raw - lower).array() / (upper - lower).array()).matrix();
}

Eigen::VectorXd InputBox::from_unit(const Eigen::VectorXd& unit) const {
  return lower + (unit.array() * (upper - lower).array()).matrix();
}

Eigen::VectorXd InputBox::clamp(const Eigen::VectorXd& raw) const {
  return raw.cwiseMax(lower).cwiseMin(upper);
}

GpDataset::GpDataset(InputBox box) : box_(std::move(box)) { box_.validate(); }

void GpDataset::add(const Eigen::VectorXd& raw_input, double value) {
  if (raw_input.size() != box_.dimension()) throw GpError("input dimension does not match the bounds");
  if (!std::isfinite(value)) throw GpError("observation must be finite");
  raw_.push_back(raw_input);
  values_.push_back(value);
}

Eigen::MatrixXd GpDataset::unit_inputs() const {
  Eigen::MatrixXd out(size(), box_.dimension());
  for (int i = 0; i < size(); ++i) out.row(i) = box_.to_unit(raw_[static_cast<std::size_t>(i)]).transpose();
  return out;
}

double GpDataset::mean() const {
  if (values_.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum / static_cast<double>(values_.size());
}

double GpDataset::scale() const {
  if (values_.size() < 2) return 1.0;
  const double m = mean();
  double sum = 0.0;
  for (double v : values_) sum += (v - m) * (v - m);
  const double s = std::sqrt(sum / static_cast<double>(values_.size()));
  return s > 1e-12 * std::max(1.0, std::abs(m)) ? s : 1.0;
}

Eigen::VectorXd GpDataset::standardized_values() const {
  Eigen::VectorXd out(size());
  const double m = mean();
  const double s = scale();
  for (int i = 0; i < size(); ++i) out[i] = (values_[static_cast<std::size_t>(i)] - m) / s;
  return out;
}

void GpDataset::write_csv(std::ostream& os) const {
  const auto old_precision = os.precision(17);
  for (int j = 0; j < box_.dimension(); ++j) os << "x" << j << ",";
  os << "y\n";
  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < box_.dimension(); ++j) os << raw_[static_cast<std::size_t>(i)][j] << ",";
    os << values_[static_cast<std::size_t>(i)] << "\n";
  }
  os.precision(old_precision);
}

GpDataset GpDataset::read_csv(std::istream& is, const InputBox& box) {
  GpDataset out(box);
  std::string line;
  if (!std::getline(is, line)) throw GpError("dataset CSV is empty");
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw GpError("dataset CSV row " + std::to_string(row) + " has a non-numeric cell");
      }
    }
    if (static_cast<int>(values.size()) != box.dimension() + 1)
      throw GpError("dataset CSV row " + std::to_string(row) + " has the wrong number of columns");
    out.add(Eigen::Map<Eigen::VectorXd>(values.data(), box.dimension()), values.back());
  }
  return out;
}

GpPrediction posterior(const GpDataset& data, const SeKernel& kernel, double noise,
                       const Eigen::VectorXd& unit_query) {
  const GpModel model(data.unit_inputs(), data.standardized_values(), kernel, noise);
  return model.predict(unit_query);
}

SeKernel fit_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                             const SeKernel& start, double& noise, int restarts) {
  auto evaluate = [&](const Eigen::Vector3d& p, Eigen::Vector3d* grad) {
    SeKernel k = start;
    k.per_dimension.clear();
    k.amplitude = std::exp(p[0]);
    k.lengthscale_sq = std::exp(p[1]);
    try {
      return GpModel(inputs, targets, k, std::exp(2.0 * p[2])).log_marginal_likelihood(grad);
    } catch (const GpError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  const Eigen::Vector3d origin(std::log(start.amplitude), std::log(start.lengthscale_sq),
                               0.5 * std::log(std::max(noise, 1e-12)));
  Eigen::Vector3d best = origin;
  double best_value = evaluate(origin, nullptr);
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    Eigen::Vector3d p = origin;
    p[1] += 0.75 * (r - 0.5 * (restarts - 1));
    Eigen::Vector3d grad;
    double value = evaluate(p, &grad);
    double step = 0.1;
    for (int it = 0; it < 200 && std::isfinite(value); ++it) {
      const Eigen::Vector3d trial = (p + step * grad).cwiseMax(Eigen::Vector3d(-6, -8, -8)).cwiseMin(Eigen::Vector3d(4, 3, 1));
      Eigen::Vector3d trial_grad;
      const double trial_value = evaluate(trial, &trial_grad);
      if (trial_value > value) {
        p = trial;
        value = trial_value;
        grad = trial_grad;
        step *= 1.5;
      } else {
        step *= 0.5;
        if (step < 1e-8) break;
      }
    }
    if (value > best_value) {
      best_value = value;
      best = p;
    }
  }
  SeKernel out = start;
  out.per_dimension.clear();
  out.amplitude = std::exp(best[0]);
  out.lengthscale_sq = std::exp(best[1]);
  noise = std::exp(2.0 * best[2]);
  return out;
}

}  // namespace gaittune
