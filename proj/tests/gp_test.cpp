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
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/LU>
#include <gtest/gtest.h>

namespace gaittune {
namespace {

struct Instance {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  SeKernel kernel;
  double noise;
};

Instance random_instance(std::mt19937_64& rng, int n, int d, double noise) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Instance inst;
  inst.x.resize(n, d);
  inst.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) inst.x(i, j) = unit(rng);
    inst.y[i] = normal(rng);
  }
  inst.kernel.amplitude = 0.5 + unit(rng);
  inst.kernel.lengthscale_sq = 0.02 + 0.2 * unit(rng);
  inst.noise = noise;
  return inst;
}

// Dense oracle: explicit inverse of the jittered covariance.
GpPrediction explicit_posterior(const Instance& inst, double jitter, const Eigen::VectorXd& q) {
  const Eigen::Index n = inst.y.size();
  Eigen::MatrixXd k(n, n);
  Eigen::VectorXd ks(n);
  const double a = inst.kernel.amplitude;
  const double b = inst.kernel.lengthscale_sq;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j)
      k(i, j) = a * std::exp(-(inst.x.row(i) - inst.x.row(j)).squaredNorm() / (2 * b));
    ks[i] = a * std::exp(-(inst.x.row(i).transpose() - q).squaredNorm() / (2 * b));
  }
  k.diagonal().array() += inst.noise + jitter;
  const Eigen::MatrixXd inv = k.inverse();
  return {ks.dot(inv * inst.y), a - ks.dot(inv * ks)};
}

TEST(Kernel, SelfSimilarityEqualsAmplitude) {
  SeKernel k{2.5, 0.3, {}};
  const Eigen::Vector3d x(0.1, 0.2, 0.3);
  EXPECT_DOUBLE_EQ(kernel_eval(x, x, k), 2.5);
}

TEST(Kernel, UnitDistanceSquaredTwoGivesInverseE) {
  SeKernel k{1.0, 1.0, {}};
  EXPECT_NEAR(kernel_eval(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), k), std::exp(-1.0), 1e-15);
}

TEST(Kernel, DecaysMonotonically) {
  SeKernel k;
  double last = kernel_eval(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), k);
  for (double r = 0.05; r < 5.0; r += 0.05) {
    const double v = kernel_eval(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, r), k);
    EXPECT_LT(v, last);
    EXPECT_GE(v, 0.0);
    last = v;
  }
  EXPECT_LT(last, 1e-100);
}

TEST(Kernel, PerDimensionLengthscales) {
  SeKernel k{1.0, 1.0, {1.0, 4.0}};
  EXPECT_NEAR(kernel_eval(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 2), k), std::exp(-1.0), 1e-15);
}

TEST(Kernel, RejectsNonPositiveParameters) {
  EXPECT_THROW((SeKernel{0.0, 1.0, {}}.validate()), GpError);
  EXPECT_THROW((SeKernel{1.0, -1.0, {}}.validate()), GpError);
  EXPECT_THROW((SeKernel{1.0, 1.0, {1.0, 0.0}}.validate()), GpError);
}

TEST(Posterior, EmptyDatasetGivesPrior) {
  GpDataset data(InputBox{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)});
  const GpPrediction p = posterior(data, SeKernel{}, 0.0, Eigen::Vector2d(0.3, 0.7));
  EXPECT_EQ(p.mean, 0.0);
  EXPECT_EQ(p.variance, 1.0);
}

TEST(Posterior, NoiseFreeInterpolation) {
  Eigen::MatrixXd x(1, 1);
  x << 0.0;
  const GpModel model(x, Eigen::VectorXd::Constant(1, 1.0), SeKernel{1.0, 1.0, {}}, 0.0);
  const GpPrediction p = model.predict(Eigen::VectorXd::Zero(1));
  EXPECT_NEAR(p.mean, 1.0, 1e-9);
  EXPECT_NEAR(p.variance, 0.0, 1e-9);
}

TEST(Posterior, MatchesExplicitInverseOracle) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> size(1, 20);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = trial == 0 ? 2 : dim(rng);
    const Instance inst = random_instance(rng, trial == 0 ? 5 : size(rng), d, 1e-3);
    const GpModel model(inst.x, inst.y, inst.kernel, inst.noise);
    for (int q = 0; q < 5; ++q) {
      Eigen::VectorXd query(d);
      for (int j = 0; j < d; ++j) query[j] = unit(rng);
      const GpPrediction got = model.predict(query);
      const GpPrediction want = explicit_posterior(inst, model.jitter(), query);
      EXPECT_NEAR(got.mean, want.mean, 1e-8);
      EXPECT_NEAR(got.variance, std::max(want.variance, 0.0), 1e-8);
    }
  }
}

TEST(Posterior, VarianceBoundedByPrior) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Instance inst = random_instance(rng, 12, 3, 0.0);
    const GpModel model(inst.x, inst.y, inst.kernel, inst.noise);
    for (int q = 0; q < 20; ++q) {
      const Eigen::Vector3d query(unit(rng), unit(rng), unit(rng));
      const GpPrediction p = model.predict(query);
      EXPECT_GE(p.variance, 0.0);
      EXPECT_LE(p.variance, inst.kernel.amplitude + 1e-9);
    }
  }
}

TEST(Posterior, AddingPointNeverIncreasesVariance) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Instance inst = random_instance(rng, 10, 2, 0.0);
    const Eigen::Vector2d query(unit(rng), unit(rng));
    double last = inst.kernel.amplitude;
    for (int n = 1; n <= 10; ++n) {
      const GpModel model(inst.x.topRows(n), inst.y.head(n), inst.kernel, 0.0);
      const double v = model.predict(query).variance;
      EXPECT_LE(v, last + 1e-9) << "trial " << trial << " n " << n;
      last = v;
    }
  }
}

TEST(Posterior, PermutationInvariant) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance inst = random_instance(rng, 8, 3, 1e-4);
    std::vector<int> order(8);
    for (int i = 0; i < 8; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::MatrixXd px(8, 3);
    Eigen::VectorXd py(8);
    for (int i = 0; i < 8; ++i) {
      px.row(i) = inst.x.row(order[static_cast<std::size_t>(i)]);
      py[i] = inst.y[order[static_cast<std::size_t>(i)]];
    }
    const GpModel a(inst.x, inst.y, inst.kernel, inst.noise);
    const GpModel b(px, py, inst.kernel, inst.noise);
    const Eigen::Vector3d query(unit(rng), unit(rng), unit(rng));
    EXPECT_NEAR(a.predict(query).mean, b.predict(query).mean, 1e-12);
    EXPECT_NEAR(a.predict(query).variance, b.predict(query).variance, 1e-12);
  }
}

TEST(Posterior, DuplicatePointsFactorizeWithJitter) {
  Eigen::MatrixXd x(3, 1);
  x << 0.5, 0.5, 0.5;
  const GpModel model(x, Eigen::Vector3d(1.0, 1.0, 1.0), SeKernel{}, 0.0);
  EXPECT_GE(model.jitter(), 1e-10);
  EXPECT_NEAR(model.predict(Eigen::VectorXd::Constant(1, 0.5)).mean, 1.0, 1e-6);
}

TEST(Evidence, SingleObservationClosedForm) {
  Eigen::MatrixXd x(1, 2);
  x << 0.2, 0.4;
  const GpModel model(x, Eigen::VectorXd::Zero(1), SeKernel{1.0, 0.04, {}}, 0.0);
  const double zeta = model.jitter();
  EXPECT_NEAR(model.log_marginal_likelihood(), -0.5 * std::log(2 * std::numbers::pi * (1 + zeta)), 1e-14);
}

TEST(Evidence, QuadraticTermScalesWithSquare) {
  std::mt19937_64 rng(19);
  const Instance inst = random_instance(rng, 6, 2, 1e-3);
  const GpModel base(inst.x, inst.y, inst.kernel, inst.noise);
  const GpModel zero(inst.x, Eigen::VectorXd::Zero(6), inst.kernel, inst.noise);
  const GpModel scaled(inst.x, 3.0 * inst.y, inst.kernel, inst.noise);
  const double quad = base.log_marginal_likelihood() - zero.log_marginal_likelihood();
  const double quad3 = scaled.log_marginal_likelihood() - zero.log_marginal_likelihood();
  EXPECT_NEAR(quad3, 9.0 * quad, 1e-9 * std::abs(quad3));
}

TEST(Evidence, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance inst = random_instance(rng, 10, 2, 0.05);
    auto lml = [&](const Eigen::Vector3d& p, Eigen::Vector3d* g) {
      SeKernel k{std::exp(p[0]), std::exp(p[1]), {}};
      return GpModel(inst.x, inst.y, k, std::exp(2 * p[2]), JitterSchedule{0.0, 1e-4, 10.0}).log_marginal_likelihood(g);
    };
    const Eigen::Vector3d p(std::log(inst.kernel.amplitude), std::log(inst.kernel.lengthscale_sq),
                            0.5 * std::log(inst.noise));
    Eigen::Vector3d grad;
    lml(p, &grad);
    for (int i = 0; i < 3; ++i) {
      const double h = 1e-6;
      Eigen::Vector3d hi = p, lo = p;
      hi[i] += h;
      lo[i] -= h;
      const double fd = (lml(hi, nullptr) - lml(lo, nullptr)) / (2 * h);
      EXPECT_NEAR(grad[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "trial " << trial << " component " << i;
    }
  }
}

TEST(Evidence, FittingDoesNotLowerEvidence) {
  std::mt19937_64 rng(29);
  const Instance inst = random_instance(rng, 15, 2, 1e-2);
  double noise = inst.noise;
  const SeKernel fitted = fit_hyperparameters(inst.x, inst.y, inst.kernel, noise);
  const double before = GpModel(inst.x, inst.y, inst.kernel, inst.noise).log_marginal_likelihood();
  const double after = GpModel(inst.x, inst.y, fitted, noise).log_marginal_likelihood();
  EXPECT_GE(after, before - 1e-9);
}

TEST(Dataset, NormalizesAndStandardizes) {
  GpDataset data(InputBox{Eigen::Vector2d(1, 0), Eigen::Vector2d(100, 1000)});
  data.add(Eigen::Vector2d(1, 1000), 3.0);
  data.add(Eigen::Vector2d(100, 0), 5.0);
  const Eigen::MatrixXd u = data.unit_inputs();
  EXPECT_DOUBLE_EQ(u(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(u(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(u(1, 0), 1.0);
  const Eigen::VectorXd z = data.standardized_values();
  EXPECT_DOUBLE_EQ(z[0], -1.0);
  EXPECT_DOUBLE_EQ(z[1], 1.0);
  EXPECT_DOUBLE_EQ(data.destandardize(data.standardize(4.2)), 4.2);
}

TEST(Dataset, ConstantObservationsKeepUnitScale) {
  GpDataset data(InputBox{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)});
  data.add(Eigen::VectorXd::Constant(1, 0.1), 7.0);
  data.add(Eigen::VectorXd::Constant(1, 0.9), 7.0);
  EXPECT_EQ(data.scale(), 1.0);
  EXPECT_EQ(data.standardized_values().norm(), 0.0);
}

TEST(Dataset, CsvRoundTrip) {
  const InputBox box{Eigen::Vector2d(0, 0), Eigen::Vector2d(1000, 1000)};
  GpDataset data(box);
  data.add(Eigen::Vector2d(1000, 1000), 12.345678901234567);
  data.add(Eigen::Vector2d(1.0 / 3.0, 250), 0.1);
  std::stringstream ss;
  data.write_csv(ss);
  const GpDataset back = GpDataset::read_csv(ss, box);
  ASSERT_EQ(back.size(), 2);
  EXPECT_EQ(back.raw_inputs()[1], data.raw_inputs()[1]);
  EXPECT_EQ(back.values()[0], data.values()[0]);
}

TEST(Dataset, CsvRejectsBadRows) {
  const InputBox box{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)};
  std::stringstream ss("x0,x1,y\n0.1,0.2\n");
  EXPECT_THROW(GpDataset::read_csv(ss, box), GpError);
}

}  // namespace
}  // namespace gaittune
