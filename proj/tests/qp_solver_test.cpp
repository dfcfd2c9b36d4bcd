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

#include "gaittune/qp_solver.hpp"

#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <gtest/gtest.h>

namespace gaittune {
namespace {

QpProblem one_dim(double h, double q, std::vector<std::pair<double, double>> rows) {
  QpProblem p;
  p.hessian = Eigen::MatrixXd::Constant(1, 1, h);
  p.linear = Eigen::VectorXd::Constant(1, q);
  p.constraint_matrix.resize(static_cast<Eigen::Index>(rows.size()), 1);
  p.constraint_bound.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    p.constraint_matrix(static_cast<Eigen::Index>(i), 0) = rows[i].first;
    p.constraint_bound(static_cast<Eigen::Index>(i)) = rows[i].second;
  }
  return p;
}

// Projected gradient ascent on the dual; x(lambda) = -H^{-1}(q + A' lambda).
Eigen::VectorXd dual_projected_gradient(const QpProblem& p, int iterations) {
  const Eigen::MatrixXd Hinv = p.hessian.partialPivLu().inverse();
  const Eigen::MatrixXd& A = p.constraint_matrix;
  const Eigen::MatrixXd M = A * Hinv * A.transpose();
  const double step = 1.0 / M.operatorNorm();
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(p.num_constraints());
  Eigen::VectorXd x;
  for (int it = 0; it < iterations; ++it) {
    x = -Hinv * (p.linear + A.transpose() * lambda);
    const Eigen::VectorXd next = (lambda + step * (A * x - p.constraint_bound)).cwiseMax(0.0);
    const double change = (next - lambda).cwiseAbs().maxCoeff();
    lambda = next;
    if (change < 1e-15) break;
  }
  return -Hinv * (p.linear + A.transpose() * lambda);
}

TEST(SolveQp, LowerBoundActive) {
  // min x^2 s.t. x >= 1  ->  -x <= -1
  const QpSolution s = solve_qp(one_dim(2.0, 0.0, {{-1.0, -1.0}}));
  ASSERT_EQ(s.status, QpStatus::optimal);
  EXPECT_NEAR(s.x(0), 1.0, 1e-12);
  ASSERT_EQ(s.active_set.size(), 1u);
  EXPECT_EQ(s.active_set[0], 0);
  EXPECT_NEAR(s.multipliers(0), 2.0, 1e-12);
}

TEST(SolveQp, ClampedUnconstrainedOptimum) {
  // min (x-2)^2 s.t. 0 <= x <= 1
  const QpSolution s = solve_qp(one_dim(2.0, -4.0, {{-1.0, 0.0}, {1.0, 1.0}}));
  ASSERT_EQ(s.status, QpStatus::optimal);
  EXPECT_NEAR(s.x(0), 1.0, 1e-12);
  EXPECT_EQ(s.active_set, std::vector<int>{1});
}

TEST(SolveQp, ReportsInfeasibility) {
  QpProblem p = one_dim(1.0, 0.0, {{1.0, 0.0}, {-1.0, -1.0}});  // x <= 0 and x >= 1
  p.row_group = {0, 1};
  p.group_names = {"upper", "lower"};
  const QpSolution s = solve_qp(p);
  EXPECT_EQ(s.status, QpStatus::infeasible);
  EXPECT_GE(s.blocking_row, 0);
  EXPECT_FALSE(p.group_of_row(s.blocking_row).empty());
}

TEST(SolveQp, RidgeOnSingularHessian) {
  // min x0^2 s.t. x1 <= -1 (x1 has zero curvature)
  QpProblem p;
  p.hessian = Eigen::Matrix2d{{2.0, 0.0}, {0.0, 0.0}};
  p.linear = Eigen::Vector2d::Zero();
  p.constraint_matrix = Eigen::RowVector2d(0.0, 1.0);
  p.constraint_bound = Eigen::VectorXd::Constant(1, -1.0);
  const QpSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::optimal);
  EXPECT_GT(s.ridge, 0.0);
  EXPECT_NEAR(s.x(1), -1.0, 1e-10);
}

TEST(SolveQp, RejectsBadDimensions) {
  QpProblem p = one_dim(1.0, 0.0, {});
  p.linear = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(solve_qp(p), std::invalid_argument);
  QpProblem a;
  a.hessian = Eigen::Matrix2d{{1.0, 0.5}, {0.0, 1.0}};
  a.linear = Eigen::Vector2d::Zero();
  EXPECT_THROW(solve_qp(a), std::invalid_argument);
}

TEST(SolveQp, MatchesDualProjectedGradientOracle) {
  std::mt19937 rng(2026);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 10, m = 5;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = g(rng);
    QpProblem p;
    p.hessian = M.transpose() * M + Eigen::MatrixXd::Identity(n, n);
    p.linear.resize(n);
    for (int i = 0; i < n; ++i) p.linear(i) = 3.0 * g(rng);
    p.constraint_matrix.resize(m, n);
    p.constraint_bound.resize(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) p.constraint_matrix(i, j) = g(rng);
      p.constraint_bound(i) = g(rng);
    }
    const QpSolution s = solve_qp(p);
    ASSERT_EQ(s.status, QpStatus::optimal);
    EXPECT_LE(s.residuals.primal, 1e-8);
    EXPECT_LE(s.residuals.stationarity, 1e-8);
    EXPECT_LE(s.residuals.complementarity, 1e-8);
    const Eigen::VectorXd oracle = dual_projected_gradient(p, 2000000);
    EXPECT_LE((s.x - oracle).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
  }
}

TEST(SolveQp, KktOnRandomDegenerateProblems) {
  // Many redundant rows through a common vertex stress the dependency logic.
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 6, m = 40;
    QpProblem p;
    p.hessian = Eigen::MatrixXd::Identity(n, n);
    p.linear.resize(n);
    for (int i = 0; i < n; ++i) p.linear(i) = 5.0 * g(rng);
    p.constraint_matrix.resize(m, n);
    p.constraint_bound = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) p.constraint_matrix(i, j) = g(rng);
    const QpSolution s = solve_qp(p);
    ASSERT_EQ(s.status, QpStatus::optimal) << trial;
    EXPECT_LE(s.residuals.primal, 1e-8);
    EXPECT_LE(s.residuals.stationarity, 1e-8);
    EXPECT_LE(s.residuals.complementarity, 1e-8);
    EXPECT_LE(s.residuals.dual, 0.0);
  }
}

}  // namespace
}  // namespace gaittune
