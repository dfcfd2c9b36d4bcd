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

#include <string>
#include <vector>

#include <Eigen/Core>

namespace gaittune {

/// Dense convex QP:  min 0.5 x'Hx + q'x  subject to  A x <= b.
///
/// Rows of A may be tagged with a group index so that callers can name the
/// constraint family responsible for an infeasibility.
struct QpProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  Eigen::MatrixXd constraint_matrix;
  Eigen::VectorXd constraint_bound;

  std::vector<int> row_group;           // empty, or one entry per row
  std::vector<std::string> group_names;

  int num_variables() const { return static_cast<int>(linear.size()); }
  int num_constraints() const { return static_cast<int>(constraint_bound.size()); }
  std::string group_of_row(int row) const;

  /// Throws std::invalid_argument on inconsistent dimensions, asymmetric
  /// Hessian or non-finite entries.
  void validate() const;
};

enum class QpStatus { optimal, max_iterations, infeasible };

const char* to_string(QpStatus status);

struct KktResiduals {
  double primal = 0.0;           // max(A x - b)_+
  double stationarity = 0.0;     // ||H x + q + A' lambda||_inf
  double complementarity = 0.0;  // max_i |lambda_i (A x - b)_i|
  double dual = 0.0;             // max(-lambda)_+
};

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // one per row, >= 0
  QpStatus status = QpStatus::max_iterations;
  int iterations = 0;
  double objective = 0.0;
  double ridge = 0.0;           // diagonal regularization actually applied
  std::vector<int> active_set;
  KktResiduals residuals;
  int blocking_row = -1;        // row that could not be satisfied when infeasible
};

struct QpSettings {
  double tolerance = 1e-8;
  int max_iterations = 0;       // 0 = 10 * (n + m)
  double ridge = 1e-9;
  double ridge_trigger = 1e-10; // ridge added when the min eigenvalue is below
};

/// Goldfarb-Idnani dual active-set method.
QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings = {});

/// Residuals of the KKT system evaluated from scratch for (x, lambda). Uses
/// problem.hessian as given plus `ridge` on the diagonal.
KktResiduals kkt_residuals(const QpProblem& problem, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& multipliers, double ridge = 0.0);

}  // namespace gaittune
