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

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace gaittune {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Factorization state of the dual method. J = L^{-T} is rotated so that its
// first q columns span the active constraint normals and R holds the
// triangular factor J(:,0:q)' N_active.
struct ActiveSetFactor {
  Eigen::MatrixXd J;
  Eigen::MatrixXd R;
  int q = 0;

  void rotate_columns(int a, int b, double c, double s) {
    for (int k = 0; k < J.rows(); ++k) {
      const double t1 = J(k, a);
      const double t2 = J(k, b);
      J(k, a) = c * t1 + s * t2;
      J(k, b) = -s * t1 + c * t2;
    }
  }

  // d = J' n_p on entry. Returns false when the new normal is (numerically)
  // dependent on the active ones.
  bool add(Eigen::VectorXd& d) {
    const int n = static_cast<int>(J.rows());
    for (int j = n - 1; j > q; --j) {
      if (d(j) == 0.0) continue;
      const double h = std::hypot(d(j - 1), d(j));
      const double c = d(j - 1) / h;
      const double s = d(j) / h;
      d(j - 1) = h;
      d(j) = 0.0;
      rotate_columns(j - 1, j, c, s);
    }
    R.col(q).head(q + 1) = d.head(q + 1);
    ++q;
    return std::abs(d(q - 1)) > 1e-12 * d.head(q).norm();
  }

  // Removes active column `pos`; the caller shifts its own bookkeeping.
  void remove(int pos) {
    for (int i = pos; i < q - 1; ++i) R.col(i) = R.col(i + 1);
    R.col(q - 1).setZero();
    --q;
    for (int j = pos; j < q; ++j) {
      const double a = R(j, j);
      const double b = R(j + 1, j);
      if (b == 0.0) continue;
      const double h = std::hypot(a, b);
      const double c = a / h;
      const double s = b / h;
      for (int k = j; k < q; ++k) {
        const double t1 = R(j, k);
        const double t2 = R(j + 1, k);
        R(j, k) = c * t1 + s * t2;
        R(j + 1, k) = -s * t1 + c * t2;
      }
      R(j + 1, j) = 0.0;
      rotate_columns(j, j + 1, c, s);
    }
  }
};

}  // namespace

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::max_iterations: return "max_iterations";
    case QpStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

std::string QpProblem::group_of_row(int row) const {
  if (row < 0 || row_group.empty()) return "constraint";
  const int g = row_group.at(static_cast<std::size_t>(row));
  if (g >= 0 && g < static_cast<int>(group_names.size())) return group_names[static_cast<std::size_t>(g)];
  return "constraint";
}

void QpProblem::validate() const {
  const auto n = linear.size();
  if (n == 0) throw std::invalid_argument("qp: empty decision vector");
  if (hessian.rows() != n || hessian.cols() != n) throw std::invalid_argument("qp: hessian dimension mismatch");
  if (constraint_matrix.rows() != constraint_bound.size()) throw std::invalid_argument("qp: constraint row mismatch");
  if (constraint_bound.size() > 0 && constraint_matrix.cols() != n) throw std::invalid_argument("qp: constraint column mismatch");
  if (!row_group.empty() && static_cast<Eigen::Index>(row_group.size()) != constraint_bound.size()) {
    throw std::invalid_argument("qp: row_group size mismatch");
  }
  if (!hessian.allFinite() || !linear.allFinite() || !constraint_matrix.allFinite() || !constraint_bound.allFinite()) {
    throw std::invalid_argument("qp: non-finite problem data");
  }
  const double asym = (hessian - hessian.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, hessian.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("qp: hessian not symmetric");
  }
}

KktResiduals kkt_residuals(const QpProblem& problem, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& multipliers, double ridge) {
  KktResiduals res;
  Eigen::VectorXd grad = problem.hessian * x + ridge * x + problem.linear;
  if (problem.num_constraints() > 0) {
    const Eigen::VectorXd slack = problem.constraint_matrix * x - problem.constraint_bound;
    grad += problem.constraint_matrix.transpose() * multipliers;
    res.primal = std::max(0.0, slack.maxCoeff());
    res.complementarity = multipliers.cwiseProduct(slack).cwiseAbs().maxCoeff();
    res.dual = std::max(0.0, (-multipliers).maxCoeff());
  }
  res.stationarity = grad.cwiseAbs().maxCoeff();
  return res;
}

QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings) {
  problem.validate();
  const int n = problem.num_variables();
  const int m = problem.num_constraints();
  const int max_iter = settings.max_iterations > 0 ? settings.max_iterations : 10 * (n + m);

  QpSolution sol;
  sol.multipliers = Eigen::VectorXd::Zero(m);

  Eigen::MatrixXd H = problem.hessian;
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H, Eigen::EigenvaluesOnly).eigenvalues()(0);
  if (min_eig < settings.ridge_trigger) {
    sol.ridge = settings.ridge + std::max(0.0, -min_eig);
    H.diagonal().array() += sol.ridge;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) throw std::runtime_error("qp: hessian not positive definite after ridge");

  ActiveSetFactor fac;
  fac.J = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));  // L^{-T}
  fac.R = Eigen::MatrixXd::Zero(n, n);

  Eigen::VectorXd x = -llt.solve(problem.linear);

  // Constraints in dual-method form: n_i' x >= b_i with n_i = -A_i, b_i = -bound_i.
  const Eigen::MatrixXd& A = problem.constraint_matrix;
  const Eigen::VectorXd& bound = problem.constraint_bound;
  Eigen::VectorXd row_norm(m);
  for (int i = 0; i < m; ++i) row_norm(i) = std::max(A.row(i).norm(), 1e-300);
  const double feas_tol = 1e-2 * settings.tolerance;

  std::vector<int> active;        // constraint index per active position
  std::vector<double> u;          // multiplier per active position, +1 pending
  std::vector<char> is_active(static_cast<std::size_t>(m), 0);
  active.reserve(static_cast<std::size_t>(n) + 1);
  u.reserve(static_cast<std::size_t>(n) + 1);

  Eigen::VectorXd d(n), z(n), r(n), np(n);
  int iter = 0;
  bool infeasible = false;

  while (iter < max_iter) {
    // Step 1: pick the most violated inactive constraint (scaled slack).
    int p = -1;
    double worst = -feas_tol;
    for (int i = 0; i < m; ++i) {
      if (is_active[static_cast<std::size_t>(i)]) continue;
      const double slack = (bound(i) - A.row(i).dot(x)) / row_norm(i);
      if (slack < worst) {
        worst = slack;
        p = i;
      }
    }
    if (p < 0) break;

    np = -A.row(p).transpose();
    double sp = bound(p) - A.row(p).dot(x);
    active.push_back(p);
    u.push_back(0.0);

    bool added = false;
    while (!added) {
      if (++iter > max_iter) break;
      const int q = fac.q;
      d.noalias() = fac.J.transpose() * np;
      z.noalias() = fac.J.rightCols(n - q) * d.tail(n - q);
      if (q > 0) {
        r.head(q) = fac.R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));
      }

      // Step 2b: dual step length bounded by active multipliers reaching zero.
      double t1 = kInf;
      int drop = -1;
      for (int k = 0; k < q; ++k) {
        if (r(k) > 0.0) {
          const double ratio = u[static_cast<std::size_t>(k)] / r(k);
          if (ratio < t1) {
            t1 = ratio;
            drop = k;
          }
        }
      }
      // z' n_p equals ||d(q:n)||^2; zero means n_p lies in the active span.
      const double znp = d.tail(n - q).squaredNorm();
      const double t2 = znp > 1e-20 * d.squaredNorm() ? -sp / znp : kInf;
      const double t = std::min(t1, t2);

      if (!std::isfinite(t)) {
        infeasible = true;
        sol.blocking_row = p;
        break;
      }

      if (!std::isfinite(t2)) {
        // Dual-only step.
        for (int k = 0; k < q; ++k) u[static_cast<std::size_t>(k)] -= t * r(k);
        u.back() += t;
        is_active[static_cast<std::size_t>(active[static_cast<std::size_t>(drop)])] = 0;
        fac.remove(drop);
        active.erase(active.begin() + drop);
        u.erase(u.begin() + drop);
        continue;
      }

      x += t * z;
      for (int k = 0; k < q; ++k) u[static_cast<std::size_t>(k)] -= t * r(k);
      u.back() += t;

      if (t2 <= t1) {
        if (!fac.add(d)) {
          infeasible = true;
          sol.blocking_row = p;
          break;
        }
        is_active[static_cast<std::size_t>(p)] = 1;
        added = true;
      } else {
        is_active[static_cast<std::size_t>(active[static_cast<std::size_t>(drop)])] = 0;
        fac.remove(drop);
        active.erase(active.begin() + drop);
        u.erase(u.begin() + drop);
        sp = bound(p) - A.row(p).dot(x);
      }
    }
    if (infeasible || !added) {
      active.pop_back();
      u.pop_back();
      break;
    }
  }

  for (std::size_t k = 0; k < active.size(); ++k) {
    sol.multipliers(active[k]) = u[k];
  }
  sol.x = x;
  sol.active_set = active;
  std::sort(sol.active_set.begin(), sol.active_set.end());
  sol.iterations = iter;
  sol.objective = 0.5 * x.dot(problem.hessian * x) + problem.linear.dot(x);
  sol.residuals = kkt_residuals(problem, x, sol.multipliers, sol.ridge);
  if (infeasible) {
    sol.status = QpStatus::infeasible;
  } else if (iter >= max_iter) {
    sol.status = QpStatus::max_iterations;
  } else {
    sol.status = QpStatus::optimal;
  }
  return sol;
}

}  // namespace gaittune
