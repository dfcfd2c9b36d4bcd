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

#include "gaittune/gait_qp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gaittune {

namespace {

// Prediction matrices of one axis over samples 1..N:
//   position = Pp s0 + Up j,  velocity = Pv s0 + Uv j,  acceleration = Pa s0 + Ua j.
struct AxisPrediction {
  Eigen::MatrixXd Pp, Pv, Pa;
  Eigen::MatrixXd Up, Uv, Ua;
};

AxisPrediction predict(int N, double dt) {
  Eigen::Matrix3d Phi;
  Phi << 1.0, dt, 0.5 * dt * dt,
         0.0, 1.0, dt,
         0.0, 0.0, 1.0;
  const Eigen::Vector3d Gamma(dt * dt * dt / 6.0, 0.5 * dt * dt, dt);

  std::vector<Eigen::Vector3d> phi_gamma(static_cast<std::size_t>(N));
  Eigen::Vector3d acc = Gamma;
  for (int m = 0; m < N; ++m) {
    phi_gamma[static_cast<std::size_t>(m)] = acc;
    acc = Phi * acc;
  }

  AxisPrediction p;
  p.Pp.resize(N, 3); p.Pv.resize(N, 3); p.Pa.resize(N, 3);
  p.Up = Eigen::MatrixXd::Zero(N, N);
  p.Uv = Eigen::MatrixXd::Zero(N, N);
  p.Ua = Eigen::MatrixXd::Zero(N, N);
  Eigen::Matrix3d power = Phi;
  for (int k = 1; k <= N; ++k) {
    p.Pp.row(k - 1) = power.row(0);
    p.Pv.row(k - 1) = power.row(1);
    p.Pa.row(k - 1) = power.row(2);
    power = Phi * power;
    for (int i = 0; i < k; ++i) {
      const Eigen::Vector3d& col = phi_gamma[static_cast<std::size_t>(k - 1 - i)];
      p.Up(k - 1, i) = col(0);
      p.Uv(k - 1, i) = col(1);
      p.Ua(k - 1, i) = col(2);
    }
  }
  return p;
}

int samples_per_step(const GaitTask& task, double dt) {
  const double ratio = task.step_duration / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("gait: step_duration must be a whole multiple of sample_period");
  }
  return static_cast<int>(rounded);
}

Side footstep_side(const GaitTask& task, int s) {
  return (s % 2 == 0) ? task.initial_stance_side : opposite(task.initial_stance_side);
}

// Lateral displacement bounds for placing footstep s (s >= 1).
std::pair<double, double> lateral_bounds(const GaitTask& task, int s) {
  if (footstep_side(task, s) == Side::left) return {task.step_min.y(), task.step_max.y()};
  return {-task.step_max.y(), -task.step_min.y()};
}

}  // namespace

void GaitWeights::validate() const {
  for (double w : as_array()) {
    if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("gait weights must be finite and >= 0");
  }
}

void GaitTask::validate() const {
  if (n_steps < 1) throw std::invalid_argument("gait task: empty horizon (n_steps < 1)");
  if (!(step_duration > 0.0)) throw std::invalid_argument("gait task: step_duration must be > 0");
  if (!(foot_half_length > 0.0) || !(foot_half_width > 0.0)) {
    throw std::invalid_argument("gait task: foot dimensions must be > 0");
  }
  if (!(friction_limit > 0.0)) throw std::invalid_argument("gait task: friction_limit must be > 0");
  if (!(step_min.array() <= step_max.array()).all()) {
    throw std::invalid_argument("gait task: step_min must not exceed step_max");
  }
  if (!desired_velocity.empty() && static_cast<int>(desired_velocity.size()) != n_steps) {
    throw std::invalid_argument("gait task: desired_velocity needs one entry per step");
  }
  if (!(swing_apex > 0.0)) throw std::invalid_argument("gait task: swing_apex must be > 0");
}

Vec2 GaitTask::velocity_for_step(int step) const {
  if (desired_velocity.empty()) return Vec2::Zero();
  return desired_velocity.at(static_cast<std::size_t>(std::clamp(step, 0, n_steps - 1)));
}

std::array<Vec2, 8> friction_pyramid_normals() {
  std::array<Vec2, 8> normals;
  const double inv = 1.0 / std::cos(std::numbers::pi / 8.0);
  for (int j = 0; j < 8; ++j) {
    const double theta = std::numbers::pi / 8.0 + j * std::numbers::pi / 4.0;
    normals[static_cast<std::size_t>(j)] = inv * Vec2(std::cos(theta), std::sin(theta));
  }
  return normals;
}

GaitProblem build_problem(const GaitTask& task, const GaitWeights& weights,
                          const ComState& initial, const LipmParams& params) {
  task.validate();
  weights.validate();
  params.validate();
  if (!initial.finite()) throw std::invalid_argument("gait: non-finite initial state");

  const double dt = params.sample_period;
  const int S = samples_per_step(task, dt);
  const int n = task.n_steps;
  const int N = S * n;
  const double h_over_g = params.com_height / params.gravity;
  const double g2 = params.gravity * params.gravity;

  GaitProblem gp;
  gp.layout = {N, n};
  const DecisionLayout& L = gp.layout;
  const int dim = L.size();

  gp.step_of_sample.resize(static_cast<std::size_t>(N));
  for (int k = 1; k <= N; ++k) gp.step_of_sample[static_cast<std::size_t>(k - 1)] = (k - 1) / S;

  // F(k, r) = 1 when displacement r (footstep r+1) is part of the stance foot at sample k.
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(N, n);
  for (int k = 0; k < N; ++k) {
    for (int r = 0; r < gp.step_of_sample[static_cast<std::size_t>(k)]; ++r) F(k, r) = 1.0;
  }

  const AxisPrediction pred = predict(N, dt);
  const Eigen::MatrixXd Uz = pred.Up - h_over_g * pred.Ua;
  const Eigen::MatrixXd Pz = pred.Pp - h_over_g * pred.Pa;

  QpProblem& qp = gp.qp;
  qp.hessian = Eigen::MatrixXd::Zero(dim, dim);
  qp.linear = Eigen::VectorXd::Zero(dim);
  double offset = 0.0;

  const double alpha[2] = {weights.alpha_x, weights.alpha_y};
  const double beta[2] = {weights.beta_x, weights.beta_y};
  const double gamma[2] = {weights.gamma_x, weights.gamma_y};

  // Affine ZMP-minus-foot-center map per axis: E [j; d] + e0.
  std::array<Eigen::MatrixXd, 2> E;
  std::array<Eigen::VectorXd, 2> e0;
  std::array<Eigen::VectorXd, 2> a0;

  for (int axis = 0; axis < 2; ++axis) {
    const Eigen::Vector3d s0(initial.position(axis), initial.velocity(axis), initial.acceleration(axis));
    Eigen::VectorXd vref(N);
    for (int k = 0; k < N; ++k) vref(k) = task.velocity_for_step(gp.step_of_sample[static_cast<std::size_t>(k)])(axis);

    const int j0 = L.jerk(axis, 0);
    const int d0 = L.step(axis, 0);

    // alpha * ||Uv j + Pv s0 - vref||^2
    const Eigen::VectorXd v_free = pred.Pv * s0 - vref;
    qp.hessian.block(j0, j0, N, N) += 2.0 * alpha[axis] * pred.Uv.transpose() * pred.Uv;
    qp.linear.segment(j0, N) += 2.0 * alpha[axis] * pred.Uv.transpose() * v_free;
    offset += alpha[axis] * v_free.squaredNorm();

    // beta * ||Uz j - F d + Pz s0 - p0||^2
    E[axis].resize(N, N + n);
    E[axis] << Uz, -F;
    e0[axis] = Pz * s0 - Eigen::VectorXd::Constant(N, task.initial_stance(axis));
    if (beta[axis] != 0.0) {
      const Eigen::MatrixXd EtE = E[axis].transpose() * E[axis];
      const Eigen::VectorXd Ete = E[axis].transpose() * e0[axis];
      qp.hessian.block(j0, j0, N, N) += 2.0 * beta[axis] * EtE.topLeftCorner(N, N);
      qp.hessian.block(j0, d0, N, n) += 2.0 * beta[axis] * EtE.topRightCorner(N, n);
      qp.hessian.block(d0, j0, n, N) += 2.0 * beta[axis] * EtE.bottomLeftCorner(n, N);
      qp.hessian.block(d0, d0, n, n) += 2.0 * beta[axis] * EtE.bottomRightCorner(n, n);
      qp.linear.segment(j0, N) += 2.0 * beta[axis] * Ete.head(N);
      qp.linear.segment(d0, n) += 2.0 * beta[axis] * Ete.tail(n);
      offset += beta[axis] * e0[axis].squaredNorm();
    }

    // gamma * ||(Ua j + Pa s0) / g||^2
    a0[axis] = pred.Pa * s0;
    if (gamma[axis] != 0.0) {
      qp.hessian.block(j0, j0, N, N) += 2.0 * gamma[axis] / g2 * pred.Ua.transpose() * pred.Ua;
      qp.linear.segment(j0, N) += 2.0 * gamma[axis] / g2 * pred.Ua.transpose() * a0[axis];
      offset += gamma[axis] / g2 * a0[axis].squaredNorm();
    }
  }
  qp.hessian = 0.5 * (qp.hessian + qp.hessian.transpose()).eval();
  gp.cost_offset = offset;

  const int rows = 4 * N + 8 * N + 4 * n;
  qp.constraint_matrix = Eigen::MatrixXd::Zero(rows, dim);
  qp.constraint_bound = Eigen::VectorXd::Zero(rows);
  qp.row_group.assign(static_cast<std::size_t>(rows), 0);
  qp.group_names = {"support_polygon", "friction_cone", "reachable_area"};
  int row = 0;

  // Support polygon: |z_a - p_a| <= half_a at every sample.
  const double half[2] = {task.foot_half_length, task.foot_half_width};
  for (int k = 0; k < N; ++k) {
    for (int axis = 0; axis < 2; ++axis) {
      for (double sign : {1.0, -1.0}) {
        qp.constraint_matrix.block(row, L.jerk(axis, 0), 1, N) = sign * E[axis].block(k, 0, 1, N);
        qp.constraint_matrix.block(row, L.step(axis, 0), 1, n) = sign * E[axis].block(k, N, 1, n);
        qp.constraint_bound(row) = half[axis] - sign * e0[axis](k);
        qp.row_group[static_cast<std::size_t>(row)] = kSupportPolygon;
        ++row;
      }
    }
  }

  // Friction pyramid on the CoM acceleration.
  const double limit = task.friction_limit * params.gravity;
  const auto normals = friction_pyramid_normals();
  for (int k = 0; k < N; ++k) {
    for (const Vec2& nrm : normals) {
      for (int axis = 0; axis < 2; ++axis) {
        qp.constraint_matrix.block(row, L.jerk(axis, 0), 1, N) += nrm(axis) * pred.Ua.row(k);
      }
      qp.constraint_bound(row) = limit - nrm.x() * a0[0](k) - nrm.y() * a0[1](k);
      qp.row_group[static_cast<std::size_t>(row)] = kFrictionCone;
      ++row;
    }
  }

  // Reachable area: footstep displacement boxes.
  for (int s = 0; s < n; ++s) {
    const auto [ymin, ymax] = lateral_bounds(task, s + 1);
    const double lo[2] = {task.step_min.x(), ymin};
    const double hi[2] = {task.step_max.x(), ymax};
    for (int axis = 0; axis < 2; ++axis) {
      qp.constraint_matrix(row, L.step(axis, s)) = 1.0;
      qp.constraint_bound(row) = hi[axis];
      qp.row_group[static_cast<std::size_t>(row)] = kReachableArea;
      ++row;
      qp.constraint_matrix(row, L.step(axis, s)) = -1.0;
      qp.constraint_bound(row) = -lo[axis];
      qp.row_group[static_cast<std::size_t>(row)] = kReachableArea;
      ++row;
    }
  }
  return gp;
}

GaitPlan plan_gait(const GaitTask& task, const GaitWeights& weights,
                   const ComState& initial, const LipmParams& params,
                   const QpSettings& settings) {
  const GaitProblem problem = build_problem(task, weights, initial, params);
  const QpSolution sol = solve_qp(problem.qp, settings);
  if (sol.status != QpStatus::optimal) {
    const std::string family = sol.status == QpStatus::infeasible
                                   ? problem.qp.group_of_row(sol.blocking_row)
                                   : std::string("solver");
    throw GaitInfeasible(family, std::string("gait QP ") + to_string(sol.status) +
                                     " (constraint family: " + family + ")");
  }

  const DecisionLayout& L = problem.layout;
  const int N = L.samples;
  const int n = L.steps;
  const double dt = params.sample_period;
  const int S = N / n;

  GaitPlan plan;
  plan.sample_period = dt;
  plan.step_duration = task.step_duration;
  plan.foot_half_length = task.foot_half_length;
  plan.foot_half_width = task.foot_half_width;
  plan.com_height = params.com_height;
  plan.status = sol.status;
  plan.residuals = sol.residuals;
  plan.qp_iterations = sol.iterations;
  plan.qp_cost = sol.objective + problem.cost_offset;

  plan.footsteps.push_back(task.initial_stance);
  plan.footstep_side.push_back(task.initial_stance_side);
  for (int s = 0; s < n; ++s) {
    const Vec2 d(sol.x(L.step(0, s)), sol.x(L.step(1, s)));
    plan.footsteps.push_back(plan.footsteps.back() + d);
    plan.footstep_side.push_back(footstep_side(task, s + 1));
  }

  plan.jerk.resize(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) plan.jerk[static_cast<std::size_t>(k)] = Vec2(sol.x(L.jerk(0, k)), sol.x(L.jerk(1, k)));

  ComState state = initial;
  for (int k = 0; k <= N; ++k) {
    if (k > 0) state = propagate(state, plan.jerk[static_cast<std::size_t>(k - 1)], params);
    const int step = k == 0 ? 0 : (k - 1) / S;
    plan.time.push_back(k * dt);
    plan.com.push_back(state);
    plan.zmp.push_back(zmp_of(state, params));
    plan.rcof.push_back(rcof_of(state, params));
    plan.support.push_back(step);
    plan.reference_velocity.push_back(task.velocity_for_step(step));
  }

  // The swing foot of step s leaves the previous stance and lands on footstep
  // s+1 at the contact switch time (see support_at).
  Vec2 swing_from = task.initial_swing;
  for (int s = 0; s < n; ++s) {
    plan.swings.push_back(plan_swing(swing_from, plan.footsteps[static_cast<std::size_t>(s + 1)],
                                     task.swing_apex, task.step_duration,
                                     s * task.step_duration + 0.5 * dt));
    swing_from = plan.footsteps[static_cast<std::size_t>(s)];
  }
  return plan;
}

ComState GaitPlan::state_at(double t) const {
  if (com.empty()) throw std::logic_error("state_at on empty plan");
  if (t <= 0.0) return com.front();
  const int N = samples();
  const double horizon = N * sample_period;
  if (t >= horizon) return com.back();
  const int k = std::min(static_cast<int>(std::floor(t / sample_period)), N - 1);
  const double tau = t - k * sample_period;
  if (tau <= 0.0) return com[static_cast<std::size_t>(k)];
  return propagate(com[static_cast<std::size_t>(k)], jerk[static_cast<std::size_t>(k)], tau);
}

int GaitPlan::support_at(double t) const {
  const int last = static_cast<int>(footsteps.size()) - 2;
  if (t <= 0.0 || last < 0) return 0;
  // Contact switches halfway between the last sample constrained to one foot
  // and the first sample constrained to the next.
  const double shifted = t - 0.5 * sample_period;
  if (shifted <= 0.0) return 0;
  const int s = static_cast<int>(std::floor(shifted / step_duration * (1.0 + 1e-12)));
  return std::clamp(s, 0, last);
}

double GaitPlan::max_zmp_offset() const {
  double worst = 0.0;
  for (std::size_t k = 1; k < zmp.size(); ++k) {
    const Vec2 off = zmp[k] - footsteps[static_cast<std::size_t>(support[k])];
    worst = std::max(worst, off.cwiseAbs().maxCoeff());
  }
  return worst;
}

double GaitPlan::max_rcof() const {
  double worst = 0.0;
  for (std::size_t k = 1; k < rcof.size(); ++k) worst = std::max(worst, rcof[k]);
  return worst;
}

double GaitPlan::mean_step_length() const {
  if (footsteps.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t s = 1; s < footsteps.size(); ++s) total += std::abs(footsteps[s].x() - footsteps[s - 1].x());
  return total / static_cast<double>(footsteps.size() - 1);
}

double PlanViolations::max() const {
  return std::max({support_polygon, friction, reachable});
}

PlanViolations check_plan(const GaitPlan& plan, const GaitTask& task,
                          const LipmParams& params) {
  PlanViolations v;
  for (std::size_t k = 1; k < plan.com.size(); ++k) {
    const Vec2 z = zmp_of(plan.com[k], params);
    const Vec2 foot = plan.footsteps.at(static_cast<std::size_t>(plan.support[k]));
    const Vec2 off = (z - foot).cwiseAbs();
    v.support_polygon = std::max({v.support_polygon, off.x() - task.foot_half_length,
                                  off.y() - task.foot_half_width});
    v.friction = std::max(v.friction, rcof_of(plan.com[k], params) - task.friction_limit);
  }
  for (std::size_t s = 1; s < plan.footsteps.size(); ++s) {
    const Vec2 d = plan.footsteps[s] - plan.footsteps[s - 1];
    const bool left = plan.footstep_side[s] == Side::left;
    const double ylo = left ? task.step_min.y() : -task.step_max.y();
    const double yhi = left ? task.step_max.y() : -task.step_min.y();
    v.reachable = std::max({v.reachable, task.step_min.x() - d.x(), d.x() - task.step_max.x(),
                            ylo - d.y(), d.y() - yhi});
  }
  v.support_polygon = std::max(0.0, v.support_polygon);
  v.friction = std::max(0.0, v.friction);
  v.reachable = std::max(0.0, v.reachable);
  return v;
}

}  // namespace gaittune
