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

#include "gaittune/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gaittune {

PointMassModel::T::State PointMassModel::step(const T::State& x, const T::Control& u, int) const {
  T::State next;
  Vec3 accel = u / mass;
  accel.z() -= gravity;
  next.tail<3>() = x.tail<3>() + dt * accel;
  next.head<3>() = x.head<3>() + dt * next.tail<3>();
  return next;
}

void PointMassModel::linearize(const T::State&, const T::Control&, int, T::StateMatrix& A,
                               T::ControlMatrix& B) const {
  A.setIdentity();
  A.topRightCorner<3, 3>() = dt * Eigen::Matrix3d::Identity();
  B.topRows<3>() = (dt * dt / mass) * Eigen::Matrix3d::Identity();
  B.bottomRows<3>() = (dt / mass) * Eigen::Matrix3d::Identity();
}

Vec3 LegCopModel::acceleration(const T::State& x, const T::Control& u) const {
  const double fz = u(0);
  const double cz = x(2);
  return Vec3(fz * (x(0) - u(1)) / (mass * cz), fz * (x(1) - u(2)) / (mass * cz), fz / mass - gravity);
}

LegCopModel::T::State LegCopModel::step(const T::State& x, const T::Control& u, int) const {
  T::State next;
  next.tail<3>() = x.tail<3>() + dt * acceleration(x, u);
  next.head<3>() = x.head<3>() + dt * next.tail<3>();
  return next;
}

void LegCopModel::linearize(const T::State& x, const T::Control& u, int, T::StateMatrix& A,
                            T::ControlMatrix& B) const {
  const double fz = u(0);
  const double cz = x(2);
  const double lx = x(0) - u(1);
  const double ly = x(1) - u(2);
  const double k = fz / (mass * cz);

  // Partial derivatives of the acceleration.
  Eigen::Matrix3d da_dc = Eigen::Matrix3d::Zero();
  da_dc(0, 0) = k;
  da_dc(0, 2) = -k * lx / cz;
  da_dc(1, 1) = k;
  da_dc(1, 2) = -k * ly / cz;
  Eigen::Matrix3d da_du = Eigen::Matrix3d::Zero();
  da_du(0, 0) = lx / (mass * cz);
  da_du(1, 0) = ly / (mass * cz);
  da_du(2, 0) = 1.0 / mass;
  da_du(0, 1) = -k;
  da_du(1, 2) = -k;

  A.setZero();
  A.bottomLeftCorner<3, 3>() = dt * da_dc;
  A.bottomRightCorner<3, 3>() = Eigen::Matrix3d::Identity();
  A.topLeftCorner<3, 3>() = Eigen::Matrix3d::Identity() + dt * dt * da_dc;
  A.topRightCorner<3, 3>() = dt * Eigen::Matrix3d::Identity();
  B.bottomRows<3>() = dt * da_du;
  B.topRows<3>() = dt * dt * da_du;
}

double smooth_abs(double x, double eps) { return std::sqrt(x * x + eps * eps) - eps; }

void TrackerWeights::validate() const {
  if (!(position >= 0.0 && velocity >= 0.0 && cop >= 0.0 && effort >= 0.0 && height >= 0.0 &&
        terminal >= 0.0)) {
    throw std::invalid_argument("tracker weights must be >= 0");
  }
  if (!(smooth_eps > 0.0)) throw std::invalid_argument("tracker smooth_eps must be > 0");
}

double TrackerCost::state_cost(const T::State& x, int t) const {
  const auto i = static_cast<std::size_t>(t);
  const Vec3& c = com_ref[i];
  const double eps = weights.smooth_eps;
  double cost = weights.position * (smooth_abs(x(0) - c.x(), eps) + smooth_abs(x(1) - c.y(), eps));
  cost += weights.height * (x(2) - c.z()) * (x(2) - c.z());
  cost += weights.velocity * (x.tail<3>() - velocity_ref[i]).squaredNorm();
  return cost;
}

double TrackerCost::stage(const T::State& x, const T::Control& u, int t) const {
  const Vec2 cop_err = u.tail<2>() - foot_center[static_cast<std::size_t>(t)];
  const double effort = (u(0) - weight_force) / weight_force;
  return state_cost(x, t) + weights.cop * cop_err.squaredNorm() + weights.effort * effort * effort;
}

double TrackerCost::terminal(const T::State& x) const {
  return weights.terminal * state_cost(x, static_cast<int>(foot_center.size()));
}

void TrackerCost::state_expansion(const T::State& x, int t, double scale, T::State& lx,
                                  T::StateMatrix& lxx) const {
  const auto i = static_cast<std::size_t>(t);
  const Vec3& c = com_ref[i];
  const double eps = weights.smooth_eps;
  lx.setZero();
  lxx.setZero();
  for (int a = 0; a < 2; ++a) {
    const double e = x(a) - c(a);
    const double r = std::sqrt(e * e + eps * eps);
    lx(a) = scale * weights.position * e / r;
    lxx(a, a) = scale * weights.position * eps * eps / (r * r * r);
  }
  lx(2) = scale * 2.0 * weights.height * (x(2) - c.z());
  lxx(2, 2) = scale * 2.0 * weights.height;
  lx.tail<3>() = scale * 2.0 * weights.velocity * (x.tail<3>() - velocity_ref[i]);
  lxx.bottomRightCorner<3, 3>() = scale * 2.0 * weights.velocity * Eigen::Matrix3d::Identity();
}

void TrackerCost::stage_expansion(const T::State& x, const T::Control& u, int t, T::State& lx,
                                  T::Control& lu, T::StateMatrix& lxx, T::ControlHessian& luu,
                                  T::Gain& lux) const {
  state_expansion(x, t, 1.0, lx, lxx);
  const double inv = 1.0 / weight_force;
  lu(0) = 2.0 * weights.effort * (u(0) - weight_force) * inv * inv;
  lu.tail<2>() = 2.0 * weights.cop * (u.tail<2>() - foot_center[static_cast<std::size_t>(t)]);
  luu.setZero();
  luu(0, 0) = 2.0 * weights.effort * inv * inv;
  luu(1, 1) = luu(2, 2) = 2.0 * weights.cop;
  lux.setZero();
}

void TrackerCost::terminal_expansion(const T::State& x, T::State& lx, T::StateMatrix& lxx) const {
  state_expansion(x, static_cast<int>(foot_center.size()), weights.terminal, lx, lxx);
}

int TrackerConfig::stages() const {
  return std::max(1, static_cast<int>(std::lround(horizon / control_period)));
}

void TrackerConfig::validate() const {
  if (!(horizon > 0.0)) throw std::invalid_argument("tracker horizon must be > 0");
  if (!(control_period > 0.0)) throw std::invalid_argument("tracker control_period must be > 0");
  if (!(max_normal_force > 0.0)) throw std::invalid_argument("tracker max_normal_force must be > 0");
  if (iterations_per_tick < 1) throw std::invalid_argument("tracker iterations_per_tick must be >= 1");
  weights.validate();
}

IlqrTracker::IlqrTracker(TrackerConfig config) : config_(config) { config_.validate(); }

void IlqrTracker::reset(const GaitPlan& plan, const PlantParams& params) {
  plan_ = &plan;
  plant_ = params;
  model_.mass = params.mass;
  model_.gravity = params.gravity;
  model_.dt = config_.control_period;
  warm_.clear();
  last_command_ << params.mass * params.gravity, plan.footsteps[0];
  cost_trace_.clear();
  iteration_trace_.clear();
}

void IlqrTracker::stage_bounds(const PlantState& state, double time, int t, T::Control& lower,
                               T::Control& upper) const {
  const double tau = time + t * config_.control_period;
  const int s = plan_->support_at(tau);
  const Vec2 foot = s == state.stance_index ? state.stance_foot
                                            : plan_->footsteps[static_cast<std::size_t>(s)];
  const Vec2 half(plant_.foot_half_length, plant_.foot_half_width);
  lower << 0.0, foot - half;
  upper << config_.max_normal_force, foot + half;
}

TrackerCost IlqrTracker::build_cost(const PlantState& state, double time) const {
  const int H = config_.stages();
  TrackerCost cost;
  cost.weights = config_.weights;
  cost.weight_force = plant_.mass * plant_.gravity;
  cost.com_ref.resize(static_cast<std::size_t>(H) + 1);
  cost.velocity_ref.resize(static_cast<std::size_t>(H) + 1);
  cost.foot_center.resize(static_cast<std::size_t>(H));
  for (int t = 0; t <= H; ++t) {
    const double tau = time + t * config_.control_period;
    const ComState ref = plan_->state_at(tau);
    cost.com_ref[static_cast<std::size_t>(t)] << ref.position, plant_.nominal_height;
    cost.velocity_ref[static_cast<std::size_t>(t)] << ref.velocity, 0.0;
    if (t < H) {
      T::Control lo, hi;
      stage_bounds(state, time, t, lo, hi);
      cost.foot_center[static_cast<std::size_t>(t)] = 0.5 * (lo.tail<2>() + hi.tail<2>());
    }
  }
  return cost;
}

ContactCommand IlqrTracker::command(const PlantState& state, double time, bool& ok) {
  if (plan_ == nullptr) throw std::logic_error("IlqrTracker::command before reset");
  const int H = config_.stages();
  std::vector<T::Control> lower(static_cast<std::size_t>(H)), upper(static_cast<std::size_t>(H));
  for (int t = 0; t < H; ++t) stage_bounds(state, time, t, lower[static_cast<std::size_t>(t)], upper[static_cast<std::size_t>(t)]);

  // Warm start: previous solution shifted by one period; otherwise the plan's
  // ZMP under weight support.
  std::vector<T::Control> guess(static_cast<std::size_t>(H));
  const double mg = plant_.mass * plant_.gravity;
  for (int t = 0; t < H; ++t) {
    const auto i = static_cast<std::size_t>(t);
    if (i + 1 < warm_.size()) {
      guess[i] = warm_[i + 1];
    } else if (!warm_.empty()) {
      guess[i] = warm_.back();
    } else {
      const ComState ref = plan_->state_at(time + t * config_.control_period);
      LipmParams lp;
      lp.com_height = plant_.nominal_height;
      lp.gravity = plant_.gravity;
      guess[i] << mg, zmp_of(ref, lp);
    }
  }

  T::State x0;
  x0 << state.com, state.com_velocity;
  IlqrSettings settings = config_.ilqr;
  settings.max_iterations = config_.iterations_per_tick;
  const Solver solver(model_, build_cost(state, time), settings);
  IlqrStats stats;
  const auto traj = solver.solve(x0, guess, lower, upper, &stats);

  ok = std::isfinite(traj.cost) && !traj.controls.empty() && traj.controls.front().allFinite();
  cost_trace_.push_back(traj.cost);
  iteration_trace_.push_back(stats.iterations);
  if (ok) {
    warm_ = traj.controls;
    last_command_ = traj.controls.front();
  } else {
    warm_.clear();
  }
  ContactCommand cmd;
  cmd.normal_force = last_command_(0);
  cmd.cop = last_command_.tail<2>();
  return cmd;
}

}  // namespace gaittune
