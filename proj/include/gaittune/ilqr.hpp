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

// Box-constrained iterative LQR (deterministic iLQG) over fixed-size Eigen
// types. A Model provides
//   static constexpr int kStateDim, kControlDim;
//   State step(const State& x, const Control& u, int t) const;
//   void linearize(const State& x, const Control& u, int t, StateMatrix& A, ControlMatrix& B) const;
// and a Cost provides
//   double stage(const State& x, const Control& u, int t) const;
//   double terminal(const State& x) const;
//   void stage_expansion(x, u, t, lx, lu, lxx, luu, lux) const;
//   void terminal_expansion(x, lx, lxx) const;

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace gaittune {

template <int Nx, int Nu>
struct LqTypes {
  using State = Eigen::Matrix<double, Nx, 1>;
  using Control = Eigen::Matrix<double, Nu, 1>;
  using StateMatrix = Eigen::Matrix<double, Nx, Nx>;
  using ControlMatrix = Eigen::Matrix<double, Nx, Nu>;
  using ControlHessian = Eigen::Matrix<double, Nu, Nu>;
  using Gain = Eigen::Matrix<double, Nu, Nx>;
};

template <int Nu>
struct BoxQpResult {
  using Control = Eigen::Matrix<double, Nu, 1>;
  Control x = Control::Zero();
  Eigen::Matrix<bool, Nu, 1> free;
  bool ok = false;
  int iterations = 0;
};

/// Projected-Newton solver for min 0.5 x'Hx + g'x, lower <= x <= upper.
/// `free` marks components not held at a bound by the final gradient.
template <int Nu>
BoxQpResult<Nu> solve_box_qp(const Eigen::Matrix<double, Nu, Nu>& H,
                             const Eigen::Matrix<double, Nu, 1>& g,
                             const Eigen::Matrix<double, Nu, 1>& lower,
                             const Eigen::Matrix<double, Nu, 1>& upper,
                             const Eigen::Matrix<double, Nu, 1>& warm_start) {
  using Control = Eigen::Matrix<double, Nu, 1>;
  BoxQpResult<Nu> r;
  Control x = warm_start.cwiseMax(lower).cwiseMin(upper);
  auto value = [&](const Control& v) { return 0.5 * v.dot(H * v) + g.dot(v); };
  double fx = value(x);
  r.free.setConstant(true);

  for (int iter = 0; iter < 100; ++iter) {
    r.iterations = iter + 1;
    const Control grad = g + H * x;
    Eigen::Matrix<bool, Nu, 1> clamped;
    for (int i = 0; i < Nu; ++i) {
      clamped(i) = (x(i) <= lower(i) && grad(i) > 0.0) || (x(i) >= upper(i) && grad(i) < 0.0);
    }
    r.free = clamped.unaryExpr([](bool c) { return !c; });
    if (!r.free.any()) {
      r.ok = true;
      break;
    }

    // Newton step on the free subspace with clamped components held fixed.
    int nf = 0;
    std::array<int, Nu> idx{};
    for (int i = 0; i < Nu; ++i)
      if (r.free(i)) idx[static_cast<std::size_t>(nf++)] = i;
    Eigen::MatrixXd Hff(nf, nf);
    Eigen::VectorXd gf(nf);
    for (int a = 0; a < nf; ++a) {
      gf(a) = grad(idx[static_cast<std::size_t>(a)]);
      for (int b = 0; b < nf; ++b) Hff(a, b) = H(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    if (gf.norm() < 1e-12 * (1.0 + g.norm())) {
      r.ok = true;
      break;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(Hff);
    if (llt.info() != Eigen::Success) {
      r.ok = false;
      r.x = x;
      return r;
    }
    const Eigen::VectorXd df = -llt.solve(gf);
    Control dir = Control::Zero();
    for (int a = 0; a < nf; ++a) dir(idx[static_cast<std::size_t>(a)]) = df(a);

    // Armijo search along the projected arc.
    const double slope = grad.dot(dir);
    double step = 1.0;
    Control candidate;
    double fc = fx;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      candidate = (x + step * dir).cwiseMax(lower).cwiseMin(upper);
      fc = value(candidate);
      if (fc <= fx + 0.1 * step * slope || fc <= fx - 1e-15 * std::abs(fx)) {
        accepted = true;
        break;
      }
      step *= 0.6;
    }
    if (!accepted) {
      r.ok = true;
      break;
    }
    const double improvement = fx - fc;
    x = candidate;
    fx = fc;
    if (improvement < 1e-14 * (1.0 + std::abs(fx))) {
      r.ok = true;
    }
  }
  // Final free set from the converged point.
  const Control grad = g + H * x;
  for (int i = 0; i < Nu; ++i) {
    r.free(i) = !((x(i) <= lower(i) && grad(i) > 0.0) || (x(i) >= upper(i) && grad(i) < 0.0));
  }
  r.ok = true;
  r.x = x;
  return r;
}

struct IlqrSettings {
  int max_iterations = 50;
  double backtrack_factor = 0.5;
  int max_backtracks = 10;
  double accept_ratio = 0.1;        // actual / expected decrease
  double tolerance = 1e-6;          // relative cost decrease to stop
  double reg_initial = 1e-6;
  double reg_floor = 1e-9;
  double reg_increase = 10.0;
  double reg_decrease = 0.5;
  double reg_max = 1e10;
};

template <class Model>
struct IlqrTrajectory {
  using T = LqTypes<Model::kStateDim, Model::kControlDim>;
  std::vector<typename T::State> states;      // H+1
  std::vector<typename T::Control> controls;  // H
  double cost = 0.0;
};

template <class Model>
struct IlqrPolicy {
  using T = LqTypes<Model::kStateDim, Model::kControlDim>;
  std::vector<typename T::Control> feedforward;  // k_t
  std::vector<typename T::Gain> feedback;        // K_t
  double expected_linear = 0.0;                  // sum k'Qu
  double expected_quadratic = 0.0;               // sum 0.5 k'Quu k

  /// Predicted cost reduction for line-search step `a` (>= 0 on success).
  double expected_decrease(double a) const {
    return -(a * expected_linear + a * a * expected_quadratic);
  }
};

struct IlqrStats {
  int iterations = 0;
  int accepted = 0;
  bool converged = false;
  bool failed = false;
  std::vector<double> cost_history;   // one entry per accepted iterate, starting with the initial cost
  std::vector<double> reg_history;
  std::vector<double> step_history;   // line-search step of each accepted iterate
};

template <class Model, class Cost>
class IlqrSolver {
 public:
  static constexpr int Nx = Model::kStateDim;
  static constexpr int Nu = Model::kControlDim;
  using T = LqTypes<Nx, Nu>;
  using State = typename T::State;
  using Control = typename T::Control;
  using StateMatrix = typename T::StateMatrix;
  using ControlMatrix = typename T::ControlMatrix;
  using ControlHessian = typename T::ControlHessian;
  using Gain = typename T::Gain;
  using Trajectory = IlqrTrajectory<Model>;
  using Policy = IlqrPolicy<Model>;

  struct Derivatives {
    std::vector<StateMatrix> A;
    std::vector<ControlMatrix> B;
    std::vector<State> lx;
    std::vector<Control> lu;
    std::vector<StateMatrix> lxx;
    std::vector<ControlHessian> luu;
    std::vector<Gain> lux;
  };

  IlqrSolver(const Model& model, const Cost& cost, IlqrSettings settings = {})
      : model_(model), cost_(cost), settings_(settings) {}

  const IlqrSettings& settings() const { return settings_; }

  Trajectory rollout(const State& x0, const std::vector<Control>& controls) const {
    Trajectory traj;
    const int H = static_cast<int>(controls.size());
    traj.states.resize(static_cast<std::size_t>(H) + 1);
    traj.controls = controls;
    traj.states[0] = x0;
    for (int t = 0; t < H; ++t) {
      traj.states[static_cast<std::size_t>(t) + 1] =
          model_.step(traj.states[static_cast<std::size_t>(t)], controls[static_cast<std::size_t>(t)], t);
    }
    traj.cost = total_cost(traj);
    return traj;
  }

  double total_cost(const Trajectory& traj) const {
    double c = 0.0;
    const int H = static_cast<int>(traj.controls.size());
    for (int t = 0; t < H; ++t) {
      c += cost_.stage(traj.states[static_cast<std::size_t>(t)], traj.controls[static_cast<std::size_t>(t)], t);
    }
    return c + cost_.terminal(traj.states.back());
  }

  Derivatives linearize(const Trajectory& traj) const {
    const int H = static_cast<int>(traj.controls.size());
    Derivatives d;
    d.A.resize(static_cast<std::size_t>(H));
    d.B.resize(static_cast<std::size_t>(H));
    d.lx.resize(static_cast<std::size_t>(H) + 1);
    d.lu.resize(static_cast<std::size_t>(H));
    d.lxx.resize(static_cast<std::size_t>(H) + 1);
    d.luu.resize(static_cast<std::size_t>(H));
    d.lux.resize(static_cast<std::size_t>(H));
    for (int t = 0; t < H; ++t) {
      const auto i = static_cast<std::size_t>(t);
      model_.linearize(traj.states[i], traj.controls[i], t, d.A[i], d.B[i]);
      cost_.stage_expansion(traj.states[i], traj.controls[i], t, d.lx[i], d.lu[i], d.lxx[i], d.luu[i], d.lux[i]);
    }
    cost_.terminal_expansion(traj.states.back(), d.lx.back(), d.lxx.back());
    return d;
  }

  /// Riccati-like sweep with the control subproblem solved over the box
  /// [lower_t - u_t, upper_t - u_t]. Returns false when a control Hessian is
  /// not positive definite at the given regularization.
  bool backward_pass(const Trajectory& nominal, const Derivatives& d,
                     const std::vector<Control>& lower, const std::vector<Control>& upper,
                     double reg, Policy& policy) const {
    const int H = static_cast<int>(nominal.controls.size());
    policy.feedforward.resize(static_cast<std::size_t>(H), Control::Zero());
    policy.feedback.resize(static_cast<std::size_t>(H), Gain::Zero());
    policy.expected_linear = 0.0;
    policy.expected_quadratic = 0.0;

    State Vx = d.lx.back();
    StateMatrix Vxx = d.lxx.back();
    for (int t = H - 1; t >= 0; --t) {
      const auto i = static_cast<std::size_t>(t);
      const State Qx = d.lx[i] + d.A[i].transpose() * Vx;
      const Control Qu = d.lu[i] + d.B[i].transpose() * Vx;
      const StateMatrix Qxx = d.lxx[i] + d.A[i].transpose() * Vxx * d.A[i];
      ControlHessian Quu = d.luu[i] + d.B[i].transpose() * Vxx * d.B[i];
      Quu = 0.5 * (Quu + Quu.transpose()).eval();
      const Gain Qux = d.lux[i] + d.B[i].transpose() * Vxx * d.A[i];
      const ControlHessian QuuReg = Quu + reg * ControlHessian::Identity();

      const Control lo = lower[i] - nominal.controls[i];
      const Control hi = upper[i] - nominal.controls[i];
      const BoxQpResult<Nu> qp = solve_box_qp<Nu>(QuuReg, Qu, lo, hi, policy.feedforward[i].cwiseMax(lo).cwiseMin(hi));
      if (!qp.ok) return false;

      Control k = qp.x;
      Gain K = Gain::Zero();
      if (qp.free.any()) {
        int nf = 0;
        std::array<int, Nu> idx{};
        for (int a = 0; a < Nu; ++a)
          if (qp.free(a)) idx[static_cast<std::size_t>(nf++)] = a;
        Eigen::MatrixXd Hff(nf, nf);
        Eigen::MatrixXd Qf(nf, Nx);
        for (int a = 0; a < nf; ++a) {
          Qf.row(a) = Qux.row(idx[static_cast<std::size_t>(a)]);
          for (int b = 0; b < nf; ++b) Hff(a, b) = QuuReg(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
        }
        Eigen::LLT<Eigen::MatrixXd> llt(Hff);
        if (llt.info() != Eigen::Success) return false;
        const Eigen::MatrixXd Kf = -llt.solve(Qf);
        for (int a = 0; a < nf; ++a) K.row(idx[static_cast<std::size_t>(a)]) = Kf.row(a);
      }

      policy.feedforward[i] = k;
      policy.feedback[i] = K;
      policy.expected_linear += k.dot(Qu);
      policy.expected_quadratic += 0.5 * k.dot(Quu * k);

      Vx = Qx + K.transpose() * Quu * k + K.transpose() * Qu + Qux.transpose() * k;
      Vxx = Qxx + K.transpose() * Quu * K + K.transpose() * Qux + Qux.transpose() * K;
      Vxx = 0.5 * (Vxx + Vxx.transpose()).eval();
      if (!Vx.allFinite() || !Vxx.allFinite()) return false;
    }
    return true;
  }

  /// Closed-loop rollout u = clamp(u_nom + step * k + K (x - x_nom)).
  Trajectory forward_pass(const Trajectory& nominal, const Policy& policy, double step,
                          const std::vector<Control>& lower, const std::vector<Control>& upper) const {
    const int H = static_cast<int>(nominal.controls.size());
    Trajectory traj;
    traj.states.resize(static_cast<std::size_t>(H) + 1);
    traj.controls.resize(static_cast<std::size_t>(H));
    traj.states[0] = nominal.states[0];
    for (int t = 0; t < H; ++t) {
      const auto i = static_cast<std::size_t>(t);
      Control u = nominal.controls[i] + step * policy.feedforward[i] +
                  policy.feedback[i] * (traj.states[i] - nominal.states[i]);
      u = u.cwiseMax(lower[i]).cwiseMin(upper[i]);
      traj.controls[i] = u;
      traj.states[i + 1] = model_.step(traj.states[i], u, t);
    }
    traj.cost = total_cost(traj);
    return traj;
  }

  /// Full optimization from x0 and an initial control guess (clamped to the
  /// box first). The returned trajectory is the best one found.
  Trajectory solve(const State& x0, std::vector<Control> guess,
                   const std::vector<Control>& lower, const std::vector<Control>& upper,
                   IlqrStats* stats = nullptr, Policy* last_policy = nullptr) const {
    for (std::size_t i = 0; i < guess.size(); ++i) guess[i] = guess[i].cwiseMax(lower[i]).cwiseMin(upper[i]);
    Trajectory nominal = rollout(x0, guess);
    IlqrStats local;
    IlqrStats& st = stats != nullptr ? *stats : local;
    st = IlqrStats{};
    st.cost_history.push_back(nominal.cost);
    if (!std::isfinite(nominal.cost)) {
      st.failed = true;
      return nominal;
    }

    double reg = std::max(settings_.reg_initial, settings_.reg_floor);
    Policy policy;
    for (int iter = 0; iter < settings_.max_iterations; ++iter) {
      st.iterations = iter + 1;
      const Derivatives d = linearize(nominal);

      bool backward_ok = false;
      while (reg <= settings_.reg_max) {
        if (backward_pass(nominal, d, lower, upper, reg, policy)) {
          backward_ok = true;
          break;
        }
        reg *= settings_.reg_increase;
      }
      st.reg_history.push_back(reg);
      if (!backward_ok) {
        st.failed = true;
        break;
      }

      const double full_decrease = policy.expected_decrease(1.0);
      if (full_decrease < settings_.tolerance * std::max(1e-12, std::abs(nominal.cost)) * 1e-3) {
        st.converged = true;
        break;
      }

      bool accepted = false;
      double step = 1.0;
      Trajectory candidate;
      for (int ls = 0; ls <= settings_.max_backtracks; ++ls) {
        candidate = forward_pass(nominal, policy, step, lower, upper);
        const double actual = nominal.cost - candidate.cost;
        const double expected = policy.expected_decrease(step);
        if (std::isfinite(candidate.cost) && actual > 0.0 &&
            actual >= settings_.accept_ratio * expected) {
          accepted = true;
          break;
        }
        step *= settings_.backtrack_factor;
      }

      if (!accepted) {
        reg *= settings_.reg_increase;
        if (reg > settings_.reg_max) break;
        continue;
      }
      const double rel = (nominal.cost - candidate.cost) / std::max(1e-12, std::abs(nominal.cost));
      nominal = std::move(candidate);
      ++st.accepted;
      st.cost_history.push_back(nominal.cost);
      st.step_history.push_back(step);
      reg = std::max(settings_.reg_floor, reg * settings_.reg_decrease);
      if (rel < settings_.tolerance) {
        st.converged = true;
        break;
      }
    }
    if (last_policy != nullptr) *last_policy = policy;
    return nominal;
  }

 private:
  Model model_;
  Cost cost_;
  IlqrSettings settings_;
};

}  // namespace gaittune
