// Copyright (c) 2026 The chmpc Authors.
// All rights reserved.
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

#include <optional>

#include "chmpc/types.hpp"
#include "chmpc/vehicle.hpp"

namespace chmpc {

/// Parameters of the current-helpfulness gate s_k.
struct GateParams {
  double v_scale = 0.05;  // useful-current scale (m/s)
  double eps_e = 1e-6;    // goal-error norm smoothing (m^2)
  double eps_c = 1e-9;    // current norm smoothing ((m/s)^2)
  void validate() const;
};

enum class CostMode { baseline, shaped };

/// Stage/terminal weights plus the gated-term gains.
struct CostWeights {
  Mat12 Q = Mat12::Zero();
  Mat4 R = Mat4::Identity();
  Mat4 R_s = Mat4::Zero();
  Mat12 Q_f = Mat12::Zero();
  double lambda_relax = 0.0;  // along-track relaxation cap, in [0,1]
  double w_reb = 0.0;         // translational-energy rebate weight
  double e_ref = 1.0;         // rebate knee (units of u_lin' R_lin u_lin)
  double kappa_eff = 0.0;     // effort premium
  double w_glide = 0.0;       // ground-velocity-to-current matching weight

  // The position block of Q is defined as its leading 3x3 block; custom state
  // orderings are not supported and fail the validate() symmetry checks.
  Mat3 Q_pos() const { return Q.topLeftCorner<3, 3>(); }
  Vec3 R_lin_diag() const { return Vec3(R(0, 0), R(1, 1), R(2, 2)); }

  void validate() const;
};

/// Everything needed to evaluate one stage cost.
/// prev_wrench must be present exactly when k > 0.
struct StageContext {
  VehicleState state;
  ControlWrench wrench;
  std::optional<ControlWrench> prev_wrench;
  CurrentSample current;
  Vec12 goal = Vec12::Zero();
  int k = 0;
};

struct AlongTrack {
  Vec3 e;      // goal - position
  Vec3 e_par;  // smoothed projection of e onto its own direction
  Vec3 e_perp() const { return e - e_par; }
};

AlongTrack along_track_error(const Vec3& pos, const Vec3& goal_pos, double eps_e);

double alignment_factor(const Vec3& e, const Vec3& v_c, const GateParams& gp);
double strength_factor(const Vec3& v_c, const GateParams& gp);

/// s = alignment * strength in [0, 1); ~1 only for strong, goal-aligned flow.
double helpfulness(const VehicleState& state, const CurrentSample& current, const Vec3& goal_pos,
                   const GateParams& gp);

double stage_cost(const StageContext& ctx, const CostWeights& w, const GateParams& gp,
                  CostMode mode, const VehicleParams& params,
                  RelVelMode relvel = RelVelMode::full_subtraction);

double terminal_cost(const Vec12& x_N, const Vec12& goal, const Mat12& Q_f);

/// Fixed-point solution of P = Q + A'PA - A'PB (R + B'PB)^-1 B'PA.
/// Throws Error(Errc::dare_divergence) when the iteration fails to reach
/// tol_frob within max_iter (unstabilizable linearization).
MatX solve_dare(const MatX& A, const MatX& B, const MatX& Q, const MatX& R,
                double tol_frob = 1e-8, int max_iter = 20000);

double dare_residual(const MatX& A, const MatX& B, const MatX& Q, const MatX& R, const MatX& P);

/// (A, B) of the Euler prediction model at (x0, u0) with the given current.
void linearize_step_euler(const VehicleParams& params, double dt, const Vec12& x0, const Vec4& u0,
                          const Vec3& v_c, RelVelMode mode, Mat12& A,
                          Eigen::Matrix<double, 12, 4>& B);

/// Terminal weight from the DARE at the goal pose at rest with zero current,
/// using the baseline weights (the gate vanishes at that linearization point).
Mat12 dare_terminal(const VehicleParams& params, double dt, const Mat12& Q, const Mat4& R,
                    const Vec12& goal, RelVelMode relvel = RelVelMode::full_subtraction);

// ---- templated cores (shared with the AD path) -----------------------------

template <typename T, int N>
T quad_form(const Eigen::Matrix<double, N, N>& Q, const Eigen::Matrix<T, N, 1>& d) {
  const Eigen::Matrix<T, N, 1> qd = Q * d;
  T acc(0.0);
  for (int i = 0; i < N; ++i) acc += d[i] * qd[i];
  return acc;
}

/// State-tracking error with attitude components wrapped to [-pi, pi].
template <typename T>
Vec12T<T> tracking_error(const Vec12T<T>& x, const Vec12& goal) {
  Vec12T<T> d;
  for (int i = 0; i < 12; ++i) d[i] = x[i] - goal[i];
  for (int i = 3; i < 6; ++i) d[i] = wrap_angle(d[i]);
  return d;
}

template <typename T>
T helpfulness_t(const Vec3T<T>& pos, const Vec3& v_c, const Vec3& goal_pos, const GateParams& gp) {
  using std::sqrt;
  using std::tanh;
  Vec3T<T> e;
  for (int i = 0; i < 3; ++i) e[i] = goal_pos[i] - pos[i];
  const T n_e = sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2] + gp.eps_e);
  const double n_c = std::sqrt(v_c.squaredNorm() + gp.eps_c);
  // alignment in [0,1]; strength saturates via tanh
  T edotc(0.0);
  for (int i = 0; i < 3; ++i) edotc += e[i] * (v_c[i] / n_c);
  const T align = 0.5 * (1.0 + edotc / n_e);
  return align * std::tanh(n_c / gp.v_scale);
}

/// Combined stage cost. Baseline terms are always evaluated the same way;
/// gated terms are added only in shaped mode and only for nonzero gains, so
/// zeroed gains reproduce the baseline bit for bit.
/// xdot_pos_pre, when given, must be (f(x, u, v_c))_{1:3}; otherwise the
/// glide term evaluates the dynamics itself.
template <typename T>
T stage_cost_t(const Vec12T<T>& x, const Vec4T<T>& u, const Vec4T<T>* u_prev, const Vec3& v_c,
               const Vec12& goal, const CostWeights& w, const GateParams& gp, CostMode mode,
               const VehicleParams& params, RelVelMode relvel,
               const Vec3T<T>* xdot_pos_pre = nullptr) {
  const Vec12T<T> d = tracking_error(x, goal);
  const T effort = quad_form<T, 4>(w.R, u);
  T cost = quad_form<T, 12>(w.Q, d) + effort;
  if (u_prev != nullptr) {
    Vec4T<T> du;
    for (int i = 0; i < 4; ++i) du[i] = u[i] - (*u_prev)[i];
    cost += quad_form<T, 4>(w.R_s, du);
  }
  if (mode == CostMode::baseline) return cost;

  Vec3T<T> pos;
  for (int i = 0; i < 3; ++i) pos[i] = x[i];
  const T s = helpfulness_t<T>(pos, v_c, goal.head<3>(), gp);

  if (w.lambda_relax != 0.0) {
    // ||e_par||^2_{Qpos} with e_par = (m/(m+eps)) e
    Vec3T<T> e;
    for (int i = 0; i < 3; ++i) e[i] = goal[i] - x[i];
    const T m = e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
    const T rho = m / (m + gp.eps_e);
    cost -= s * w.lambda_relax * (rho * rho * quad_form<T, 3>(w.Q_pos(), e));
  }
  if (w.w_reb != 0.0) {
    const Vec3 rl = w.R_lin_diag();
    const T ul2 = rl[0] * u[0] * u[0] + rl[1] * u[1] * u[1] + rl[2] * u[2] * u[2];
    cost -= s * w.w_reb * (w.e_ref / (w.e_ref + ul2));
  }
  if (w.kappa_eff != 0.0) {
    cost += s * w.kappa_eff * effort;
  }
  if (w.w_glide != 0.0) {
    Vec3T<T> xdot_pos;
    if (xdot_pos_pre != nullptr) {
      xdot_pos = *xdot_pos_pre;
    } else {
      const Vec12T<T> f = dynamics_rhs_t<T>(x, u, v_c, params, relvel);
      for (int i = 0; i < 3; ++i) xdot_pos[i] = f[i];
    }
    T g(0.0);
    for (int i = 0; i < 3; ++i) {
      const T di = xdot_pos[i] - v_c[i];
      g += di * di;
    }
    cost += s * w.w_glide * g;
  }
  return cost;
}

template <typename T>
T terminal_cost_t(const Vec12T<T>& x, const Vec12& goal, const Mat12& Q_f) {
  return quad_form<T, 12>(Q_f, tracking_error(x, goal));
}

}  // namespace chmpc
