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

#include "chmpc/costs.hpp"

#include <cmath>

namespace chmpc {

namespace {

void check_sym_psd(const MatX& m, const char* name, bool strictly_positive) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw Error(Errc::invariant, std::string("weights: ") + name + " must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatX> es(m);
  const double lo = es.eigenvalues().minCoeff();
  if (strictly_positive ? lo <= 0.0 : lo < -1e-9) {
    throw Error(Errc::invariant,
                std::string("weights: ") + name + (strictly_positive ? " must be PD" : " must be PSD"));
  }
}

}  // namespace

void GateParams::validate() const {
  if (!(v_scale > 0.0)) throw Error(Errc::invariant, "gate: v_scale must be > 0");
  if (!(eps_e > 0.0)) throw Error(Errc::invariant, "gate: eps_e must be > 0");
  if (!(eps_c > 0.0)) throw Error(Errc::invariant, "gate: eps_c must be > 0");
}

void CostWeights::validate() const {
  check_sym_psd(Q, "Q", false);
  check_sym_psd(R, "R", true);
  check_sym_psd(R_s, "R_s", false);
  check_sym_psd(Q_f, "Q_f", false);
  if (!(lambda_relax >= 0.0 && lambda_relax <= 1.0)) {
    throw Error(Errc::invariant, "weights: lambda_relax must be in [0, 1]");
  }
  if (!(w_reb >= 0.0)) throw Error(Errc::invariant, "weights: w_reb must be >= 0");
  if (!(e_ref > 0.0)) throw Error(Errc::invariant, "weights: e_ref must be > 0");
  if (!(kappa_eff >= 0.0)) throw Error(Errc::invariant, "weights: kappa_eff must be >= 0");
  if (!(w_glide >= 0.0)) throw Error(Errc::invariant, "weights: w_glide must be >= 0");
}

AlongTrack along_track_error(const Vec3& pos, const Vec3& goal_pos, double eps_e) {
  if (!(eps_e > 0.0)) throw Error(Errc::invariant, "along_track_error: eps_e must be > 0");
  AlongTrack at;
  at.e = goal_pos - pos;
  const double m = at.e.squaredNorm();
  at.e_par = at.e * (m / (m + eps_e));
  return at;
}

double alignment_factor(const Vec3& e, const Vec3& v_c, const GateParams& gp) {
  const double n_e = std::sqrt(e.squaredNorm() + gp.eps_e);
  const double n_c = std::sqrt(v_c.squaredNorm() + gp.eps_c);
  return 0.5 * (1.0 + e.dot(v_c) / (n_e * n_c));
}

double strength_factor(const Vec3& v_c, const GateParams& gp) {
  return std::tanh(std::sqrt(v_c.squaredNorm() + gp.eps_c) / gp.v_scale);
}

double helpfulness(const VehicleState& state, const CurrentSample& current, const Vec3& goal_pos,
                   const GateParams& gp) {
  gp.validate();
  Vec3T<double> pos = state.position();
  return helpfulness_t<double>(pos, current.v_ned, goal_pos, gp);
}

double stage_cost(const StageContext& ctx, const CostWeights& w, const GateParams& gp,
                  CostMode mode, const VehicleParams& params, RelVelMode relvel) {
  if ((ctx.k > 0) != ctx.prev_wrench.has_value()) {
    throw Error(Errc::invariant, "stage context: prev_wrench must be present exactly when k > 0");
  }
  const Vec12 x = ctx.state.as_vector();
  const Vec4 u = ctx.wrench.as_vector();
  Vec4 up;
  const Vec4* up_ptr = nullptr;
  if (ctx.prev_wrench) {
    up = ctx.prev_wrench->as_vector();
    up_ptr = &up;
  }
  return stage_cost_t<double>(x, u, up_ptr, ctx.current.v_ned, ctx.goal, w, gp, mode, params, relvel);
}

double terminal_cost(const Vec12& x_N, const Vec12& goal, const Mat12& Q_f) {
  return terminal_cost_t<double>(x_N, goal, Q_f);
}

MatX solve_dare(const MatX& A, const MatX& B, const MatX& Q, const MatX& R, double tol_frob,
                int max_iter) {
  const auto riccati = [&](const MatX& P) -> MatX {
    const MatX BtP = B.transpose() * P;
    const MatX G = R + BtP * B;
    const MatX K = G.ldlt().solve(BtP * A);  // (R + B'PB)^-1 B'PA
    MatX Pn = Q + A.transpose() * (P * A - P * B * K);
    return 0.5 * (Pn + Pn.transpose());
  };

  MatX P = Q;
  for (int it = 0; it < max_iter; ++it) {
    const MatX Pn = riccati(P);
    const double res = (Pn - P).norm();
    P = Pn;
    if (!P.allFinite()) break;
    if (res <= tol_frob) return P;
  }
  throw Error(Errc::dare_divergence,
              "solve_dare: fixed-point iteration did not reach tolerance (unstabilizable linearization?)");
}

double dare_residual(const MatX& A, const MatX& B, const MatX& Q, const MatX& R, const MatX& P) {
  const MatX BtP = B.transpose() * P;
  const MatX G = R + BtP * B;
  const MatX K = G.ldlt().solve(BtP * A);
  const MatX F = Q + A.transpose() * (P * A - P * B * K);
  return (P - F).norm();
}

void linearize_step_euler(const VehicleParams& params, double dt, const Vec12& x0, const Vec4& u0,
                          const Vec3& v_c, RelVelMode mode, Mat12& A,
                          Eigen::Matrix<double, 12, 4>& B) {
  using D = Dual<16>;
  Vec12T<D> x;
  Vec4T<D> u;
  for (int i = 0; i < 12; ++i) x[i] = D::seed(x0[i], i);
  for (int i = 0; i < 4; ++i) u[i] = D::seed(u0[i], 12 + i);
  const Vec12T<D> xn = step_euler_t<D>(x, u, v_c, params, dt, mode);
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) A(i, j) = xn[i].d[j];
    for (int j = 0; j < 4; ++j) B(i, j) = xn[i].d[12 + j];
  }
}

Mat12 dare_terminal(const VehicleParams& params, double dt, const Mat12& Q, const Mat4& R,
                    const Vec12& goal, RelVelMode relvel) {
  Vec12 x0 = Vec12::Zero();
  x0.head<6>() = goal.head<6>();  // goal pose at rest
  Mat12 A;
  Eigen::Matrix<double, 12, 4> B;
  linearize_step_euler(params, dt, x0, Vec4::Zero(), Vec3::Zero(), relvel, A, B);
  const MatX P = solve_dare(A, B, Q, R);
  return Mat12(P);
}

}  // namespace chmpc
