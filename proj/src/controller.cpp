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

#include "chmpc/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace chmpc {

void OperatingBounds::clamp(ControlWrench& w) const {
  w.X = std::clamp(w.X, -xy_force, xy_force);
  w.Y = std::clamp(w.Y, -xy_force, xy_force);
  w.Z = std::clamp(w.Z, z_force_min, z_force_max);
  w.N_yaw = std::clamp(w.N_yaw, -yaw_moment, yaw_moment);
}

bool OperatingBounds::wrench_ok(const ControlWrench& w, double tol) const {
  return std::abs(w.X) <= xy_force + tol && std::abs(w.Y) <= xy_force + tol &&
         w.Z >= z_force_min - tol && w.Z <= z_force_max + tol &&
         std::abs(w.N_yaw) <= yaw_moment + tol;
}

bool OperatingBounds::velocities_ok(const VehicleState& s, double tol) const {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(s.nu[i]) > vel_lin + tol) return false;
    if (std::abs(s.nu[3 + i]) > vel_ang + tol) return false;
  }
  return true;
}

void MpcConfig::validate() const {
  if (!(dt > 0.0)) throw Error(Errc::invariant, "mpc config: dt must be > 0");
  if (N < 2) throw Error(Errc::invariant, "mpc config: N must be >= 2");
  gate.validate();
  weights.validate();
}

double HorizonPlan::mean_gate() const {
  if (gates.empty()) return 0.0;
  double acc = 0.0;
  for (double s : gates) acc += s;
  return acc / static_cast<double>(gates.size());
}

std::pair<std::vector<VehicleState>, std::vector<ControlWrench>> shifted_warm_start(
    const HorizonPlan& prev) {
  const std::size_t n1 = prev.states.size();  // N+1
  std::vector<VehicleState> states(n1);
  std::vector<ControlWrench> wrenches(prev.wrenches.size());
  for (std::size_t k = 0; k + 1 < n1; ++k) states[k] = prev.states[k + 1];
  states[n1 - 1] = prev.states[n1 - 1];
  for (std::size_t k = 0; k + 1 < wrenches.size(); ++k) wrenches[k] = prev.wrenches[k + 1];
  wrenches[wrenches.size() - 1] = prev.wrenches[wrenches.size() - 1];
  return {std::move(states), std::move(wrenches)};
}

std::pair<std::vector<VehicleState>, std::vector<ControlWrench>> hover_warm_start(
    const VehicleState& x_now, int N) {
  return {std::vector<VehicleState>(N + 1, x_now), std::vector<ControlWrench>(N)};
}

std::vector<CurrentSample> sample_horizon_currents(const CurrentField& field,
                                                   const std::vector<VehicleState>& warm_states) {
  if (warm_states.size() < 2) {
    throw Error(Errc::invariant, "sample_horizon_currents: need N+1 warm states");
  }
  std::vector<CurrentSample> out(warm_states.size() - 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = sample(field, warm_states[k].position());
  }
  return out;
}

namespace {

struct TranscriptionCtx {
  MpcConfig cfg;
  VehicleParams params;
  Vec12 x_init;
  Vec12 goal;
  Mat12 q_f;
  int N = 0;
  int n = 0;
  int m = 0;
  StageModel model;
  std::vector<StageInput> inputs;
  std::vector<StageValues> vals;
  std::vector<StageDerivs> ders;

  int xoff(int k) const { return 12 * (k - 1); }  // k in 1..N
  int uoff(int k) const { return 12 * N + 4 * k; }

  void fill_inputs(const VecX& z) {
    for (int k = 0; k < N; ++k) {
      StageInput& in = inputs[k];
      if (k == 0) {
        in.x = x_init;
      } else {
        in.x = z.segment<12>(xoff(k));
      }
      in.u = z.segment<4>(uoff(k));
      if (k > 0) in.u_prev = z.segment<4>(uoff(k - 1));
    }
  }
};

}  // namespace

NlpProblem transcribe(const MpcConfig& cfg, const VehicleParams& params,
                      const VehicleState& x_init, const Vec12& goal, const Mat12& Q_f,
                      const std::vector<CurrentSample>& currents) {
  cfg.validate();
  if (static_cast<int>(currents.size()) != cfg.N) {
    throw Error(Errc::dimension_mismatch, "transcribe: need exactly N current samples");
  }

  auto ctx = std::make_shared<TranscriptionCtx>();
  ctx->cfg = cfg;
  ctx->params = params;
  ctx->x_init = x_init.as_vector();
  ctx->goal = goal;
  ctx->q_f = Q_f;
  ctx->N = cfg.N;
  ctx->n = 16 * cfg.N;
  ctx->m = 12 * cfg.N;
  ctx->model.params = &ctx->params;
  ctx->model.weights = &ctx->cfg.weights;
  ctx->model.gate = &ctx->cfg.gate;
  ctx->model.dt = cfg.dt;
  ctx->model.mode = cfg.mode;
  ctx->model.relvel = cfg.relvel;
  ctx->inputs.resize(cfg.N);
  ctx->vals.resize(cfg.N);
  ctx->ders.resize(cfg.N);
  for (int k = 0; k < cfg.N; ++k) {
    ctx->inputs[k].has_prev = k > 0;
    ctx->inputs[k].x_is_decision = k > 0;
    ctx->inputs[k].v_c = currents[k].v_ned;
    ctx->inputs[k].goal = goal;
  }

  NlpProblem p;
  p.n = ctx->n;
  p.m = ctx->m;
  p.lower.resize(p.n);
  p.upper.resize(p.n);
  const double inf = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= cfg.N; ++k) {
    const int o = ctx->xoff(k);
    for (int i = 0; i < 3; ++i) {
      p.lower[o + i] = -inf;
      p.upper[o + i] = inf;
    }
    p.lower[o + 3] = -cfg.bounds.roll_pitch;
    p.upper[o + 3] = cfg.bounds.roll_pitch;
    p.lower[o + 4] = -cfg.bounds.roll_pitch;
    p.upper[o + 4] = cfg.bounds.roll_pitch;
    p.lower[o + 5] = -inf;
    p.upper[o + 5] = inf;
    const double vlin = cfg.bounds.vel_lin - cfg.pred_vel_margin;
    const double vang = cfg.bounds.vel_ang - cfg.pred_ang_vel_margin;
    for (int i = 0; i < 3; ++i) {
      p.lower[o + 6 + i] = -vlin;
      p.upper[o + 6 + i] = vlin;
      p.lower[o + 9 + i] = -vang;
      p.upper[o + 9 + i] = vang;
    }
  }
  for (int k = 0; k < cfg.N; ++k) {
    const int o = ctx->uoff(k);
    p.lower[o + 0] = -cfg.bounds.xy_force;
    p.upper[o + 0] = cfg.bounds.xy_force;
    p.lower[o + 1] = -cfg.bounds.xy_force;
    p.upper[o + 1] = cfg.bounds.xy_force;
    p.lower[o + 2] = cfg.bounds.z_force_min;
    p.upper[o + 2] = cfg.bounds.z_force_max;
    p.lower[o + 3] = -cfg.bounds.yaw_moment;
    p.upper[o + 3] = cfg.bounds.yaw_moment;
  }

  // Constant quadratic part of the objective (tracking, effort, slew,
  // terminal); the solver uses it as the curvature model of its reduced
  // Newton-type steps.
  {
    MatX h0 = MatX::Zero(p.n, p.n);
    const Mat12 qx2 = 2.0 * cfg.weights.Q;
    const Mat4 r2 = 2.0 * cfg.weights.R;
    const Mat4 rs2 = 2.0 * cfg.weights.R_s;
    for (int k = 1; k < cfg.N; ++k) h0.block<12, 12>(ctx->xoff(k), ctx->xoff(k)) = qx2;
    h0.block<12, 12>(ctx->xoff(cfg.N), ctx->xoff(cfg.N)) = 2.0 * Q_f;
    for (int k = 0; k < cfg.N; ++k) h0.block<4, 4>(ctx->uoff(k), ctx->uoff(k)) = r2;
    for (int k = 1; k < cfg.N; ++k) {
      h0.block<4, 4>(ctx->uoff(k), ctx->uoff(k)) += rs2;
      h0.block<4, 4>(ctx->uoff(k - 1), ctx->uoff(k - 1)) += rs2;
      h0.block<4, 4>(ctx->uoff(k), ctx->uoff(k - 1)) -= rs2;
      h0.block<4, 4>(ctx->uoff(k - 1), ctx->uoff(k)) -= rs2;
    }
    p.hess0 = std::move(h0);
  }

  // Stage-interleaved ordering [u_0, x_1, u_1, x_2, ...] under which the
  // curvature model is block tridiagonal.
  p.band_order.reserve(p.n);
  for (int k = 0; k < cfg.N; ++k) {
    for (int i = 0; i < 4; ++i) p.band_order.push_back(ctx->uoff(k) + i);
    for (int i = 0; i < 12; ++i) p.band_order.push_back(ctx->xoff(k + 1) + i);
  }
  p.band_width = 28;

  // Constraint curvature for the solver's pass matrix: the defects are
  // c_k = x_{k+1} - step_k, so each stage contributes -Hess(lambda_k' step_k)
  // on its [x_k; u_k] block.
  p.lag_hess = [ctx](const VecX& z, const VecX& lambda) {
    ctx->fill_inputs(z);
    std::vector<Vec12> lambdas(ctx->N);
    std::vector<StageHessian> hess(ctx->N);
    for (int k = 0; k < ctx->N; ++k) lambdas[k] = lambda.segment<12>(12 * k);
    horizon_lagrangian_hessians(ctx->cfg.exec, ctx->model, ctx->inputs, lambdas, hess);

    MatX h = MatX::Zero(ctx->n, ctx->n);
    for (int k = 0; k < ctx->N; ++k) {
      int idx[16];
      for (int i = 0; i < 12; ++i) idx[i] = k > 0 ? ctx->xoff(k) + i : -1;
      for (int i = 0; i < 4; ++i) idx[12 + i] = ctx->uoff(k) + i;
      for (int a = 0; a < 16; ++a) {
        if (idx[a] < 0) continue;
        for (int b = 0; b < 16; ++b) {
          if (idx[b] < 0) continue;
          h(idx[a], idx[b]) -= hess[k](a, b);
        }
      }
    }
    return h;
  };

  p.eval = [ctx](const VecX& z, double& f, VecX& c) {
    ctx->fill_inputs(z);
    horizon_eval_values(ctx->cfg.exec, ctx->model, ctx->inputs, ctx->vals);
    f = 0.0;
    for (int k = 0; k < ctx->N; ++k) f += ctx->vals[k].cost;
    const Vec12 x_last = z.segment<12>(ctx->xoff(ctx->N));
    f += terminal_cost_t<double>(x_last, ctx->goal, ctx->q_f);
    if (c.size() != ctx->m) c.resize(ctx->m);
    for (int k = 0; k < ctx->N; ++k) {
      c.segment<12>(12 * k) = z.segment<12>(ctx->xoff(k + 1)) - ctx->vals[k].step;
    }
  };

  p.eval_derivs = [ctx](const VecX& z, double& f, VecX& g, VecX& c, MatX& J) {
    ctx->fill_inputs(z);
    horizon_eval_derivs(ctx->cfg.exec, ctx->model, ctx->inputs, ctx->ders);

    if (g.size() != ctx->n) g.resize(ctx->n);
    g.setZero();
    if (c.size() != ctx->m) c.resize(ctx->m);
    if (J.rows() != ctx->m || J.cols() != ctx->n) J = MatX::Zero(ctx->m, ctx->n);

    f = 0.0;
    for (int k = 0; k < ctx->N; ++k) {
      const StageDerivs& d = ctx->ders[k];
      f += d.cost;
      if (k > 0) g.segment<12>(ctx->xoff(k)) += d.cost_x;
      g.segment<4>(ctx->uoff(k)) += d.cost_u;
      if (k > 0) g.segment<4>(ctx->uoff(k - 1)) += d.cost_uprev;

      const int row = 12 * k;
      c.segment<12>(row) = z.segment<12>(ctx->xoff(k + 1)) - d.step;
      J.block<12, 12>(row, ctx->xoff(k + 1)) = Mat12::Identity();
      if (k > 0) J.block<12, 12>(row, ctx->xoff(k)) = -d.step_x;
      J.block<12, 4>(row, ctx->uoff(k)) = -d.step_u;
    }
    const Vec12 x_last = z.segment<12>(ctx->xoff(ctx->N));
    const Vec12 d_term = tracking_error<double>(x_last, ctx->goal);
    f += d_term.dot(ctx->q_f * d_term);
    g.segment<12>(ctx->xoff(ctx->N)) += 2.0 * (ctx->q_f * d_term);
  };

  return p;
}

MpcController::MpcController(const MpcConfig& cfg, const VehicleParams& params)
    : cfg_(cfg), params_(params) {
  cfg_.validate();
}

void MpcController::set_goal(const Vec12& goal) {
  goal_ = goal;
  q_f_ = dare_terminal(params_, cfg_.dt, cfg_.weights.Q, cfg_.weights.R, goal_, cfg_.relvel);
}

void MpcController::reset_warm_start() {
  prev_.reset();
  prev_lambda_.resize(0);
  prev_rho_ = 0.0;
}

namespace {

double horizon_objective(const MpcConfig& cfg, const VehicleParams& params,
                         const std::vector<VehicleState>& states,
                         const std::vector<ControlWrench>& wrenches,
                         const std::vector<CurrentSample>& currents, const Vec12& goal,
                         const Mat12& q_f, CostMode mode) {
  double acc = 0.0;
  for (int k = 0; k < static_cast<int>(wrenches.size()); ++k) {
    const Vec12 x = states[k].as_vector();
    const Vec4 u = wrenches[k].as_vector();
    Vec4 up;
    const Vec4* up_ptr = nullptr;
    if (k > 0) {
      up = wrenches[k - 1].as_vector();
      up_ptr = &up;
    }
    acc += stage_cost_t<double>(x, u, up_ptr, currents[k].v_ned, goal, cfg.weights, cfg.gate, mode,
                                params, cfg.relvel);
  }
  acc += terminal_cost_t<double>(states.back().as_vector(), goal, q_f);
  return acc;
}

}  // namespace

std::pair<ControlWrench, HorizonPlan> MpcController::step(const CurrentField& field,
                                                          const VehicleState& x_now) {
  if (!x_now.all_finite()) throw Error(Errc::nan_abort, "mpc step: non-finite state");

  auto [warm_states, warm_wrenches] =
      prev_ ? shifted_warm_start(*prev_) : hover_warm_start(x_now, cfg_.N);
  const std::vector<CurrentSample> currents = sample_horizon_currents(field, warm_states);

  const NlpProblem problem = transcribe(cfg_, params_, x_now, goal_, q_f_, currents);

  VecX z0(problem.n);
  for (int k = 1; k <= cfg_.N; ++k) z0.segment<12>(12 * (k - 1)) = warm_states[k].as_vector();
  for (int k = 0; k < cfg_.N; ++k) z0.segment<4>(12 * cfg_.N + 4 * k) = warm_wrenches[k].as_vector();

  VecX lambda0;
  const VecX* lambda0_ptr = nullptr;
  if (prev_lambda_.size() == problem.m) {
    lambda0.resize(problem.m);
    for (int k = 0; k < cfg_.N; ++k) {
      const int src = std::min(k + 1, cfg_.N - 1);
      lambda0.segment<12>(12 * k) = prev_lambda_.segment<12>(12 * src);
    }
    lambda0_ptr = &lambda0;
  }

  SolverOptions opts = cfg_.solver;
  // Skip re-climbing the penalty ladder, but cap the carried value: with warm
  // multipliers a moderate penalty reaches tol_feas in a pass or two, and an
  // extreme one amplifies Jacobian-drift noise in the curvature model.
  if (prev_rho_ > 0.0) opts.rho_init = std::clamp(prev_rho_, opts.rho_init, 1e5);
  const NlpSolution sol = solve(problem, z0, opts, lambda0_ptr);
  prev_rho_ = sol.final_rho;

  HorizonPlan plan;
  plan.states.resize(cfg_.N + 1);
  plan.wrenches.resize(cfg_.N);
  plan.currents = currents;
  plan.gates.resize(cfg_.N);
  plan.states[0] = x_now;
  for (int k = 1; k <= cfg_.N; ++k) {
    plan.states[k] = VehicleState::from_vector(sol.x.segment<12>(12 * (k - 1)));
  }
  for (int k = 0; k < cfg_.N; ++k) {
    plan.wrenches[k] = ControlWrench::from_vector(sol.x.segment<4>(12 * cfg_.N + 4 * k));
  }
  for (int k = 0; k < cfg_.N; ++k) {
    plan.gates[k] = helpfulness(plan.states[k], currents[k], goal_.head<3>(), cfg_.gate);
  }
  plan.shaped_objective = horizon_objective(cfg_, params_, plan.states, plan.wrenches, currents,
                                            goal_, q_f_, CostMode::shaped);
  plan.baseline_objective = horizon_objective(cfg_, params_, plan.states, plan.wrenches, currents,
                                              goal_, q_f_, CostMode::baseline);
  plan.status = sol.status;
  plan.stat_res = sol.stat_res;
  plan.feas_res = sol.feas_res;
  plan.inner_iterations = sol.inner_iterations;

  ControlWrench u_apply = plan.wrenches[0];
  cfg_.bounds.clamp(u_apply);

  prev_ = plan;
  prev_lambda_ = sol.multipliers;
  return {u_apply, plan};
}

}  // namespace chmpc
