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
#include <utility>
#include <vector>

#include "chmpc/costs.hpp"
#include "chmpc/currents.hpp"
#include "chmpc/kernels.hpp"
#include "chmpc/nlp.hpp"
#include "chmpc/types.hpp"
#include "chmpc/vehicle.hpp"

namespace chmpc {

/// State and wrench limits used as NLP box bounds (defaults: BlueROV2 set).
struct OperatingBounds {
  double vel_lin = 1.5;      // |u|,|v|,|w| (m/s)
  double vel_ang = 1.5;      // |p|,|q|,|r| (rad/s)
  double roll_pitch = 1.2;   // |phi|,|theta| (rad)
  double xy_force = 127.26;  // |X|,|Y| (N)
  double z_force_min = -80.0;
  double z_force_max = 100.0;
  double yaw_moment = 30.78;  // |N| (N m)

  void clamp(ControlWrench& w) const;
  bool wrench_ok(const ControlWrench& w, double tol = 0.0) const;
  bool velocities_ok(const VehicleState& s, double tol = 0.0) const;
};

struct MpcConfig {
  double dt = 0.1;
  int N = 15;
  CostMode mode = CostMode::shaped;  // shaped = current-harnessing
  CostWeights weights;
  GateParams gate;
  OperatingBounds bounds;
  // Tightening of the predicted-state velocity boxes. The plant integrates
  // the real dynamics while the prediction model is one Euler step per
  // period, so predictions must keep this much margin for the plant to stay
  // inside the operating bounds. Applied wrench bounds are not tightened.
  double pred_vel_margin = 0.05;      // m/s
  double pred_ang_vel_margin = 0.5;   // rad/s
  SolverOptions solver;
  ExecPolicy exec = ExecPolicy::automatic;
  RelVelMode relvel = RelVelMode::full_subtraction;

  void validate() const;
};

/// One solved horizon: states (N+1), wrenches/currents/gates (N), both
/// objective readings on the same trajectory, and the solver outcome.
struct HorizonPlan {
  std::vector<VehicleState> states;
  std::vector<ControlWrench> wrenches;
  std::vector<CurrentSample> currents;
  std::vector<double> gates;
  double shaped_objective = 0.0;
  double baseline_objective = 0.0;
  SolveStatus status = SolveStatus::max_iter;
  double stat_res = 0.0;
  double feas_res = 0.0;
  int inner_iterations = 0;

  double mean_gate() const;
};

/// Warm start by shifting the previous plan: drop stage 0, duplicate the last.
std::pair<std::vector<VehicleState>, std::vector<ControlWrench>> shifted_warm_start(
    const HorizonPlan& prev);

/// Steady hover guess: every state equals x_now, zero wrenches.
std::pair<std::vector<VehicleState>, std::vector<ControlWrench>> hover_warm_start(
    const VehicleState& x_now, int N);

/// currents[k] = field(warm_states[k].position), k = 0..N-1. The samples are
/// frozen constants inside the subsequent NLP solve.
std::vector<CurrentSample> sample_horizon_currents(const CurrentField& field,
                                                   const std::vector<VehicleState>& warm_states);

/// Multiple-shooting transcription. Decision vector z = [x_1..x_N, u_0..u_N-1];
/// equalities are the shooting defects x_{k+1} - (x_k + dt f); Table-style
/// limits become box bounds. Q_f is the terminal weight (see dare_terminal).
NlpProblem transcribe(const MpcConfig& cfg, const VehicleParams& params,
                      const VehicleState& x_init, const Vec12& goal, const Mat12& Q_f,
                      const std::vector<CurrentSample>& currents);

class MpcController {
 public:
  MpcController(const MpcConfig& cfg, const VehicleParams& params);

  /// Sets the goal reference and recomputes the terminal weight for it.
  void set_goal(const Vec12& goal);
  const Vec12& goal() const { return goal_; }
  const Mat12& terminal_weight() const { return q_f_; }
  const MpcConfig& config() const { return cfg_; }

  /// One MPC update; returns the first wrench (clamped to bounds) and the
  /// solved plan. Non-converged solves still return the best iterate.
  std::pair<ControlWrench, HorizonPlan> step(const CurrentField& field, const VehicleState& x_now);

  void reset_warm_start();
  const std::optional<HorizonPlan>& previous_plan() const { return prev_; }

 private:
  MpcConfig cfg_;
  VehicleParams params_;
  Vec12 goal_ = Vec12::Zero();
  Mat12 q_f_ = Mat12::Zero();
  std::optional<HorizonPlan> prev_;
  VecX prev_lambda_;
  double prev_rho_ = 0.0;
};

}  // namespace chmpc
