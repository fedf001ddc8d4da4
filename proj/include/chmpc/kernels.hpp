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

#include <span>

#include "chmpc/costs.hpp"
#include "chmpc/currents.hpp"
#include "chmpc/types.hpp"
#include "chmpc/vehicle.hpp"

namespace chmpc {

/// Stage-wise evaluation kernels behind the transcription. Stages are
/// independent, writes go to disjoint slots and reductions happen serially in
/// index order afterwards, so the OpenMP variants are bit-identical to the
/// serial references for any thread count.

enum class ExecPolicy { serial, openmp, automatic };

struct StageModel {
  const VehicleParams* params = nullptr;
  const CostWeights* weights = nullptr;
  const GateParams* gate = nullptr;
  double dt = 0.1;
  CostMode mode = CostMode::baseline;
  RelVelMode relvel = RelVelMode::full_subtraction;
};

struct StageInput {
  Vec12 x = Vec12::Zero();
  Vec4 u = Vec4::Zero();
  Vec4 u_prev = Vec4::Zero();
  bool has_prev = false;
  bool x_is_decision = true;  // false for the pinned initial stage
  Vec3 v_c = Vec3::Zero();
  Vec12 goal = Vec12::Zero();
};

struct StageValues {
  double cost = 0.0;
  Vec12 step = Vec12::Zero();  // x + dt f(x, u, v_c)
};

struct StageDerivs {
  double cost = 0.0;
  Vec12 cost_x = Vec12::Zero();
  Vec4 cost_u = Vec4::Zero();
  Vec4 cost_uprev = Vec4::Zero();
  Vec12 step = Vec12::Zero();
  Mat12 step_x = Mat12::Zero();
  Eigen::Matrix<double, 12, 4> step_u = Eigen::Matrix<double, 12, 4>::Zero();
};

void horizon_eval_values(ExecPolicy policy, const StageModel& model,
                         std::span<const StageInput> in, std::span<StageValues> out);

void horizon_eval_derivs(ExecPolicy policy, const StageModel& model,
                         std::span<const StageInput> in, std::span<StageDerivs> out);

/// Per-stage curvature of the shooting defects: the 16x16 Hessian of
/// lambda_k' (x_k + dt f(x_k, u_k, v_c)) w.r.t. [x_k; u_k], computed with
/// nested duals. Rows/columns of non-decision states are zero.
using StageHessian = Eigen::Matrix<double, 16, 16>;
void horizon_lagrangian_hessians(ExecPolicy policy, const StageModel& model,
                                 std::span<const StageInput> in, std::span<const Vec12> lambdas,
                                 std::span<StageHessian> out);

/// Elementwise stage-cost map over independent contexts (property suites).
void batch_stage_cost(ExecPolicy policy, const StageModel& model, std::span<const StageInput> in,
                      std::span<double> cost_out);

/// Elementwise field sampling.
void batch_sample(ExecPolicy policy, const CurrentField& field, std::span<const Vec3> positions,
                  std::span<Vec3> out);

/// Effective variant chosen by `automatic` for a workload of `size` items.
ExecPolicy resolve_policy(ExecPolicy policy, std::size_t size);

}  // namespace chmpc
