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

#include "chmpc/kernels.hpp"

#include <omp.h>

#include "chmpc/dual.hpp"

namespace chmpc {

namespace {

// Partial-derivative layout of the per-stage AD pass.
using D20 = Dual<20>;
constexpr int kSlotX = 0;
constexpr int kSlotU = 12;
constexpr int kSlotUPrev = 16;

void stage_values(const StageModel& m, const StageInput& in, StageValues& out) {
  const Vec12 f = dynamics_rhs_t<double>(in.x, in.u, in.v_c, *m.params, m.relvel);
  out.step = in.x + m.dt * f;
  const Vec3 f_pos = f.head<3>();
  out.cost = stage_cost_t<double>(in.x, in.u, in.has_prev ? &in.u_prev : nullptr, in.v_c, in.goal,
                                  *m.weights, *m.gate, m.mode, *m.params, m.relvel, &f_pos);
}

void stage_derivs(const StageModel& m, const StageInput& in, StageDerivs& out) {
  Vec12T<D20> x;
  Vec4T<D20> u, u_prev;
  for (int i = 0; i < 12; ++i) {
    x[i] = in.x_is_decision ? D20::seed(in.x[i], kSlotX + i) : D20(in.x[i]);
  }
  for (int i = 0; i < 4; ++i) u[i] = D20::seed(in.u[i], kSlotU + i);
  if (in.has_prev) {
    for (int i = 0; i < 4; ++i) u_prev[i] = D20::seed(in.u_prev[i], kSlotUPrev + i);
  }

  const Vec12T<D20> f = dynamics_rhs_t<D20>(x, u, in.v_c, *m.params, m.relvel);
  Vec12T<D20> step;
  for (int i = 0; i < 12; ++i) step[i] = x[i] + m.dt * f[i];
  Vec3T<D20> f_pos;
  for (int i = 0; i < 3; ++i) f_pos[i] = f[i];
  const D20 cost = stage_cost_t<D20>(x, u, in.has_prev ? &u_prev : nullptr, in.v_c, in.goal,
                                     *m.weights, *m.gate, m.mode, *m.params, m.relvel, &f_pos);

  out.cost = cost.v;
  for (int j = 0; j < 12; ++j) out.cost_x[j] = cost.d[kSlotX + j];
  for (int j = 0; j < 4; ++j) out.cost_u[j] = cost.d[kSlotU + j];
  for (int j = 0; j < 4; ++j) out.cost_uprev[j] = in.has_prev ? cost.d[kSlotUPrev + j] : 0.0;
  for (int i = 0; i < 12; ++i) {
    out.step[i] = step[i].v;
    for (int j = 0; j < 12; ++j) out.step_x(i, j) = step[i].d[kSlotX + j];
    for (int j = 0; j < 4; ++j) out.step_u(i, j) = step[i].d[kSlotU + j];
  }
}

using HD = Dual<16, Dual<16>>;  // hyper-dual: value, gradient and Hessian

void stage_lagrangian_hessian(const StageModel& m, const StageInput& in, const Vec12& lambda,
                              StageHessian& out) {
  Vec12T<HD> x;
  Vec4T<HD> u;
  for (int i = 0; i < 12; ++i) {
    if (in.x_is_decision) {
      x[i].v = Dual<16>::seed(in.x[i], i);
      x[i].d[i] = Dual<16>(1.0);
    } else {
      x[i].v = Dual<16>(in.x[i]);
    }
  }
  for (int i = 0; i < 4; ++i) {
    u[i].v = Dual<16>::seed(in.u[i], 12 + i);
    u[i].d[12 + i] = Dual<16>(1.0);
  }
  const Vec12T<HD> f = dynamics_rhs_t<HD>(x, u, in.v_c, *m.params, m.relvel);
  HD s(0.0);
  for (int i = 0; i < 12; ++i) s += lambda[i] * (x[i] + m.dt * f[i]);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) out(i, j) = s.d[j].d[i];
}

}  // namespace

void horizon_lagrangian_hessians(ExecPolicy policy, const StageModel& model,
                                 std::span<const StageInput> in, std::span<const Vec12> lambdas,
                                 std::span<StageHessian> out) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  if (resolve_policy(policy, in.size()) == ExecPolicy::openmp) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) stage_lagrangian_hessian(model, in[k], lambdas[k], out[k]);
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) stage_lagrangian_hessian(model, in[k], lambdas[k], out[k]);
  }
}

ExecPolicy resolve_policy(ExecPolicy policy, std::size_t size) {
  if (policy != ExecPolicy::automatic) return policy;
  return (size >= 8 && omp_get_max_threads() > 1) ? ExecPolicy::openmp : ExecPolicy::serial;
}

void horizon_eval_values(ExecPolicy policy, const StageModel& model,
                         std::span<const StageInput> in, std::span<StageValues> out) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  if (resolve_policy(policy, in.size()) == ExecPolicy::openmp) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) stage_values(model, in[k], out[k]);
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) stage_values(model, in[k], out[k]);
  }
}

void horizon_eval_derivs(ExecPolicy policy, const StageModel& model,
                         std::span<const StageInput> in, std::span<StageDerivs> out) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  if (resolve_policy(policy, in.size()) == ExecPolicy::openmp) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) stage_derivs(model, in[k], out[k]);
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) stage_derivs(model, in[k], out[k]);
  }
}

void batch_stage_cost(ExecPolicy policy, const StageModel& model, std::span<const StageInput> in,
                      std::span<double> cost_out) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  if (resolve_policy(policy, in.size()) == ExecPolicy::openmp) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      StageValues v;
      stage_values(model, in[k], v);
      cost_out[k] = v.cost;
    }
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      StageValues v;
      stage_values(model, in[k], v);
      cost_out[k] = v.cost;
    }
  }
}

void batch_sample(ExecPolicy policy, const CurrentField& field, std::span<const Vec3> positions,
                  std::span<Vec3> out) {
  const auto n = static_cast<std::ptrdiff_t>(positions.size());
  if (resolve_policy(policy, positions.size()) == ExecPolicy::openmp) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = field.sample_ned(positions[k]);
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = field.sample_ned(positions[k]);
  }
}

}  // namespace chmpc
