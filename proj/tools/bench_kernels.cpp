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

// Times the serial reference against the OpenMP horizon/batch kernels over a
// sweep of workload sizes and reports the speedup.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <vector>

#include "chmpc/kernels.hpp"

using namespace chmpc;

namespace {

VehicleParams bench_params() {
  VehicleParams p;
  p.m = 11.5;
  p.I_xx = p.I_yy = p.I_zz = 0.16;
  p.X_du = 5.5;
  p.Y_dv = 12.7;
  p.Z_dw = 14.57;
  p.K_dp = p.M_dq = p.N_dr = 0.12;
  p.X_u = 4.03;
  p.Y_v = 6.22;
  p.Z_w = 5.18;
  p.K_p = p.M_q = p.N_r = 0.5;
  p.X_uu = 18.18;
  p.Y_vv = 21.66;
  p.Z_ww = 36.99;
  p.K_pp = p.M_qq = p.N_rr = 1.55;
  p.W = 112.8;
  p.B = 114.8;
  p.Z_G = -0.02;
  p.finalize();
  return p;
}

std::vector<StageInput> make_inputs(std::size_t n) {
  std::vector<StageInput> in(n);
  for (std::size_t k = 0; k < n; ++k) {
    StageInput& s = in[k];
    for (int i = 0; i < 12; ++i) s.x[i] = 0.1 * std::sin(0.7 * (k + i) + 0.3);
    s.x[4] = 0.2 * std::sin(0.11 * k);  // keep pitch well inside the guard
    for (int i = 0; i < 4; ++i) s.u[i] = 5.0 * std::sin(0.3 * (k + i));
    s.u_prev = 0.9 * s.u;
    s.has_prev = k > 0;
    s.x_is_decision = k > 0;
    s.v_c = Vec3(0.2, 0.1, 0.0);
    s.goal.setZero();
    s.goal[0] = 10.0;
    s.goal[1] = 5.0;
  }
  return in;
}

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main() {
  const VehicleParams params = bench_params();
  CostWeights w;
  w.Q = Mat12::Identity() * 10.0;
  w.Q.topLeftCorner<3, 3>() = Mat3::Identity() * 100.0;
  w.R.diagonal() << 1.0, 1.0, 0.1, 0.1;
  w.R_s = Mat4::Identity() * 0.01;
  w.Q_f = Mat12::Identity();
  w.lambda_relax = 0.9;
  w.w_reb = 0.8;
  w.e_ref = 40.0;
  w.kappa_eff = 3.0;
  w.w_glide = 0.35;
  GateParams gp;

  StageModel model;
  model.params = &params;
  model.weights = &w;
  model.gate = &gp;
  model.dt = 0.1;
  model.mode = CostMode::shaped;

  std::printf("threads available: %d\n\n", omp_get_max_threads());
  std::printf("%-24s %10s %12s %12s %8s\n", "kernel", "stages", "serial_ms", "openmp_ms", "speedup");

  for (std::size_t n : {15UL, 60UL, 240UL, 960UL, 3840UL, 15360UL}) {
    const auto in = make_inputs(n);
    std::vector<StageDerivs> out_s(n), out_p(n);
    const int reps = n <= 240 ? 50 : 10;

    const double ts = time_best_of(reps, [&] {
      horizon_eval_derivs(ExecPolicy::serial, model, in, out_s);
    });
    const double tp = time_best_of(reps, [&] {
      horizon_eval_derivs(ExecPolicy::openmp, model, in, out_p);
    });

    bool identical = true;
    for (std::size_t k = 0; k < n && identical; ++k) {
      identical = out_s[k].cost == out_p[k].cost && out_s[k].step == out_p[k].step &&
                  out_s[k].step_x == out_p[k].step_x;
    }
    std::printf("%-24s %10zu %12.3f %12.3f %7.2fx %s\n", "horizon_eval_derivs", n, ts * 1e3,
                tp * 1e3, ts / tp, identical ? "" : "MISMATCH!");
  }

  std::printf("\n");
  for (std::size_t n : {10000UL, 100000UL, 1000000UL}) {
    const auto in = make_inputs(n);
    std::vector<double> cost_s(n), cost_p(n);
    const double ts = time_best_of(5, [&] {
      batch_stage_cost(ExecPolicy::serial, model, in, cost_s);
    });
    const double tp = time_best_of(5, [&] {
      batch_stage_cost(ExecPolicy::openmp, model, in, cost_p);
    });
    bool identical = cost_s == cost_p;
    std::printf("%-24s %10zu %12.3f %12.3f %7.2fx %s\n", "batch_stage_cost", n, ts * 1e3, tp * 1e3,
                ts / tp, identical ? "" : "MISMATCH!");
  }
  return 0;
}
