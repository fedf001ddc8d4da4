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

#include "chmpc/sim.hpp"

#include <cmath>
#include <limits>

namespace chmpc {

void Scenario::validate() const {
  if (!(duration_cap > 0.0)) throw Error(Errc::invariant, "scenario: duration cap must be > 0");
  if (goals.empty()) throw Error(Errc::invariant, "scenario: need at least one goal");
  if (!(switch_radius > 0.0)) throw Error(Errc::invariant, "scenario: switch radius must be > 0");
  if (!(arrival_speed > 0.0)) throw Error(Errc::invariant, "scenario: arrival speed must be > 0");
  if (plant_substeps < 1) throw Error(Errc::invariant, "scenario: plant substeps must be >= 1");
  if (!field) throw Error(Errc::invariant, "scenario: current field missing");
  if (!initial.all_finite()) throw Error(Errc::invariant, "scenario: non-finite initial state");
  mpc.validate();
  alloc.validate();
}

RunResult run(const Scenario& sc) { return run(sc, sc.mpc.mode); }

RunResult run(const Scenario& sc, CostMode mode) {
  sc.validate();

  MpcConfig cfg = sc.mpc;
  cfg.mode = mode;
  MpcController controller(cfg, sc.params);

  RunResult res;
  res.mode = mode;
  res.arrival_time_s.assign(sc.goals.size(), std::numeric_limits<double>::quiet_NaN());

  std::size_t wp = 0;
  controller.set_goal(sc.goals[wp].as_goal());

  VehicleState state = sc.initial;
  const double dt = cfg.dt;
  const int max_steps = static_cast<int>(std::ceil(sc.duration_cap / dt));
  const auto field_fn = [&sc](const Vec3& pos) { return sc.field->sample_ned(pos); };

  double gate_acc = 0.0;
  for (int step_idx = 0; step_idx <= max_steps; ++step_idx) {
    const double t = step_idx * dt;

    // Waypoint switching and final arrival use the plant state.
    bool done = false;
    while (wp < sc.goals.size()) {
      const double err = (state.position() - sc.goals[wp].pos).norm();
      if (wp + 1 < sc.goals.size()) {
        if (err < sc.switch_radius) {
          res.arrival_time_s[wp] = t;
          ++wp;
          controller.set_goal(sc.goals[wp].as_goal());
          continue;
        }
        break;
      }
      if (err < sc.switch_radius && state.nu.head<3>().norm() < sc.arrival_speed) {
        res.arrival_time_s[wp] = t;
        res.arrived = true;
        done = true;
      }
      break;
    }
    res.final_time_s = t;
    if (done || step_idx == max_steps) break;

    auto [u_apply, plan] = controller.step(*sc.field, state);

    const Vec6 thrust = allocate(sc.alloc, u_apply);
    const Vec4 delivered = sc.alloc.K4 * thrust;
    double power = 0.0;
    for (int i = 0; i < 6; ++i) power += power_for_thrust(sc.power, thrust[i]);

    StepRecord rec;
    rec.t = t;
    rec.state = state;
    rec.command = u_apply;
    rec.thrust = thrust;
    rec.delivered = delivered;
    rec.gate_mean = plan.mean_gate();
    rec.power_w = power;
    rec.status = plan.status;
    res.steps.push_back(rec);

    switch (plan.status) {
      case SolveStatus::converged: ++res.converged_steps; break;
      case SolveStatus::max_iter: ++res.max_iter_steps; break;
      case SolveStatus::line_search_failure: ++res.line_search_failure_steps; break;
    }
    gate_acc += rec.gate_mean;
    if (!cfg.bounds.wrench_ok(u_apply)) ++res.constraint_violations;
    if (!cfg.bounds.velocities_ok(state, 1e-9)) ++res.constraint_violations;

    const double e = power * dt;
    res.total_energy_j += e;
    res.max_step_energy_j = std::max(res.max_step_energy_j, e);

    // Plant propagation under the delivered (allocated) wrench.
    try {
      state = step_rk4(state, ControlWrench::from_vector(delivered), field_fn, sc.params, dt,
                       sc.plant_substeps, cfg.relvel);
    } catch (const Error& e) {
      if (e.code() == Errc::nan_abort) {
        throw Error(Errc::nan_abort,
                    "plant diverged at step " + std::to_string(step_idx) + ": " + e.what());
      }
      throw;
    }
  }

  if (!cfg.bounds.velocities_ok(state, 1e-9)) ++res.constraint_violations;
  if (!res.steps.empty()) {
    res.mean_step_energy_j = res.total_energy_j / static_cast<double>(res.steps.size());
    res.mean_gate = gate_acc / static_cast<double>(res.steps.size());
  }
  return res;
}

CompareReport compare(const Scenario& sc) {
  CompareReport rep;
  rep.baseline = run(sc, CostMode::baseline);
  rep.harnessing = run(sc, CostMode::shaped);
  if (rep.baseline.total_energy_j > 0.0) {
    rep.energy_delta_pct = 100.0 * (rep.harnessing.total_energy_j - rep.baseline.total_energy_j) /
                           rep.baseline.total_energy_j;
  }
  const double tb = rep.baseline.arrival_time_s.back();
  const double th = rep.harnessing.arrival_time_s.back();
  if (std::isfinite(tb) && std::isfinite(th)) {
    rep.arrival_delta_s = th - tb;
    rep.arrival_ratio = tb > 0.0 ? th / tb : 1.0;
  } else {
    rep.arrival_delta_s = std::numeric_limits<double>::quiet_NaN();
    rep.arrival_ratio = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

}  // namespace chmpc
