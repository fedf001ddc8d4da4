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

#include <memory>
#include <vector>

#include "chmpc/actuation.hpp"
#include "chmpc/controller.hpp"
#include "chmpc/currents.hpp"
#include "chmpc/types.hpp"

namespace chmpc {

struct Waypoint {
  Vec3 pos = Vec3::Zero();
  double yaw = 0.0;

  Vec12 as_goal() const {
    Vec12 g = Vec12::Zero();
    g.head<3>() = pos;
    g[5] = yaw;
    return g;
  }
};

/// Deterministic closed-loop scenario: plant (RK4) + MPC + allocation/power.
struct Scenario {
  VehicleState initial;
  std::vector<Waypoint> goals;
  double switch_radius = 1.5;   // waypoint switch / arrival radius (m)
  double arrival_speed = 0.05;  // final-waypoint speed threshold (m/s)
  double duration_cap = 60.0;   // simulated seconds
  int plant_substeps = 4;
  std::shared_ptr<const CurrentField> field;
  VehicleParams params;
  AllocationModel alloc;
  PowerModel power;
  MpcConfig mpc;

  void validate() const;
};

struct StepRecord {
  double t = 0.0;
  VehicleState state;
  ControlWrench command;
  Vec6 thrust = Vec6::Zero();     // allocated thruster forces
  Vec4 delivered = Vec4::Zero();  // K4 T*
  double gate_mean = 0.0;
  double power_w = 0.0;
  SolveStatus status = SolveStatus::max_iter;
};

struct RunResult {
  CostMode mode = CostMode::baseline;
  std::vector<StepRecord> steps;
  std::vector<double> arrival_time_s;  // per waypoint; NaN when not reached
  bool arrived = false;
  double final_time_s = 0.0;
  double total_energy_j = 0.0;
  double mean_step_energy_j = 0.0;
  double max_step_energy_j = 0.0;
  double mean_gate = 0.0;
  int converged_steps = 0;
  int max_iter_steps = 0;
  int line_search_failure_steps = 0;
  int constraint_violations = 0;  // Table-limit violations observed on plant/commands
};

/// Runs the scenario in the controller mode stored in sc.mpc.
RunResult run(const Scenario& sc);
/// Runs with an explicit mode override.
RunResult run(const Scenario& sc, CostMode mode);

struct CompareReport {
  RunResult baseline;
  RunResult harnessing;
  double energy_delta_pct = 0.0;  // 100 * (E_harness - E_base) / E_base
  double arrival_delta_s = 0.0;   // t_harness - t_base
  double arrival_ratio = 0.0;     // t_harness / t_base
};

CompareReport compare(const Scenario& sc);

}  // namespace chmpc
