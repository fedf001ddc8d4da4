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
#include <string>
#include <vector>

#include "chmpc/types.hpp"

namespace chmpc {

/// Thruster geometry and limits: delivered wrench is tau4 = K4 T.
struct AllocationModel {
  Eigen::Matrix<double, 4, 6> K4 = Eigen::Matrix<double, 4, 6>::Zero();
  Vec6 T_min = Vec6::Zero();
  Vec6 T_max = Vec6::Zero();
  double lambda_reg = 1e-3;

  void validate() const;  // full row rank 4, T_min < 0 < T_max, lambda > 0
};

AllocationModel load_allocation_model(const std::string& path);
void save_allocation_model(const AllocationModel& m, const std::string& path);

/// argmin ||K4 T - tau4||^2 + lambda ||T||^2 over the thruster box.
/// Interior solutions coincide with (K4'K4 + lambda I)^-1 K4' tau4.
Vec6 allocate(const AllocationModel& model, const Vec4& tau4);
Vec6 allocate(const AllocationModel& model, const ControlWrench& wrench);

/// Projected-gradient KKT measure of a candidate allocation.
double allocation_kkt_residual(const AllocationModel& model, const Vec4& tau4, const Vec6& T);

/// One (power, thrust) calibration sample at fixed supply voltage.
struct CalPoint {
  bool forward = true;  // branch token: P = forward (T >= 0), N = reverse
  double power_w = 0.0;
  double thrust_n = 0.0;
};

/// THRUSTCAL v1: header line, then `P|N power_W thrust_N` per line.
std::vector<CalPoint> load_calibration(const std::string& path);

/// Bi-directional power law T = a P^b, forward and reverse branches fitted
/// independently by least squares in log-log space.
struct PowerModel {
  double a_f = 1.0, b_f = 1.0;  // forward
  double a_r = 1.0, b_r = 1.0;  // reverse
  double rms_log_residual_f = 0.0;
  double rms_log_residual_r = 0.0;
};

PowerModel fit_power_model(const std::vector<CalPoint>& table);
PowerModel load_power_model(const std::string& path);
void save_power_model(const PowerModel& m, const std::string& path);

/// P = (|T|/a)^(1/b) on the branch matching sign(T); P(0) = 0.
double power_for_thrust(const PowerModel& m, double thrust_n);
double thrust_for_power(const PowerModel& m, double power_w, bool forward);

struct EnergyStats {
  std::vector<double> power_w;  // per control step, all thrusters summed
  double total_j = 0.0;
  double mean_step_j = 0.0;
  double max_step_j = 0.0;
};

/// Allocates each commanded wrench and integrates electrical power over dt.
EnergyStats energy_accumulate(const PowerModel& pm, const AllocationModel& am,
                              std::span<const ControlWrench> wrenches, double dt);

}  // namespace chmpc
