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

#include <string>

#include "chmpc/config.hpp"
#include "chmpc/sim.hpp"

namespace chmpc {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config_error = 2;
inline constexpr int solver_breakdown = 3;
inline constexpr int nan_abort = 4;
inline constexpr int check_failed = 5;
inline constexpr int degenerate_data = 6;
}  // namespace exit_code

/// Telemetry CSV, one row per control step:
/// t,xN,yE,zD,phi,theta,psi,u,v,w,p,q,r,X,Y,Z,Nyaw,s_mean,P_total_W,solver_status
std::string run_csv(const RunResult& res);
std::string summary_text(const RunResult& res, const Scenario& sc);

int cmd_run(const std::string& config_path, const std::string& out_dir);
int cmd_compare(const std::string& config_path, const std::string& out_dir);
int cmd_fit_thruster(const std::string& calibration_path, const std::string& out_dir);
int cmd_check(const std::string& config_path, const std::string& out_dir);

}  // namespace chmpc
