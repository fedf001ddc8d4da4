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

#include <map>
#include <string>
#include <vector>

#include "chmpc/sim.hpp"

namespace chmpc {

/// Flat-section `key = value` document. Unknown sections or keys left
/// unconsumed after binding are rejected (typo guard).
class ConfigDoc {
 public:
  static ConfigDoc parse(std::istream& in, const std::string& name);
  static ConfigDoc parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key);
  std::string get_string_or(const std::string& section, const std::string& key, const std::string& dflt);
  double get_double(const std::string& section, const std::string& key);
  double get_double_or(const std::string& section, const std::string& key, double dflt);
  int get_int(const std::string& section, const std::string& key);
  int get_int_or(const std::string& section, const std::string& key, int dflt);
  std::vector<double> get_list(const std::string& section, const std::string& key);

  /// Throws Error(Errc::config) naming the first unconsumed key.
  void ensure_all_consumed() const;
  const std::string& name() const { return name_; }

 private:
  struct Entry {
    std::string value;
    mutable bool consumed = false;
  };
  std::string name_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

struct CurrentSpec {
  enum class Kind { uniform, shear, gyre, grid };
  Kind kind = Kind::uniform;
  // uniform
  double u_mps = 0.0, v_mps = 0.0;
  // shear
  double base_u_mps = 0.0, base_v_mps = 0.0;
  Vec3 axis = Vec3::UnitX();
  double du_per_m = 0.0, dv_per_m = 0.0;
  // gyre
  double center_n_m = 0.0, center_e_m = 0.0, strength_mps = 0.0, radius_m = 1.0;
  // grid
  std::string grid_file;

  std::shared_ptr<const CurrentField> build() const;
};

/// Full scenario binding: all module configs plus the file references they
/// came from, so a parsed config can be serialized back.
struct ScenarioConfig {
  std::string vehicle_params_file;
  CurrentSpec current;
  MpcConfig mpc;
  VehicleState start;
  std::vector<Waypoint> goals;
  double switch_radius_m = 1.5;
  double arrival_speed_mps = 0.05;
  double duration_cap_s = 60.0;
  int plant_substeps = 4;
  std::string allocation_file;
  std::string calibration_file;

  /// Loads referenced files, fits the power model and validates everything.
  Scenario build() const;
};

ScenarioConfig parse_scenario_config(const std::string& path);
ScenarioConfig parse_scenario_config(std::istream& in, const std::string& name);
std::string serialize(const ScenarioConfig& sc);

const char* to_token(CostMode m);
const char* to_token(ExecPolicy p);
const char* to_token(RelVelMode m);

}  // namespace chmpc
