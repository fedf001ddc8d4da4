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

#include "chmpc/config.hpp"

#include <fstream>
#include <sstream>

namespace chmpc {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void config_error(const std::string& name, const std::string& what) {
  throw Error(Errc::config, name + ": " + what);
}

}  // namespace

ConfigDoc ConfigDoc::parse(std::istream& in, const std::string& name) {
  ConfigDoc doc;
  doc.name_ = name;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') config_error(name, "line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) config_error(name, "line " + std::to_string(lineno) + ": empty section name");
      doc.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      config_error(name, "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    if (section.empty()) config_error(name, "line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) config_error(name, "line " + std::to_string(lineno) + ": empty key");
    if (!doc.sections_[section].emplace(key, Entry{value, false}).second) {
      config_error(name, "duplicate key " + section + "." + key);
    }
  }
  return doc;
}

ConfigDoc ConfigDoc::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open config file: " + path);
  return parse(in, path);
}

bool ConfigDoc::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string ConfigDoc::get_string(const std::string& section, const std::string& key) {
  const auto s = sections_.find(section);
  if (s == sections_.end()) config_error(name_, "missing section [" + section + "]");
  const auto k = s->second.find(key);
  if (k == s->second.end()) config_error(name_, "missing key " + section + "." + key);
  k->second.consumed = true;
  return k->second.value;
}

std::string ConfigDoc::get_string_or(const std::string& section, const std::string& key,
                                     const std::string& dflt) {
  return has(section, key) ? get_string(section, key) : dflt;
}

double ConfigDoc::get_double(const std::string& section, const std::string& key) {
  const std::string v = get_string(section, key);
  std::istringstream ss(v);
  double x;
  if (!(ss >> x)) config_error(name_, section + "." + key + ": not a number: '" + v + "'");
  std::string rest;
  if (ss >> rest) config_error(name_, section + "." + key + ": trailing text after number");
  return x;
}

double ConfigDoc::get_double_or(const std::string& section, const std::string& key, double dflt) {
  return has(section, key) ? get_double(section, key) : dflt;
}

int ConfigDoc::get_int(const std::string& section, const std::string& key) {
  const double x = get_double(section, key);
  const int i = static_cast<int>(x);
  if (static_cast<double>(i) != x) config_error(name_, section + "." + key + ": not an integer");
  return i;
}

int ConfigDoc::get_int_or(const std::string& section, const std::string& key, int dflt) {
  return has(section, key) ? get_int(section, key) : dflt;
}

std::vector<double> ConfigDoc::get_list(const std::string& section, const std::string& key) {
  std::string v = get_string(section, key);
  for (char& c : v) {
    if (c == ',') c = ' ';
  }
  std::istringstream ss(v);
  std::vector<double> out;
  double x;
  while (ss >> x) out.push_back(x);
  ss.clear();
  std::string rest;
  if (ss >> rest) config_error(name_, section + "." + key + ": bad list element '" + rest + "'");
  return out;
}

void ConfigDoc::ensure_all_consumed() const {
  for (const auto& [section, keys] : sections_) {
    for (const auto& [key, entry] : keys) {
      if (!entry.consumed) {
        throw Error(Errc::config, name_ + ": unknown key " + section + "." + key);
      }
    }
  }
}

std::shared_ptr<const CurrentField> CurrentSpec::build() const {
  switch (kind) {
    case Kind::uniform:
      return std::make_shared<UniformField>(u_mps, v_mps);
    case Kind::shear:
      return std::make_shared<ShearField>(base_u_mps, base_v_mps, axis, du_per_m, dv_per_m);
    case Kind::gyre:
      return std::make_shared<GyreField>(center_n_m, center_e_m, strength_mps, radius_m);
    case Kind::grid:
      return std::make_shared<CurrentGrid>(load_grid_file(grid_file));
  }
  throw Error(Errc::config, "current spec: unknown kind");
}

const char* to_token(CostMode m) { return m == CostMode::baseline ? "baseline" : "harnessing"; }
const char* to_token(ExecPolicy p) {
  switch (p) {
    case ExecPolicy::serial: return "serial";
    case ExecPolicy::openmp: return "openmp";
    case ExecPolicy::automatic: return "auto";
  }
  return "auto";
}
const char* to_token(RelVelMode m) {
  return m == RelVelMode::full_subtraction ? "full_subtraction" : "surge_sway_only";
}

namespace {

CostMode parse_mode(const std::string& tok, const std::string& name) {
  if (tok == "baseline") return CostMode::baseline;
  if (tok == "harnessing") return CostMode::shaped;
  config_error(name, "mpc.mode must be 'baseline' or 'harnessing', got '" + tok + "'");
}

ExecPolicy parse_exec(const std::string& tok, const std::string& name) {
  if (tok == "serial") return ExecPolicy::serial;
  if (tok == "openmp") return ExecPolicy::openmp;
  if (tok == "auto") return ExecPolicy::automatic;
  config_error(name, "mpc.exec must be 'serial', 'openmp' or 'auto', got '" + tok + "'");
}

RelVelMode parse_relvel(const std::string& tok, const std::string& name) {
  if (tok == "full_subtraction") return RelVelMode::full_subtraction;
  if (tok == "surge_sway_only") return RelVelMode::surge_sway_only;
  config_error(name, "vehicle.relvel_mode must be 'full_subtraction' or 'surge_sway_only'");
}

Mat12 diag12(const std::vector<double>& d, const std::string& name, const std::string& key) {
  if (d.size() != 12) config_error(name, key + ": expected 12 diagonal entries");
  Mat12 m = Mat12::Zero();
  for (int i = 0; i < 12; ++i) m(i, i) = d[i];
  return m;
}

Mat4 diag4(const std::vector<double>& d, const std::string& name, const std::string& key) {
  if (d.size() != 4) config_error(name, key + ": expected 4 diagonal entries");
  Mat4 m = Mat4::Zero();
  for (int i = 0; i < 4; ++i) m(i, i) = d[i];
  return m;
}

}  // namespace

ScenarioConfig parse_scenario_config(std::istream& in, const std::string& name) {
  ConfigDoc doc = ConfigDoc::parse(in, name);
  ScenarioConfig sc;

  sc.vehicle_params_file = doc.get_string("vehicle", "params_file");
  sc.mpc.relvel = parse_relvel(doc.get_string_or("vehicle", "relvel_mode", "full_subtraction"), name);

  const std::string kind = doc.get_string("current", "kind");
  if (kind == "uniform") {
    sc.current.kind = CurrentSpec::Kind::uniform;
    sc.current.u_mps = doc.get_double("current", "u_mps");
    sc.current.v_mps = doc.get_double("current", "v_mps");
  } else if (kind == "shear") {
    sc.current.kind = CurrentSpec::Kind::shear;
    sc.current.base_u_mps = doc.get_double("current", "base_u_mps");
    sc.current.base_v_mps = doc.get_double("current", "base_v_mps");
    const auto ax = doc.get_list("current", "axis");
    if (ax.size() != 3) config_error(name, "current.axis: expected 3 entries");
    sc.current.axis = Vec3(ax[0], ax[1], ax[2]);
    sc.current.du_per_m = doc.get_double("current", "du_per_m");
    sc.current.dv_per_m = doc.get_double("current", "dv_per_m");
  } else if (kind == "gyre") {
    sc.current.kind = CurrentSpec::Kind::gyre;
    sc.current.center_n_m = doc.get_double("current", "center_n_m");
    sc.current.center_e_m = doc.get_double("current", "center_e_m");
    sc.current.strength_mps = doc.get_double("current", "strength_mps");
    sc.current.radius_m = doc.get_double("current", "radius_m");
  } else if (kind == "grid") {
    sc.current.kind = CurrentSpec::Kind::grid;
    sc.current.grid_file = doc.get_string("current", "grid_file");
  } else {
    config_error(name, "current.kind must be uniform|shear|gyre|grid, got '" + kind + "'");
  }

  sc.mpc.dt = doc.get_double("mpc", "dt_s");
  sc.mpc.N = doc.get_int("mpc", "horizon");
  sc.mpc.mode = parse_mode(doc.get_string("mpc", "mode"), name);
  sc.mpc.exec = parse_exec(doc.get_string_or("mpc", "exec", "auto"), name);

  sc.mpc.weights.Q = diag12(doc.get_list("weights", "q_diag"), name, "weights.q_diag");
  sc.mpc.weights.R = diag4(doc.get_list("weights", "r_diag"), name, "weights.r_diag");
  sc.mpc.weights.R_s = diag4(doc.get_list("weights", "rs_diag"), name, "weights.rs_diag");
  sc.mpc.weights.lambda_relax = doc.get_double("weights", "lambda_relax");
  sc.mpc.weights.w_reb = doc.get_double("weights", "w_reb");
  sc.mpc.weights.e_ref = doc.get_double("weights", "e_ref");
  sc.mpc.weights.kappa_eff = doc.get_double("weights", "kappa_eff");
  sc.mpc.weights.w_glide = doc.get_double("weights", "w_glide");

  sc.mpc.gate.v_scale = doc.get_double("gate", "v_scale_mps");
  sc.mpc.gate.eps_e = doc.get_double("gate", "eps_e");
  sc.mpc.gate.eps_c = doc.get_double("gate", "eps_c");

  sc.mpc.bounds.vel_lin = doc.get_double_or("limits", "vel_lin_mps", sc.mpc.bounds.vel_lin);
  sc.mpc.bounds.vel_ang = doc.get_double_or("limits", "vel_ang_rps", sc.mpc.bounds.vel_ang);
  sc.mpc.bounds.roll_pitch = doc.get_double_or("limits", "roll_pitch_rad", sc.mpc.bounds.roll_pitch);
  sc.mpc.bounds.xy_force = doc.get_double_or("limits", "xy_force_n", sc.mpc.bounds.xy_force);
  sc.mpc.bounds.z_force_min = doc.get_double_or("limits", "z_force_min_n", sc.mpc.bounds.z_force_min);
  sc.mpc.bounds.z_force_max = doc.get_double_or("limits", "z_force_max_n", sc.mpc.bounds.z_force_max);
  sc.mpc.bounds.yaw_moment = doc.get_double_or("limits", "yaw_moment_nm", sc.mpc.bounds.yaw_moment);
  sc.mpc.pred_vel_margin =
      doc.get_double_or("limits", "pred_vel_margin_mps", sc.mpc.pred_vel_margin);
  sc.mpc.pred_ang_vel_margin =
      doc.get_double_or("limits", "pred_ang_vel_margin_rps", sc.mpc.pred_ang_vel_margin);

  sc.mpc.solver.tol_stat = doc.get_double_or("solver", "tol_stat", sc.mpc.solver.tol_stat);
  sc.mpc.solver.tol_feas = doc.get_double_or("solver", "tol_feas", sc.mpc.solver.tol_feas);
  sc.mpc.solver.max_inner = doc.get_int_or("solver", "max_inner", sc.mpc.solver.max_inner);
  sc.mpc.solver.max_outer = doc.get_int_or("solver", "max_outer", sc.mpc.solver.max_outer);

  const auto eta = doc.get_list("scenario", "start_eta");
  const auto nu = doc.get_list("scenario", "start_nu");
  if (eta.size() != 6) config_error(name, "scenario.start_eta: expected 6 entries");
  if (nu.size() != 6) config_error(name, "scenario.start_nu: expected 6 entries");
  for (int i = 0; i < 6; ++i) {
    sc.start.eta[i] = eta[i];
    sc.start.nu[i] = nu[i];
  }

  {
    std::string goals = doc.get_string("scenario", "goals");
    std::vector<std::string> groups;
    std::size_t pos = 0;
    while (pos != std::string::npos) {
      const auto semi = goals.find(';', pos);
      groups.push_back(goals.substr(pos, semi == std::string::npos ? semi : semi - pos));
      pos = semi == std::string::npos ? semi : semi + 1;
    }
    for (auto& grp : groups) {
      for (char& ch : grp) {
        if (ch == ',') ch = ' ';
      }
      std::istringstream gs(grp);
      Waypoint wp;
      if (!(gs >> wp.pos[0] >> wp.pos[1] >> wp.pos[2] >> wp.yaw)) {
        config_error(name, "scenario.goals: each waypoint needs 'n,e,d,yaw'");
      }
      std::string rest;
      if (gs >> rest) config_error(name, "scenario.goals: trailing text in waypoint");
      sc.goals.push_back(wp);
    }
    if (sc.goals.empty()) config_error(name, "scenario.goals: need at least one waypoint");
  }

  sc.switch_radius_m = doc.get_double("scenario", "switch_radius_m");
  sc.arrival_speed_mps = doc.get_double("scenario", "arrival_speed_mps");
  sc.duration_cap_s = doc.get_double("scenario", "duration_cap_s");
  sc.plant_substeps = doc.get_int("scenario", "plant_substeps");

  sc.allocation_file = doc.get_string("actuation", "allocation_file");
  sc.calibration_file = doc.get_string("actuation", "calibration_file");

  doc.ensure_all_consumed();
  return sc;
}

ScenarioConfig parse_scenario_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open config file: " + path);
  return parse_scenario_config(in, path);
}

Scenario ScenarioConfig::build() const {
  Scenario s;
  s.params = load_vehicle_params(vehicle_params_file);
  s.field = current.build();
  s.mpc = mpc;
  s.initial = start;
  s.goals = goals;
  s.switch_radius = switch_radius_m;
  s.arrival_speed = arrival_speed_mps;
  s.duration_cap = duration_cap_s;
  s.plant_substeps = plant_substeps;
  s.alloc = load_allocation_model(allocation_file);
  s.power = fit_power_model(load_calibration(calibration_file));
  s.validate();
  return s;
}

namespace {

std::string fmt(double x) {
  std::ostringstream ss;
  ss.precision(17);
  ss << x;
  return ss.str();
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt(v[i]);
  }
  return out;
}

}  // namespace

std::string serialize(const ScenarioConfig& sc) {
  std::ostringstream out;
  out << "[vehicle]\n";
  out << "params_file = " << sc.vehicle_params_file << "\n";
  out << "relvel_mode = " << to_token(sc.mpc.relvel) << "\n\n";

  out << "[current]\n";
  switch (sc.current.kind) {
    case CurrentSpec::Kind::uniform:
      out << "kind = uniform\n";
      out << "u_mps = " << fmt(sc.current.u_mps) << "\n";
      out << "v_mps = " << fmt(sc.current.v_mps) << "\n";
      break;
    case CurrentSpec::Kind::shear:
      out << "kind = shear\n";
      out << "base_u_mps = " << fmt(sc.current.base_u_mps) << "\n";
      out << "base_v_mps = " << fmt(sc.current.base_v_mps) << "\n";
      out << "axis = " << fmt(sc.current.axis[0]) << "," << fmt(sc.current.axis[1]) << ","
          << fmt(sc.current.axis[2]) << "\n";
      out << "du_per_m = " << fmt(sc.current.du_per_m) << "\n";
      out << "dv_per_m = " << fmt(sc.current.dv_per_m) << "\n";
      break;
    case CurrentSpec::Kind::gyre:
      out << "kind = gyre\n";
      out << "center_n_m = " << fmt(sc.current.center_n_m) << "\n";
      out << "center_e_m = " << fmt(sc.current.center_e_m) << "\n";
      out << "strength_mps = " << fmt(sc.current.strength_mps) << "\n";
      out << "radius_m = " << fmt(sc.current.radius_m) << "\n";
      break;
    case CurrentSpec::Kind::grid:
      out << "kind = grid\n";
      out << "grid_file = " << sc.current.grid_file << "\n";
      break;
  }
  out << "\n[mpc]\n";
  out << "dt_s = " << fmt(sc.mpc.dt) << "\n";
  out << "horizon = " << sc.mpc.N << "\n";
  out << "mode = " << to_token(sc.mpc.mode) << "\n";
  out << "exec = " << to_token(sc.mpc.exec) << "\n";

  std::vector<double> qd(12), rd(4), rsd(4);
  for (int i = 0; i < 12; ++i) qd[i] = sc.mpc.weights.Q(i, i);
  for (int i = 0; i < 4; ++i) rd[i] = sc.mpc.weights.R(i, i);
  for (int i = 0; i < 4; ++i) rsd[i] = sc.mpc.weights.R_s(i, i);
  out << "\n[weights]\n";
  out << "q_diag = " << fmt_list(qd) << "\n";
  out << "r_diag = " << fmt_list(rd) << "\n";
  out << "rs_diag = " << fmt_list(rsd) << "\n";
  out << "lambda_relax = " << fmt(sc.mpc.weights.lambda_relax) << "\n";
  out << "w_reb = " << fmt(sc.mpc.weights.w_reb) << "\n";
  out << "e_ref = " << fmt(sc.mpc.weights.e_ref) << "\n";
  out << "kappa_eff = " << fmt(sc.mpc.weights.kappa_eff) << "\n";
  out << "w_glide = " << fmt(sc.mpc.weights.w_glide) << "\n";

  out << "\n[gate]\n";
  out << "v_scale_mps = " << fmt(sc.mpc.gate.v_scale) << "\n";
  out << "eps_e = " << fmt(sc.mpc.gate.eps_e) << "\n";
  out << "eps_c = " << fmt(sc.mpc.gate.eps_c) << "\n";

  out << "\n[limits]\n";
  out << "vel_lin_mps = " << fmt(sc.mpc.bounds.vel_lin) << "\n";
  out << "vel_ang_rps = " << fmt(sc.mpc.bounds.vel_ang) << "\n";
  out << "roll_pitch_rad = " << fmt(sc.mpc.bounds.roll_pitch) << "\n";
  out << "xy_force_n = " << fmt(sc.mpc.bounds.xy_force) << "\n";
  out << "z_force_min_n = " << fmt(sc.mpc.bounds.z_force_min) << "\n";
  out << "z_force_max_n = " << fmt(sc.mpc.bounds.z_force_max) << "\n";
  out << "yaw_moment_nm = " << fmt(sc.mpc.bounds.yaw_moment) << "\n";
  out << "pred_vel_margin_mps = " << fmt(sc.mpc.pred_vel_margin) << "\n";
  out << "pred_ang_vel_margin_rps = " << fmt(sc.mpc.pred_ang_vel_margin) << "\n";

  out << "\n[solver]\n";
  out << "tol_stat = " << fmt(sc.mpc.solver.tol_stat) << "\n";
  out << "tol_feas = " << fmt(sc.mpc.solver.tol_feas) << "\n";
  out << "max_inner = " << sc.mpc.solver.max_inner << "\n";
  out << "max_outer = " << sc.mpc.solver.max_outer << "\n";

  out << "\n[scenario]\n";
  std::vector<double> eta(6), nu(6);
  for (int i = 0; i < 6; ++i) {
    eta[i] = sc.start.eta[i];
    nu[i] = sc.start.nu[i];
  }
  out << "start_eta = " << fmt_list(eta) << "\n";
  out << "start_nu = " << fmt_list(nu) << "\n";
  out << "goals = ";
  for (std::size_t i = 0; i < sc.goals.size(); ++i) {
    if (i) out << " ; ";
    out << fmt(sc.goals[i].pos[0]) << "," << fmt(sc.goals[i].pos[1]) << ","
        << fmt(sc.goals[i].pos[2]) << "," << fmt(sc.goals[i].yaw);
  }
  out << "\n";
  out << "switch_radius_m = " << fmt(sc.switch_radius_m) << "\n";
  out << "arrival_speed_mps = " << fmt(sc.arrival_speed_mps) << "\n";
  out << "duration_cap_s = " << fmt(sc.duration_cap_s) << "\n";
  out << "plant_substeps = " << sc.plant_substeps << "\n";

  out << "\n[actuation]\n";
  out << "allocation_file = " << sc.allocation_file << "\n";
  out << "calibration_file = " << sc.calibration_file << "\n";
  return out.str();
}

}  // namespace chmpc
