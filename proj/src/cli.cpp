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

#include "chmpc/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "chmpc/nlp.hpp"

namespace chmpc {

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << content;
}

int exit_for(const Error& e) {
  switch (e.code()) {
    case Errc::nan_abort: return exit_code::nan_abort;
    case Errc::degenerate_data: return exit_code::degenerate_data;
    default: return exit_code::config_error;
  }
}

bool solver_breakdown(const RunResult& r) {
  const int bad = r.max_iter_steps + r.line_search_failure_steps;
  return !r.steps.empty() && 2 * bad > static_cast<int>(r.steps.size());
}

}  // namespace

std::string run_csv(const RunResult& res) {
  std::ostringstream out;
  out << "t,xN,yE,zD,phi,theta,psi,u,v,w,p,q,r,X,Y,Z,Nyaw,s_mean,P_total_W,solver_status\n";
  for (const auto& s : res.steps) {
    out << num(s.t);
    for (int i = 0; i < 6; ++i) out << ',' << num(s.state.eta[i]);
    for (int i = 0; i < 6; ++i) out << ',' << num(s.state.nu[i]);
    out << ',' << num(s.command.X) << ',' << num(s.command.Y) << ',' << num(s.command.Z) << ','
        << num(s.command.N_yaw);
    out << ',' << num(s.gate_mean) << ',' << num(s.power_w) << ',' << to_string(s.status) << '\n';
  }
  return out.str();
}

std::string summary_text(const RunResult& res, const Scenario& sc) {
  std::ostringstream out;
  out << "# arrival criterion: position error < " << num(sc.switch_radius)
      << " m and speed < " << num(sc.arrival_speed) << " m/s\n";
  out << "mode: " << to_token(res.mode) << "\n";
  for (std::size_t i = 0; i < res.arrival_time_s.size(); ++i) {
    out << "arrival_waypoint_" << i << "_s: "
        << (std::isfinite(res.arrival_time_s[i]) ? num(res.arrival_time_s[i]) : "not_reached") << "\n";
  }
  out << "arrived: " << (res.arrived ? "yes" : "no") << "\n";
  out << "final_time_s: " << num(res.final_time_s) << "\n";
  out << "energy_mean_step_J: " << num(res.mean_step_energy_j) << "\n";
  out << "energy_max_step_J: " << num(res.max_step_energy_j) << "\n";
  out << "energy_total_kJ: " << num(res.total_energy_j / 1000.0) << "\n";
  out << "gate_mean: " << num(res.mean_gate) << "\n";
  out << "solver_converged_steps: " << res.converged_steps << "\n";
  out << "solver_max_iter_steps: " << res.max_iter_steps << "\n";
  out << "solver_line_search_failure_steps: " << res.line_search_failure_steps << "\n";
  out << "constraint_violations: " << res.constraint_violations << "\n";
  return out.str();
}

namespace {

void write_run_outputs(const RunResult& res, const Scenario& sc, const std::filesystem::path& dir) {
  const std::string mode = to_token(res.mode);
  write_file(dir / ("run_" + mode + ".csv"), run_csv(res));
  write_file(dir / ("summary_" + mode + ".txt"), summary_text(res, sc));

  std::ostringstream xy, xz, pw, th;
  xy << "t,xN,yE\n";
  xz << "t,xN,zD\n";
  pw << "t,P_total_W\n";
  th << "t,T1,T2,T3,T4,T5,T6\n";
  for (const auto& s : res.steps) {
    xy << num(s.t) << ',' << num(s.state.eta[0]) << ',' << num(s.state.eta[1]) << '\n';
    xz << num(s.t) << ',' << num(s.state.eta[0]) << ',' << num(s.state.eta[2]) << '\n';
    pw << num(s.t) << ',' << num(s.power_w) << '\n';
    th << num(s.t);
    for (int i = 0; i < 6; ++i) th << ',' << num(s.thrust[i]);
    th << '\n';
  }
  write_file(dir / ("path_xy_" + mode + ".csv"), xy.str());
  write_file(dir / ("path_xz_" + mode + ".csv"), xz.str());
  write_file(dir / ("power_" + mode + ".csv"), pw.str());
  write_file(dir / ("thrust_" + mode + ".csv"), th.str());
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  Scenario sc;
  try {
    sc = parse_scenario_config(config_path).build();
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_for(e);
  }
  try {
    const RunResult res = run(sc);
    std::filesystem::create_directories(out_dir);
    write_run_outputs(res, sc, out_dir);
    std::cout << summary_text(res, sc);
    return solver_breakdown(res) ? exit_code::solver_breakdown : exit_code::ok;
  } catch (const Error& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return exit_for(e);
  }
}

int cmd_compare(const std::string& config_path, const std::string& out_dir) {
  Scenario sc;
  try {
    sc = parse_scenario_config(config_path).build();
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_for(e);
  }
  try {
    const CompareReport rep = compare(sc);
    std::filesystem::create_directories(out_dir);
    write_run_outputs(rep.baseline, sc, out_dir);
    write_run_outputs(rep.harnessing, sc, out_dir);

    std::ostringstream csv;
    csv << "mode,arrival_s,energy_mean_step_J,energy_max_step_J,energy_total_kJ,"
           "constraint_violations\n";
    for (const RunResult* r : {&rep.baseline, &rep.harnessing}) {
      csv << to_token(r->mode) << ','
          << (std::isfinite(r->arrival_time_s.back()) ? num(r->arrival_time_s.back()) : "not_reached")
          << ',' << num(r->mean_step_energy_j) << ',' << num(r->max_step_energy_j) << ','
          << num(r->total_energy_j / 1000.0) << ',' << r->constraint_violations << '\n';
    }
    csv << "delta,energy_delta_pct=" << num(rep.energy_delta_pct)
        << ",arrival_delta_s=" << num(rep.arrival_delta_s)
        << ",arrival_ratio=" << num(rep.arrival_ratio) << ",,\n";
    write_file(std::filesystem::path(out_dir) / "compare.csv", csv.str());

    std::cout << "baseline total: " << num(rep.baseline.total_energy_j) << " J, harnessing total: "
              << num(rep.harnessing.total_energy_j) << " J, delta: " << num(rep.energy_delta_pct)
              << " %, arrival ratio: " << num(rep.arrival_ratio) << "\n";
    return (solver_breakdown(rep.baseline) || solver_breakdown(rep.harnessing))
               ? exit_code::solver_breakdown
               : exit_code::ok;
  } catch (const Error& e) {
    std::cerr << "compare failed: " << e.what() << "\n";
    return exit_for(e);
  }
}

int cmd_fit_thruster(const std::string& calibration_path, const std::string& out_dir) {
  try {
    const PowerModel m = fit_power_model(load_calibration(calibration_path));
    std::cout << "a_f = " << num(m.a_f) << "\nb_f = " << num(m.b_f) << "\na_r = " << num(m.a_r)
              << "\nb_r = " << num(m.b_r) << "\nrms_log_residual_f = " << num(m.rms_log_residual_f)
              << "\nrms_log_residual_r = " << num(m.rms_log_residual_r) << "\n";
    std::filesystem::create_directories(out_dir);
    save_power_model(m, (std::filesystem::path(out_dir) / "power_model.txt").string());
    return exit_code::ok;
  } catch (const Error& e) {
    std::cerr << "fit failed: " << e.what() << "\n";
    return exit_for(e);
  }
}

int cmd_check(const std::string& config_path, const std::string&) {
  ScenarioConfig cfg;
  Scenario sc;
  try {
    cfg = parse_scenario_config(config_path);
    sc = cfg.build();
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_for(e);
  }

  bool ok = true;
  const auto report = [&ok](const std::string& name, bool pass, const std::string& detail) {
    std::cout << "CHECK " << name << ": " << (pass ? "PASS" : "FAIL") << " (" << detail << ")\n";
    if (!pass) ok = false;
  };

  // Terminal-weight fixed point.
  try {
    const Vec12 goal = sc.goals.front().as_goal();
    Vec12 x0 = Vec12::Zero();
    x0.head<6>() = goal.head<6>();
    Mat12 A;
    Eigen::Matrix<double, 12, 4> B;
    linearize_step_euler(sc.params, sc.mpc.dt, x0, Vec4::Zero(), Vec3::Zero(), sc.mpc.relvel, A, B);
    const Mat12 P = dare_terminal(sc.params, sc.mpc.dt, sc.mpc.weights.Q, sc.mpc.weights.R, goal,
                                  sc.mpc.relvel);
    const double res = dare_residual(A, B, sc.mpc.weights.Q, sc.mpc.weights.R, P);
    report("dare-residual", res <= 1e-8, "frobenius residual " + num(res));
  } catch (const Error& e) {
    report("dare-residual", false, e.what());
  }

  // Objective/Jacobian derivatives on the transcribed problem at a
  // deterministically perturbed hover iterate.
  try {
    MpcConfig mpc = sc.mpc;
    mpc.weights.Q_f = dare_terminal(sc.params, mpc.dt, mpc.weights.Q, mpc.weights.R,
                                    sc.goals.front().as_goal(), mpc.relvel);
    auto [warm_states, warm_wrenches] = hover_warm_start(sc.initial, mpc.N);
    const auto currents = sample_horizon_currents(*sc.field, warm_states);
    const NlpProblem p = transcribe(mpc, sc.params, sc.initial, sc.goals.front().as_goal(),
                                    mpc.weights.Q_f, currents);
    VecX z0(p.n);
    for (int k = 1; k <= mpc.N; ++k) z0.segment<12>(12 * (k - 1)) = warm_states[k].as_vector();
    for (int k = 0; k < mpc.N; ++k) z0.segment<4>(12 * mpc.N + 4 * k).setZero();
    for (int i = 0; i < p.n; ++i) {
      z0[i] += 0.05 * std::sin(0.7 * i + 0.3);
      z0[i] = std::min(std::max(z0[i], p.lower[i]), p.upper[i]);
    }
    const double err = check_gradients(p, z0, 1e-6);
    report("gradient-fidelity", err <= 1e-5, "max relative error " + num(err));
  } catch (const Error& e) {
    report("gradient-fidelity", false, e.what());
  }

  // Allocation KKT over deterministic random wrenches.
  try {
    std::mt19937 rng(20260809);
    std::uniform_real_distribution<double> uni(-1.5, 1.5);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Vec4 tau(uni(rng) * sc.mpc.bounds.xy_force, uni(rng) * sc.mpc.bounds.xy_force,
                     uni(rng) * sc.mpc.bounds.z_force_max, uni(rng) * sc.mpc.bounds.yaw_moment);
      const Vec6 t = allocate(sc.alloc, tau);
      worst = std::max(worst, allocation_kkt_residual(sc.alloc, tau, t));
    }
    report("allocation-kkt", worst <= 1e-8, "worst residual " + num(worst));
  } catch (const Error& e) {
    report("allocation-kkt", false, e.what());
  }

  // Field smoothness along the start->goal segment.
  if (cfg.current.kind == CurrentSpec::Kind::grid) {
    const auto grid = load_grid_file(cfg.current.grid_file);
    if (grid.interp() == GridInterp::trilinear) {
      std::cout << "CHECK field-smoothness: WARN (trilinear interpolation is C0 across cell "
                   "faces; use 'smoothed' for gradient-sensitive runs)\n";
    } else {
      report("field-smoothness", true, "smoothed C1 interpolation");
    }
  } else {
    report("field-smoothness", true, "analytic field");
  }

  return ok ? exit_code::ok : exit_code::check_failed;
}

}  // namespace chmpc
