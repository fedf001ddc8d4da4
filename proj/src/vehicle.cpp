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

#include "chmpc/vehicle.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace chmpc {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::invariant, "vehicle params: " + what);
}

}  // namespace

Mat6 mass_matrix_rb(const VehicleParams& p) {
  Mat6 m = Mat6::Zero();
  m.diagonal() << p.m, p.m, p.m, p.I_xx, p.I_yy, p.I_zz;
  return m;
}

Mat6 mass_matrix_added(const VehicleParams& p) {
  Mat6 m = Mat6::Zero();
  m.diagonal() << p.X_du, p.Y_dv, p.Z_dw, p.K_dp, p.M_dq, p.N_dr;
  return m;
}

void VehicleParams::finalize() {
  require(m > 0.0, "m must be > 0");
  require(I_xx > 0.0 && I_yy > 0.0 && I_zz > 0.0, "inertias must be > 0");
  require(X_du >= 0.0 && Y_dv >= 0.0 && Z_dw >= 0.0 && K_dp >= 0.0 && M_dq >= 0.0 && N_dr >= 0.0,
          "added-mass coefficients must be >= 0");
  require(X_u >= 0.0 && Y_v >= 0.0 && Z_w >= 0.0 && K_p >= 0.0 && M_q >= 0.0 && N_r >= 0.0,
          "linear damping coefficients must be >= 0 so D(nu_r) stays PSD");
  require(X_uu >= 0.0 && Y_vv >= 0.0 && Z_ww >= 0.0 && K_pp >= 0.0 && M_qq >= 0.0 && N_rr >= 0.0,
          "quadratic damping coefficients must be >= 0 so D(nu_r) stays PSD");
  require(W > 0.0 && B > 0.0, "W and B must be > 0");
  require(g > 0.0, "g must be > 0");

  M = mass_matrix_rb(*this) + mass_matrix_added(*this);
  // Diagonal with strictly positive entries, hence SPD; keep a generic
  // inversion anyway so an off-diagonal extension cannot silently break it.
  Eigen::FullPivLU<Mat6> lu(M);
  if (!lu.isInvertible()) throw Error(Errc::singular_matrix, "vehicle params: total mass matrix is singular");
  M_inv = lu.inverse();
}

VehicleParams load_vehicle_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open vehicle params file: " + path);

  std::map<std::string, double> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, eq;
    double val;
    if (!(ls >> key)) continue;  // blank
    if (!(ls >> eq >> val) || eq != "=") {
      throw Error(Errc::parse, path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    if (!std::isfinite(val)) {
      throw Error(Errc::parse, path + ":" + std::to_string(lineno) + ": non-finite value for " + key);
    }
    if (!kv.emplace(key, val).second) {
      throw Error(Errc::parse, path + ": duplicate key " + key);
    }
  }

  VehicleParams p;
  std::map<std::string, double*> fields = {
      {"m", &p.m},       {"I_xx", &p.I_xx}, {"I_yy", &p.I_yy}, {"I_zz", &p.I_zz},
      {"X_du", &p.X_du}, {"Y_dv", &p.Y_dv}, {"Z_dw", &p.Z_dw}, {"K_dp", &p.K_dp},
      {"M_dq", &p.M_dq}, {"N_dr", &p.N_dr}, {"X_u", &p.X_u},   {"Y_v", &p.Y_v},
      {"Z_w", &p.Z_w},   {"K_p", &p.K_p},   {"M_q", &p.M_q},   {"N_r", &p.N_r},
      {"X_uu", &p.X_uu}, {"Y_vv", &p.Y_vv}, {"Z_ww", &p.Z_ww}, {"K_pp", &p.K_pp},
      {"M_qq", &p.M_qq}, {"N_rr", &p.N_rr}, {"W", &p.W},       {"B", &p.B},
      {"Z_G", &p.Z_G},   {"g", &p.g}};

  for (const auto& [key, slot] : fields) {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(Errc::parse, path + ": missing key " + key);
    *slot = it->second;
    kv.erase(it);
  }
  if (!kv.empty()) throw Error(Errc::parse, path + ": unknown key " + kv.begin()->first);

  p.finalize();
  return p;
}

Vec6 relative_velocity(const VehicleState& state, const CurrentSample& current, RelVelMode mode) {
  return relative_velocity_t<double>(state.eta, state.nu, current.v_ned, mode);
}

Vec12 dynamics_rhs(const VehicleState& state, const ControlWrench& wrench,
                   const CurrentSample& current, const VehicleParams& params, RelVelMode mode) {
  return dynamics_rhs_t<double>(state.as_vector(), wrench.as_vector(), current.v_ned, params, mode);
}

namespace {

VehicleState checked(const Vec12& x, const char* who) {
  VehicleState s = VehicleState::from_vector(x);
  if (!s.all_finite()) throw Error(Errc::nan_abort, std::string(who) + ": non-finite state after step");
  return s;
}

}  // namespace

VehicleState step_euler(const VehicleState& state, const ControlWrench& wrench,
                        const CurrentSample& current, const VehicleParams& params, double dt,
                        RelVelMode mode) {
  if (dt <= 0.0) throw Error(Errc::invariant, "step_euler: dt must be > 0");
  return checked(step_euler_t<double>(state.as_vector(), wrench.as_vector(), current.v_ned, params, dt, mode),
                 "step_euler");
}

VehicleState step_rk4(const VehicleState& state, const ControlWrench& wrench,
                      const CurrentFn& current_at, const VehicleParams& params, double dt,
                      int substeps, RelVelMode mode) {
  if (dt <= 0.0) throw Error(Errc::invariant, "step_rk4: dt must be > 0");
  if (substeps < 1) throw Error(Errc::invariant, "step_rk4: substeps must be >= 1");

  const Vec4 u = wrench.as_vector();
  const double h = dt / substeps;
  Vec12 x = state.as_vector();
  auto f = [&](const Vec12& xi) {
    return dynamics_rhs_t<double>(xi, u, current_at(xi.head<3>()), params, mode);
  };
  for (int i = 0; i < substeps; ++i) {
    const Vec12 k1 = f(x);
    const Vec12 k2 = f(x + 0.5 * h * k1);
    const Vec12 k3 = f(x + 0.5 * h * k2);
    const Vec12 k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return checked(x, "step_rk4");
}

VehicleState step_rk4(const VehicleState& state, const ControlWrench& wrench,
                      const CurrentSample& current, const VehicleParams& params, double dt,
                      int substeps, RelVelMode mode) {
  return step_rk4(state, wrench, [&](const Vec3&) { return current.v_ned; }, params, dt, substeps, mode);
}

}  // namespace chmpc
