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

#include <functional>
#include <string>

#include "chmpc/dual.hpp"
#include "chmpc/types.hpp"

namespace chmpc {

// Keeps the Euler-rate transform away from the theta = pi/2 singularity.
inline constexpr double kGimbalGuardRad = M_PI / 2.0 - 1e-3;

/// How the ocean current enters the relative velocity. The body-frame current
/// has a nonzero z component whenever roll/pitch are nonzero; `full_subtraction`
/// removes it from heave as well, `surge_sway_only` leaves heave untouched.
/// Both agree exactly at phi = theta = 0.
enum class RelVelMode { full_subtraction, surge_sway_only };

/// Rigid-body, added-mass, damping and restoring coefficients.
/// Added-mass and damping coefficients are stored as positive magnitudes
/// (the SNAME sign convention is absorbed into the matrix builders).
struct VehicleParams {
  double m = 0.0;
  double I_xx = 0.0, I_yy = 0.0, I_zz = 0.0;
  // added mass
  double X_du = 0.0, Y_dv = 0.0, Z_dw = 0.0, K_dp = 0.0, M_dq = 0.0, N_dr = 0.0;
  // linear damping
  double X_u = 0.0, Y_v = 0.0, Z_w = 0.0, K_p = 0.0, M_q = 0.0, N_r = 0.0;
  // quadratic damping
  double X_uu = 0.0, Y_vv = 0.0, Z_ww = 0.0, K_pp = 0.0, M_qq = 0.0, N_rr = 0.0;
  double W = 0.0;    // weight (N)
  double B = 0.0;    // buoyancy (N)
  double Z_G = 0.0;  // CG vertical offset entering the restoring moments (m)
  double g = 9.81;

  Mat6 M = Mat6::Zero();      // M_RB + M_A, filled by finalize()
  Mat6 M_inv = Mat6::Zero();

  /// Validates invariants and precomputes M and its inverse.
  /// Throws Error(Errc::invariant) naming the offending coefficient.
  void finalize();
};

/// Flat key = value document; throws on missing or unknown keys.
VehicleParams load_vehicle_params(const std::string& path);

Mat6 mass_matrix_rb(const VehicleParams& p);
Mat6 mass_matrix_added(const VehicleParams& p);

template <typename T>
Mat3T<T> skew(const Vec3T<T>& a) {
  Mat3T<T> s;
  s << T(0.0), -a[2], a[1],
       a[2], T(0.0), -a[0],
       -a[1], a[0], T(0.0);
  return s;
}

/// ZYX (yaw-pitch-roll) body-to-NED rotation.
template <typename T>
Mat3T<T> rotation_body_to_ned(const T& phi, const T& theta, const T& psi) {
  using std::cos;
  using std::sin;
  const T cf = cos(phi), sf = sin(phi);
  const T ct = cos(theta), st = sin(theta);
  const T cp = cos(psi), sp = sin(psi);
  Mat3T<T> r;
  r << cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf,
       sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf,
       -st, ct * sf, ct * cf;
  return r;
}

/// Maps body rates [p,q,r] to Euler-angle rates; singular at |theta| = pi/2.
template <typename T>
Mat3T<T> euler_rate_transform(const T& phi, const T& theta) {
  using std::cos;
  using std::sin;
  using std::tan;
  if (std::abs(value_of(theta)) >= kGimbalGuardRad) {
    throw Error(Errc::gimbal_proximity, "euler_rate_transform: |theta| within gimbal guard of pi/2");
  }
  const T cf = cos(phi), sf = sin(phi);
  const T ct = cos(theta), tt = tan(theta);
  Mat3T<T> m;
  m << T(1.0), sf * tt, cf * tt,
       T(0.0), cf, -sf,
       T(0.0), sf / ct, cf / ct;
  return m;
}

template <typename T>
Vec6T<T> relative_velocity_t(const Vec6T<T>& eta, const Vec6T<T>& nu, const Vec3& v_c_ned,
                             RelVelMode mode) {
  const Mat3T<T> r = rotation_body_to_ned<T>(eta[3], eta[4], eta[5]);
  const Vec3T<T> v_c_body = r.transpose() * v_c_ned;
  Vec6T<T> nu_r = nu;
  nu_r[0] -= v_c_body[0];
  nu_r[1] -= v_c_body[1];
  if (mode == RelVelMode::full_subtraction) nu_r[2] -= v_c_body[2];
  return nu_r;
}

template <typename T>
Mat6 coriolis_rb_matrix(const VehicleParams&, const Vec6T<T>&) = delete;

/// C_RB(nu) nu with absolute velocity: [[0, -m S(v)], [-m S(v), -S(I w)]].
template <typename T>
Vec6T<T> coriolis_rb_times(const VehicleParams& p, const Vec6T<T>& nu) {
  const Vec3T<T> v = nu.template head<3>();
  const Vec3T<T> w = nu.template tail<3>();
  Vec3T<T> iw;
  iw << p.I_xx * w[0], p.I_yy * w[1], p.I_zz * w[2];
  Vec6T<T> out;
  out.template head<3>() = -p.m * (skew<T>(v) * w);
  out.template tail<3>() = -p.m * (skew<T>(v) * v) - skew<T>(iw) * w;
  return out;
}

/// C_A(nu_r) nu_r with a1 = [X_du u_r, Y_dv v_r, Z_dw w_r], a2 = [K_dp p, M_dq q, N_dr r].
template <typename T>
Vec6T<T> coriolis_added_times(const VehicleParams& p, const Vec6T<T>& nu_r) {
  Vec3T<T> a1, a2;
  a1 << p.X_du * nu_r[0], p.Y_dv * nu_r[1], p.Z_dw * nu_r[2];
  a2 << p.K_dp * nu_r[3], p.M_dq * nu_r[4], p.N_dr * nu_r[5];
  const Vec3T<T> v = nu_r.template head<3>();
  const Vec3T<T> w = nu_r.template tail<3>();
  Vec6T<T> out;
  out.template head<3>() = -(skew<T>(a1) * w);
  out.template tail<3>() = -(skew<T>(a1) * v) - skew<T>(a2) * w;
  return out;
}

/// D(nu_r) nu_r, diagonal linear + quadratic drag.
template <typename T>
Vec6T<T> damping_times(const VehicleParams& p, const Vec6T<T>& nu_r) {
  using std::abs;
  Vec6T<T> out;
  out[0] = (p.X_u + p.X_uu * abs(nu_r[0])) * nu_r[0];
  out[1] = (p.Y_v + p.Y_vv * abs(nu_r[1])) * nu_r[1];
  out[2] = (p.Z_w + p.Z_ww * abs(nu_r[2])) * nu_r[2];
  out[3] = (p.K_p + p.K_pp * abs(nu_r[3])) * nu_r[3];
  out[4] = (p.M_q + p.M_qq * abs(nu_r[4])) * nu_r[4];
  out[5] = (p.N_r + p.N_rr * abs(nu_r[5])) * nu_r[5];
  return out;
}

/// Gravity/buoyancy restoring vector g_eta(eta).
template <typename T>
Vec6T<T> restoring_vector(const VehicleParams& p, const Vec6T<T>& eta) {
  using std::cos;
  using std::sin;
  const T cf = cos(eta[3]), sf = sin(eta[3]);
  const T ct = cos(eta[4]), st = sin(eta[4]);
  const double wb = p.W - p.B;
  const double mgz = p.m * p.g * p.Z_G;
  Vec6T<T> out;
  out[0] = wb * st;
  out[1] = -wb * ct * sf;
  out[2] = -wb * ct * cf;
  out[3] = -mgz * ct * sf;
  out[4] = -mgz * st;
  out[5] = T(0.0);
  return out;
}

/// xdot = [J(eta) nu; M^-1 (tau - C_RB(nu) nu - C_A(nu_r) nu_r - D(nu_r) nu_r - g_eta)].
/// Rigid-body terms use absolute velocity; hydrodynamic terms use nu_r.
template <typename T>
Vec12T<T> dynamics_rhs_t(const Vec12T<T>& x, const Vec4T<T>& u, const Vec3& v_c_ned,
                         const VehicleParams& p, RelVelMode mode) {
  const Vec6T<T> eta = x.template head<6>();
  const Vec6T<T> nu = x.template tail<6>();
  const Mat3T<T> r = rotation_body_to_ned<T>(eta[3], eta[4], eta[5]);
  const Mat3T<T> t = euler_rate_transform<T>(eta[3], eta[4]);

  Vec6T<T> nu_r = nu;
  {
    const Vec3T<T> v_c_body = r.transpose() * v_c_ned;
    nu_r[0] -= v_c_body[0];
    nu_r[1] -= v_c_body[1];
    if (mode == RelVelMode::full_subtraction) nu_r[2] -= v_c_body[2];
  }

  Vec6T<T> tau;
  tau << u[0], u[1], u[2], T(0.0), T(0.0), u[3];

  const Vec6T<T> force = tau - coriolis_rb_times(p, nu) - coriolis_added_times(p, nu_r) -
                         damping_times(p, nu_r) - restoring_vector(p, eta);

  Vec12T<T> xdot;
  xdot.template head<3>() = r * nu.template head<3>();
  xdot.template segment<3>(3) = t * nu.template tail<3>();
  xdot.template tail<6>() = p.M_inv * force;
  return xdot;
}

template <typename T>
Vec12T<T> step_euler_t(const Vec12T<T>& x, const Vec4T<T>& u, const Vec3& v_c_ned,
                       const VehicleParams& p, double dt, RelVelMode mode) {
  return x + dt * dynamics_rhs_t(x, u, v_c_ned, p, mode);
}

// ---- double-typed public surface -------------------------------------------

Vec6 relative_velocity(const VehicleState& state, const CurrentSample& current,
                       RelVelMode mode = RelVelMode::full_subtraction);

Vec12 dynamics_rhs(const VehicleState& state, const ControlWrench& wrench,
                   const CurrentSample& current, const VehicleParams& params,
                   RelVelMode mode = RelVelMode::full_subtraction);

/// Explicit Euler step; the MPC prediction model.
VehicleState step_euler(const VehicleState& state, const ControlWrench& wrench,
                        const CurrentSample& current, const VehicleParams& params, double dt,
                        RelVelMode mode = RelVelMode::full_subtraction);

/// Position -> NED current velocity, used to resample the field along RK4 stages.
using CurrentFn = std::function<Vec3(const Vec3& pos_ned)>;

/// Classical RK4 with zero-order-hold wrench; the simulator plant model.
VehicleState step_rk4(const VehicleState& state, const ControlWrench& wrench,
                      const CurrentFn& current_at, const VehicleParams& params, double dt,
                      int substeps, RelVelMode mode = RelVelMode::full_subtraction);

VehicleState step_rk4(const VehicleState& state, const ControlWrench& wrench,
                      const CurrentSample& current, const VehicleParams& params, double dt,
                      int substeps, RelVelMode mode = RelVelMode::full_subtraction);

}  // namespace chmpc
