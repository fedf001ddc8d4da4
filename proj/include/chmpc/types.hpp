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

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace chmpc {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using MatX = Eigen::MatrixXd;

template <typename T> using Vec3T = Eigen::Matrix<T, 3, 1>;
template <typename T> using Vec4T = Eigen::Matrix<T, 4, 1>;
template <typename T> using Vec6T = Eigen::Matrix<T, 6, 1>;
template <typename T> using Vec12T = Eigen::Matrix<T, 12, 1>;
template <typename T> using Mat3T = Eigen::Matrix<T, 3, 3>;

enum class Errc {
  config,
  parse,
  dimension_mismatch,
  invariant,
  gimbal_proximity,
  singular_matrix,
  dare_divergence,
  degenerate_data,
  nan_abort,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

/// Pose (NED) and body-frame velocity pair.
/// eta = [x_N, y_E, z_D, phi, theta, psi], nu = [u, v, w, p, q, r].
struct VehicleState {
  Vec6 eta = Vec6::Zero();
  Vec6 nu = Vec6::Zero();

  Vec12 as_vector() const {
    Vec12 x;
    x << eta, nu;
    return x;
  }
  static VehicleState from_vector(const Vec12& x) {
    VehicleState s;
    s.eta = x.head<6>();
    s.nu = x.tail<6>();
    return s;
  }
  Vec3 position() const { return eta.head<3>(); }
  bool all_finite() const { return eta.allFinite() && nu.allFinite(); }
};

/// Commanded 4-DOF wrench: surge/sway/heave force (N) and yaw moment (N m).
struct ControlWrench {
  double X = 0.0;
  double Y = 0.0;
  double Z = 0.0;
  double N_yaw = 0.0;

  Vec4 as_vector() const { return Vec4(X, Y, Z, N_yaw); }
  static ControlWrench from_vector(const Vec4& u) { return {u[0], u[1], u[2], u[3]}; }
  /// [X, Y, Z, 0, 0, N]; roll and pitch are unactuated.
  Vec6 as_tau6() const {
    Vec6 t;
    t << X, Y, Z, 0.0, 0.0, N_yaw;
    return t;
  }
};

/// Horizontal ocean-current velocity in NED; the down component is zero by
/// construction.
struct CurrentSample {
  Vec3 v_ned = Vec3::Zero();

  CurrentSample() = default;
  CurrentSample(double u_c, double v_c) { v_ned << u_c, v_c, 0.0; }
  static CurrentSample from_ned(const Vec3& v) {
    if (v[2] != 0.0) throw Error(Errc::invariant, "current sample: vertical component must be zero");
    CurrentSample s;
    s.v_ned = v;
    return s;
  }
};

}  // namespace chmpc
