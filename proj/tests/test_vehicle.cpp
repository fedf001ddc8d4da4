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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "chmpc/vehicle.hpp"

using namespace chmpc;

namespace {

VehicleParams default_params() { return load_vehicle_params("data/bluerov2_params.txt"); }

VehicleParams neutral_params() {
  VehicleParams p = default_params();
  p.B = p.W;
  p.Z_G = 0.0;
  p.finalize();
  return p;
}

VehicleState random_state(std::mt19937& rng, double vel_scale = 1.0) {
  std::uniform_real_distribution<double> pos(-20.0, 20.0);
  std::uniform_real_distribution<double> ang(-0.8, 0.8);
  std::uniform_real_distribution<double> yaw(-3.0, 3.0);
  std::uniform_real_distribution<double> vel(-vel_scale, vel_scale);
  VehicleState s;
  s.eta << pos(rng), pos(rng), pos(rng), ang(rng), ang(rng), yaw(rng);
  s.nu << vel(rng), vel(rng), vel(rng), vel(rng), vel(rng), vel(rng);
  return s;
}

}  // namespace

TEST_CASE("rotation: identity case") {
  const Mat3 r0 = rotation_body_to_ned<double>(0.0, 0.0, 0.0);
  CHECK((r0 - Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("rotation: quarter yaw maps body x to NED y") {
  const Mat3 r = rotation_body_to_ned<double>(0.0, 0.0, M_PI / 2.0);
  const Vec3 mapped = r * Vec3(1.0, 0.0, 0.0);
  CHECK((mapped - Vec3(0.0, 1.0, 0.0)).norm() < 1e-15);
}

TEST_CASE("rotation: proper orthogonal at a generic attitude") {
  const Mat3 r = rotation_body_to_ned<double>(0.1, 0.2, 0.3);
  CHECK(((r.transpose() * r) - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("euler rate transform") {
  const Mat3 t0 = euler_rate_transform<double>(0.0, 0.0);
  CHECK((t0 - Mat3::Identity()).norm() == 0.0);

  // Closed form at phi = 0: [1, 0, tan(theta); 0, 1, 0; 0, 0, 1/cos(theta)].
  const Mat3 t = euler_rate_transform<double>(0.0, 0.5);
  const Vec3 rates = t * Vec3(0.0, 0.0, 1.0);
  CHECK(rates[0] == doctest::Approx(std::tan(0.5)).epsilon(1e-12));
  CHECK(rates[1] == doctest::Approx(0.0));
  CHECK(rates[2] == doctest::Approx(1.0 / std::cos(0.5)).epsilon(1e-12));

  CHECK_THROWS_AS(euler_rate_transform<double>(0.0, M_PI / 2.0 - 1e-4), Error);
}

TEST_CASE("relative velocity") {
  std::mt19937 rng(11);
  const VehicleState s = random_state(rng);

  SUBCASE("zero current leaves nu unchanged") {
    const Vec6 nur = relative_velocity(s, CurrentSample(0.0, 0.0));
    CHECK((nur - s.nu).norm() == 0.0);
  }
  SUBCASE("drifting with the flow gives zero relative velocity") {
    const CurrentSample c(0.3, -0.2);
    VehicleState drift = s;
    const Mat3 r = rotation_body_to_ned<double>(s.eta[3], s.eta[4], s.eta[5]);
    drift.nu.head<3>() = r.transpose() * c.v_ned;
    drift.nu.tail<3>().setZero();
    CHECK(relative_velocity(drift, c).norm() < 1e-14);
  }
  SUBCASE("quarter yaw against a north current") {
    VehicleState q;
    q.eta << 0, 0, 0, 0, 0, M_PI / 2.0;
    const Vec6 nur = relative_velocity(q, CurrentSample(1.0, 0.0));
    // direct 3x3 oracle: v_c^b = R' [1,0,0] = [0,-1,0], nu_r = -v_c^b
    CHECK(nur[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(nur[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(nur[2]) < 1e-12);
  }
  SUBCASE("surge_sway_only matches full subtraction at level attitude") {
    VehicleState level = s;
    level.eta[3] = level.eta[4] = 0.0;
    const CurrentSample c(0.2, 0.1);
    const Vec6 a = relative_velocity(level, c, RelVelMode::full_subtraction);
    const Vec6 b = relative_velocity(level, c, RelVelMode::surge_sway_only);
    CHECK((a - b).norm() < 1e-15);
  }
  SUBCASE("modes differ at nonzero pitch") {
    VehicleState pitched = s;
    pitched.eta[3] = 0.0;
    pitched.eta[4] = 0.4;
    const CurrentSample c(0.3, 0.0);
    const Vec6 a = relative_velocity(pitched, c, RelVelMode::full_subtraction);
    const Vec6 b = relative_velocity(pitched, c, RelVelMode::surge_sway_only);
    CHECK(a[2] != b[2]);
    CHECK(b[2] == pitched.nu[2]);
  }
}

TEST_CASE("dynamics equilibria") {
  const VehicleParams p = neutral_params();

  SUBCASE("rest is an equilibrium for neutral buoyancy") {
    VehicleState s;
    s.eta << 1, 2, 3, 0, 0, 0.7;
    const Vec12 xd = dynamics_rhs(s, ControlWrench{}, CurrentSample(0.0, 0.0), p);
    CHECK(xd.norm() == 0.0);
  }

  SUBCASE("drifting with a uniform current is force-free") {
    const CurrentSample c(0.4, -0.1);
    VehicleState s;
    s.eta << -3, 5, 10, 0.2, -0.1, 1.1;
    const Mat3 r = rotation_body_to_ned<double>(s.eta[3], s.eta[4], s.eta[5]);
    s.nu.head<3>() = r.transpose() * c.v_ned;
    const Vec12 xd = dynamics_rhs(s, ControlWrench{}, c, p);
    CHECK(xd.tail<6>().norm() < 1e-12);              // nu_dot = 0
    CHECK((xd.head<3>() - c.v_ned).norm() < 1e-12);  // position rate tracks the flow
    CHECK(xd.segment<3>(3).norm() < 1e-12);
  }

  SUBCASE("pure heave wrench accelerates only heave") {
    VehicleState s;
    ControlWrench w;
    w.Z = 20.0;
    const Vec12 xd = dynamics_rhs(s, w, CurrentSample(0.0, 0.0), p);
    Vec6 expect = Vec6::Zero();
    expect[2] = w.Z / (p.m + p.Z_dw);
    CHECK((xd.tail<6>() - expect).norm() < 1e-14);
  }
}

TEST_CASE("steppers") {
  const VehicleParams p = default_params();
  std::mt19937 rng(22);
  const VehicleState s = random_state(rng, 0.8);
  const ControlWrench w{12.0, -4.0, 8.0, 1.5};
  const CurrentSample c(0.25, 0.1);

  SUBCASE("euler step is definitional") {
    const double dt = 0.07;
    const VehicleState out = step_euler(s, w, c, p, dt);
    const Vec12 expect = s.as_vector() + dt * dynamics_rhs(s, w, c, p);
    CHECK((out.as_vector() - expect).norm() == 0.0);
  }

  SUBCASE("first-order consistency as dt -> 0") {
    const double dt = 1e-8;
    const VehicleState out = step_euler(s, w, c, p, dt);
    const double fk = dynamics_rhs(s, w, c, p).norm();
    CHECK((out.as_vector() - s.as_vector()).norm() <= dt * fk * (1.0 + 1e-12));
  }

  SUBCASE("equilibrium stays put under both steppers") {
    const VehicleParams pn = neutral_params();
    VehicleState eq;
    eq.eta << 0, 0, 5, 0, 0, 1.0;
    const CurrentSample none(0.0, 0.0);
    CHECK((step_euler(eq, ControlWrench{}, none, pn, 0.1).as_vector() - eq.as_vector()).norm() == 0.0);
    CHECK((step_rk4(eq, ControlWrench{}, none, pn, 0.1, 4).as_vector() - eq.as_vector()).norm() == 0.0);
  }

  SUBCASE("rk4 matches a fine euler rollout") {
    VehicleState ref = s;
    for (int i = 0; i < 10000; ++i) ref = step_euler(ref, w, c, p, 1e-4);
    VehicleState rk = s;
    for (int i = 0; i < 10; ++i) rk = step_rk4(rk, w, c, p, 0.1, 4);
    CHECK((rk.eta.head<3>() - ref.eta.head<3>()).norm() < 1e-5);
  }

  SUBCASE("rk4 error drops with substeps at fourth order") {
    const VehicleState coarse = step_rk4(s, w, c, p, 0.4, 4);
    const VehicleState fine = step_rk4(s, w, c, p, 0.4, 8);
    const VehicleState truth = step_rk4(s, w, c, p, 0.4, 256);
    const double e4 = (coarse.as_vector() - truth.as_vector()).norm();
    const double e8 = (fine.as_vector() - truth.as_vector()).norm();
    const double ratio = e4 / e8;
    CHECK(ratio > 8.0);  // nominal 16x for a fourth-order method
    CHECK(ratio < 40.0);
  }

  SUBCASE("substeps must be positive") {
    CHECK_THROWS_AS(step_rk4(s, w, c, p, 0.1, 0), Error);
  }

  SUBCASE("non-finite propagation is rejected") {
    ControlWrench bad;
    bad.X = 1e308;
    CHECK_THROWS_AS(step_euler(s, bad, c, p, 1e6), Error);
  }
}

TEST_CASE("energy dissipation with zero input") {
  // tau = 0, W = B, Z_G = 0, no current: nu' M nu must not increase.
  const VehicleParams p = neutral_params();
  VehicleState s;
  s.eta << 0, 0, 10, 0.1, -0.05, 0.3;
  s.nu << 1.0, -0.6, 0.4, 0.5, -0.4, 0.8;
  const CurrentSample none(0.0, 0.0);
  double v_prev = s.nu.dot(p.M * s.nu);
  for (int i = 0; i < 2000; ++i) {
    s = step_rk4(s, ControlWrench{}, none, p, 1e-3, 1);
    const double v = s.nu.dot(p.M * s.nu);
    CHECK(v <= v_prev * (1.0 + 1e-10) + 1e-15);
    v_prev = v;
  }
  CHECK(v_prev < 0.1);  // strictly dissipated by the end
}

TEST_CASE("frame consistency under yaw rotation") {
  // Yaw-symmetric surge/sway and roll/pitch parameters, neutral restoring.
  VehicleParams p = neutral_params();
  p.Y_dv = p.X_du;
  p.Y_v = p.X_u;
  p.Y_vv = p.X_uu;
  p.I_yy = p.I_xx;
  p.M_dq = p.K_dp;
  p.M_q = p.K_p;
  p.M_qq = p.K_pp;
  p.finalize();

  const double alpha = 0.85;
  const Mat3 rot = rotation_body_to_ned<double>(0.0, 0.0, alpha);

  const CurrentSample c0(0.3, -0.1);
  const CurrentSample c1 = CurrentSample::from_ned(rot * c0.v_ned);

  VehicleState a;
  a.eta << 0, 0, 5, 0, 0, 0.4;
  a.nu << 0.8, 0.2, -0.1, 0.05, -0.03, 0.2;
  VehicleState b = a;
  b.eta[5] += alpha;

  const ControlWrench w{10.0, -3.0, 4.0, 0.8};
  for (int i = 0; i < 50; ++i) {
    a = step_rk4(a, w, c0, p, 0.02, 2);
    b = step_rk4(b, w, c1, p, 0.02, 2);
  }
  CHECK((b.eta.head<3>() - rot * a.eta.head<3>()).norm() < 1e-9);
  CHECK(wrap_angle(b.eta[5] - a.eta[5] - alpha) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK((b.nu - a.nu).norm() < 1e-9);
}

TEST_CASE("rigid-body coriolis has no translational force without rotation") {
  const VehicleParams p = default_params();
  std::mt19937 rng(33);
  std::uniform_real_distribution<double> uni(-1.5, 1.5);
  for (int i = 0; i < 100; ++i) {
    Vec6 nu;
    nu << uni(rng), uni(rng), uni(rng), 0.0, 0.0, 0.0;
    CHECK(coriolis_rb_times(p, nu).head<3>().norm() == 0.0);
  }
}

TEST_CASE("matrix builders match a hand-written reference") {
  const VehicleParams p = default_params();
  std::mt19937 rng(44);
  std::uniform_real_distribution<double> uni(-1.5, 1.5);

  for (int trial = 0; trial < 100; ++trial) {
    Vec6 nu, nur, eta;
    for (int i = 0; i < 6; ++i) {
      nu[i] = uni(rng);
      nur[i] = uni(rng);
      eta[i] = uni(rng);
    }
    eta[3] *= 0.5;
    eta[4] *= 0.5;

    // Reference evaluations written out element by element.
    const double u = nu[0], v = nu[1], w = nu[2], pp = nu[3], q = nu[4], r = nu[5];
    Vec6 crb;
    crb[0] = -p.m * (v * r - w * q);
    crb[1] = -p.m * (w * pp - u * r);
    crb[2] = -p.m * (u * q - v * pp);
    crb[3] = -p.m * (v * w - w * v) - (p.I_zz - p.I_yy) * q * r;
    crb[4] = -p.m * (w * u - u * w) - (p.I_xx - p.I_zz) * r * pp;
    crb[5] = -p.m * (u * v - v * u) - (p.I_yy - p.I_xx) * pp * q;
    CHECK((coriolis_rb_times(p, nu) - crb).cwiseAbs().maxCoeff() < 1e-12);

    const double ur = nur[0], vr = nur[1], wr = nur[2], pr = nur[3], qr = nur[4], rr = nur[5];
    const double a1x = p.X_du * ur, a1y = p.Y_dv * vr, a1z = p.Z_dw * wr;
    const double a2x = p.K_dp * pr, a2y = p.M_dq * qr, a2z = p.N_dr * rr;
    Vec6 ca;
    ca[0] = -(a1y * rr - a1z * qr);
    ca[1] = -(a1z * pr - a1x * rr);
    ca[2] = -(a1x * qr - a1y * pr);
    ca[3] = -(a1y * wr - a1z * vr) - (a2y * rr - a2z * qr);
    ca[4] = -(a1z * ur - a1x * wr) - (a2z * pr - a2x * rr);
    ca[5] = -(a1x * vr - a1y * ur) - (a2x * qr - a2y * pr);
    CHECK((coriolis_added_times(p, nur) - ca).cwiseAbs().maxCoeff() < 1e-12);

    Vec6 d;
    d[0] = (p.X_u + p.X_uu * std::abs(ur)) * ur;
    d[1] = (p.Y_v + p.Y_vv * std::abs(vr)) * vr;
    d[2] = (p.Z_w + p.Z_ww * std::abs(wr)) * wr;
    d[3] = (p.K_p + p.K_pp * std::abs(pr)) * pr;
    d[4] = (p.M_q + p.M_qq * std::abs(qr)) * qr;
    d[5] = (p.N_r + p.N_rr * std::abs(rr)) * rr;
    CHECK((damping_times(p, nur) - d).cwiseAbs().maxCoeff() < 1e-12);

    const double sphi = std::sin(eta[3]), cphi = std::cos(eta[3]);
    const double sth = std::sin(eta[4]), cth = std::cos(eta[4]);
    Vec6 g;
    g[0] = (p.W - p.B) * sth;
    g[1] = -(p.W - p.B) * cth * sphi;
    g[2] = -(p.W - p.B) * cth * cphi;
    g[3] = -p.m * p.g * p.Z_G * cth * sphi;
    g[4] = -p.m * p.g * p.Z_G * sth;
    g[5] = 0.0;
    CHECK((restoring_vector(p, eta) - g).cwiseAbs().maxCoeff() < 1e-12);

    Mat6 m_ref = Mat6::Zero();
    m_ref.diagonal() << p.m + p.X_du, p.m + p.Y_dv, p.m + p.Z_dw, p.I_xx + p.K_dp,
        p.I_yy + p.M_dq, p.I_zz + p.N_dr;
    CHECK((p.M - m_ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("parameter file loading") {
  SUBCASE("default file loads and is SPD") {
    const VehicleParams p = default_params();
    CHECK(p.m == doctest::Approx(11.5));
    Eigen::SelfAdjointEigenSolver<Mat6> es(p.M);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
  SUBCASE("missing key is rejected with its name") {
    std::ofstream out("/tmp/chmpc_test_params_missing.txt");
    out << "m = 11.5\n";
    out.close();
    try {
      load_vehicle_params("/tmp/chmpc_test_params_missing.txt");
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("missing key") != std::string::npos);
    }
  }
  SUBCASE("unknown key is rejected") {
    std::ifstream in("data/bluerov2_params.txt");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out("/tmp/chmpc_test_params_unknown.txt");
    out << content << "\nX_typo = 1.0\n";
    out.close();
    CHECK_THROWS_AS(load_vehicle_params("/tmp/chmpc_test_params_unknown.txt"), Error);
  }
  SUBCASE("negative damping violates the PSD invariant") {
    VehicleParams p = default_params();
    p.X_u = -1.0;
    CHECK_THROWS_AS(p.finalize(), Error);
  }
}
