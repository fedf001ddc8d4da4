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
#include <random>

#include "chmpc/costs.hpp"
#include "chmpc/vehicle.hpp"

using namespace chmpc;

namespace {

VehicleParams default_params() { return load_vehicle_params("data/bluerov2_params.txt"); }

CostWeights paper_weights() {
  CostWeights w;
  w.Q = Mat12::Zero();
  w.Q.diagonal() << 100, 100, 100, 10, 10, 10, 10, 10, 10, 10, 10, 10;
  w.R = Mat4::Zero();
  w.R.diagonal() << 1, 1, 0.1, 0.1;
  w.R_s = Mat4::Identity() * 0.01;
  w.Q_f = Mat12::Identity();
  w.lambda_relax = 0.9;
  w.w_reb = 0.8;
  w.e_ref = 40.0;
  w.kappa_eff = 3.0;
  w.w_glide = 0.35;
  return w;
}

StageContext random_ctx(std::mt19937& rng) {
  std::uniform_real_distribution<double> pos(-30.0, 30.0);
  std::uniform_real_distribution<double> ang(-0.8, 0.8);
  std::uniform_real_distribution<double> vel(-1.5, 1.5);
  std::uniform_real_distribution<double> force(-100.0, 100.0);
  std::uniform_real_distribution<double> cur(-0.4, 0.4);
  StageContext ctx;
  ctx.state.eta << pos(rng), pos(rng), pos(rng), ang(rng), ang(rng), ang(rng) * 3.0;
  ctx.state.nu << vel(rng), vel(rng), vel(rng), vel(rng), vel(rng), vel(rng);
  ctx.wrench = {force(rng), force(rng), force(rng), force(rng) * 0.3};
  ctx.prev_wrench = ControlWrench{force(rng), force(rng), force(rng), force(rng) * 0.3};
  ctx.current = CurrentSample(cur(rng), cur(rng));
  ctx.goal.setZero();
  ctx.goal.head<3>() << pos(rng), pos(rng), pos(rng);
  ctx.goal[5] = ang(rng);
  ctx.k = 1;
  return ctx;
}

}  // namespace

TEST_CASE("helpfulness gate") {
  GateParams gp;  // defaults: v_scale 0.05, eps_e 1e-6, eps_c 1e-9

  SUBCASE("anti-aligned current kills the alignment factor") {
    // large magnitudes keep the smoothing bias below 1e-12
    const Vec3 e(1e5, 0.0, 0.0);
    const Vec3 vc(-100.0, 0.0, 0.0);
    CHECK(alignment_factor(e, vc, gp) <= 1e-12);
    CHECK(alignment_factor(e, vc, gp) >= 0.0);
  }

  SUBCASE("zero current bounds the gate by the strength residual") {
    VehicleState s;
    const double sk = helpfulness(s, CurrentSample(0.0, 0.0), Vec3(10, 0, 0), gp);
    CHECK(sk <= std::tanh(std::sqrt(1e-9) / 0.05));  // ~6.3e-4
    CHECK(sk > 0.0);
  }

  SUBCASE("45-degree alignment at 0.1 m/s") {
    VehicleState s;
    s.eta.setZero();
    const Vec3 goal(10.0, 0.0, 0.0);
    const CurrentSample c(0.1 / std::sqrt(2.0), 0.1 / std::sqrt(2.0));
    const double sk = helpfulness(s, c, goal, gp);
    // hand evaluation: 0.5 (1 + sqrt(2)/2) tanh(2) = 0.8229
    CHECK(sk == doctest::Approx(0.5 * (1.0 + std::sqrt(2.0) / 2.0) * std::tanh(2.0)).epsilon(1e-4));
  }

  SUBCASE("bounds hold over random inputs") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> pos(-50.0, 50.0);
    std::uniform_real_distribution<double> cur(-2.0, 2.0);
    for (int i = 0; i < 10000; ++i) {
      VehicleState s;
      s.eta.head<3>() << pos(rng), pos(rng), pos(rng);
      const double sk = helpfulness(s, CurrentSample(cur(rng), cur(rng)),
                                    Vec3(pos(rng), pos(rng), pos(rng)), gp);
      CHECK(sk >= 0.0);
      CHECK(sk < 1.0);
    }
  }
}

TEST_CASE("along-track decomposition") {
  SUBCASE("at the goal the projection vanishes") {
    const auto at = along_track_error(Vec3(3, 4, 5), Vec3(3, 4, 5), 1e-6);
    CHECK(at.e.norm() == 0.0);
    CHECK(at.e_par.norm() == 0.0);
  }
  SUBCASE("smoothed projector shrinks e by m/(m+eps)") {
    const Vec3 pos(0, 0, 0), goal(7, 0, 0);
    const double eps = 1e-6;
    const auto at = along_track_error(pos, goal, eps);
    const double m = 49.0;
    CHECK((at.e_par - Vec3(7.0 * m / (m + eps), 0, 0)).norm() < 1e-12);
    CHECK(at.e_par.norm() <= at.e.norm());
  }
  SUBCASE("residual is orthogonal to the direction as eps -> 0") {
    const auto at = along_track_error(Vec3(1, 2, 3), Vec3(2, 1, 5), 1e-14);
    const Vec3 ehat = at.e / std::sqrt(at.e.squaredNorm() + 1e-14);
    CHECK(std::abs(ehat.dot(at.e_perp())) <= 1e-12);
  }
  SUBCASE("eps must be positive") {
    CHECK_THROWS_AS(along_track_error(Vec3::Zero(), Vec3::Ones(), 0.0), Error);
  }
}

TEST_CASE("stage cost") {
  const VehicleParams params = default_params();
  const CostWeights w = paper_weights();
  GateParams gp;

  SUBCASE("strongly anti-aligned current reduces shaped to baseline") {
    StageContext ctx;
    ctx.state.eta << 0, 0, 0, 0, 0, 0;
    ctx.goal.setZero();
    ctx.goal[0] = 1e5;                       // goal far north
    ctx.current = CurrentSample(-50.0, 0);   // strong current south
    ctx.wrench = {20.0, 5.0, -10.0, 2.0};
    ctx.k = 0;
    ctx.prev_wrench.reset();
    const double base = stage_cost(ctx, w, gp, CostMode::baseline, params);
    const double shaped = stage_cost(ctx, w, gp, CostMode::shaped, params);
    CHECK(shaped == doctest::Approx(base).epsilon(1e-10));
  }

  SUBCASE("at the goal with zero wrench only rebate and glide terms remain") {
    StageContext ctx;
    ctx.state.eta << 5, 6, 7, 0, 0, 0;
    ctx.goal.setZero();
    ctx.goal.head<3>() << 5, 6, 7;
    ctx.current = CurrentSample(0.2, -0.1);
    ctx.wrench = {};
    ctx.k = 0;
    ctx.prev_wrench.reset();
    const double shaped = stage_cost(ctx, w, gp, CostMode::shaped, params);
    // independent term-by-term evaluation: tracking/effort vanish, rebate is
    // full, glide sees |xdot_pos - v_c|^2 = |v_c|^2 at rest
    const double s_gate = helpfulness(ctx.state, ctx.current, ctx.goal.head<3>(), gp);
    const double expect = -s_gate * w.w_reb + s_gate * w.w_glide * ctx.current.v_ned.squaredNorm();
    CHECK(shaped == doctest::Approx(expect).epsilon(1e-12));
  }

  SUBCASE("MCS-only shaping never exceeds the baseline") {
    CostWeights mcs = w;
    mcs.kappa_eff = 0.0;
    mcs.w_glide = 0.0;
    std::mt19937 rng(23);
    for (int i = 0; i < 10000; ++i) {
      const StageContext ctx = random_ctx(rng);
      const double base = stage_cost(ctx, mcs, gp, CostMode::baseline, params);
      const double shaped = stage_cost(ctx, mcs, gp, CostMode::shaped, params);
      CHECK(shaped <= base);
      // The reduction is bounded by the gated relaxation plus the full rebate.
      const double s_gate = helpfulness(ctx.state, ctx.current, ctx.goal.head<3>(), gp);
      const auto at = along_track_error(ctx.state.position(), ctx.goal.head<3>(), gp.eps_e);
      const double epar_q = at.e_par.dot(mcs.Q_pos() * at.e_par);
      CHECK(base - shaped <= s_gate * (mcs.lambda_relax * epar_q + mcs.w_reb) + 1e-9);
    }
  }

  SUBCASE("rebate factor is bounded and maximal at zero thrust") {
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> force(-120.0, 120.0);
    const Vec3 rl = w.R_lin_diag();
    for (int i = 0; i < 1000; ++i) {
      const Vec3 ul(force(rng), force(rng), force(rng));
      const double q = rl[0] * ul[0] * ul[0] + rl[1] * ul[1] * ul[1] + rl[2] * ul[2] * ul[2];
      const double reb = w.e_ref / (w.e_ref + q);
      CHECK(reb > 0.0);
      CHECK(reb <= 1.0);
    }
  }

  SUBCASE("relaxation never flips the sign of the position penalty") {
    std::mt19937 rng(31);
    for (int i = 0; i < 1000; ++i) {
      const StageContext ctx = random_ctx(rng);
      const double s_gate = helpfulness(ctx.state, ctx.current, ctx.goal.head<3>(), gp);
      const auto at = along_track_error(ctx.state.position(), ctx.goal.head<3>(), gp.eps_e);
      const double pos_q = at.e.dot(w.Q_pos() * at.e);
      const double relax = s_gate * w.lambda_relax * at.e_par.dot(w.Q_pos() * at.e_par);
      CHECK(pos_q - relax >= (1.0 - w.lambda_relax) * at.e_par.dot(w.Q_pos() * at.e_par) - 1e-9);
      CHECK(pos_q - relax >= -1e-12);
    }
  }

  SUBCASE("prev wrench presence must match the stage index") {
    StageContext ctx;
    ctx.k = 1;
    ctx.prev_wrench.reset();
    CHECK_THROWS_AS(stage_cost(ctx, w, gp, CostMode::baseline, params), Error);
    ctx.k = 0;
    ctx.prev_wrench = ControlWrench{};
    CHECK_THROWS_AS(stage_cost(ctx, w, gp, CostMode::baseline, params), Error);
  }
}

TEST_CASE("stage cost gradients match finite differences") {
  const VehicleParams params = default_params();
  const CostWeights w = paper_weights();
  GateParams gp;
  std::mt19937 rng(37);

  using D20 = Dual<20>;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    StageContext ctx = random_ctx(rng);
    if (trial % 3 == 0) ctx.goal.head<3>() = ctx.state.position() + Vec3(1e-5, -2e-5, 1e-5);
    if (trial % 4 == 0) ctx.current = CurrentSample(1e-7, -1e-7);

    const Vec12 x = ctx.state.as_vector();
    const Vec4 u = ctx.wrench.as_vector();
    const Vec4 up = ctx.prev_wrench->as_vector();

    Vec12T<D20> xd;
    Vec4T<D20> ud, upd;
    for (int i = 0; i < 12; ++i) xd[i] = D20::seed(x[i], i);
    for (int i = 0; i < 4; ++i) ud[i] = D20::seed(u[i], 12 + i);
    for (int i = 0; i < 4; ++i) upd[i] = D20::seed(up[i], 16 + i);
    const D20 cost = stage_cost_t<D20>(xd, ud, &upd, ctx.current.v_ned, ctx.goal, w, gp,
                                       CostMode::shaped, params, RelVelMode::full_subtraction);

    auto eval = [&](const Vec12& xx, const Vec4& uu, const Vec4& uup) {
      return stage_cost_t<double>(xx, uu, &uup, ctx.current.v_ned, ctx.goal, w, gp,
                                  CostMode::shaped, params, RelVelMode::full_subtraction);
    };
    Eigen::Matrix<double, 20, 1> fd;
    for (int i = 0; i < 20; ++i) {
      const double v0 = i < 12 ? x[i] : (i < 16 ? u[i - 12] : up[i - 16]);
      const double h = 1e-7 * std::max(1.0, std::abs(v0));
      Vec12 xp = x, xm = x;
      Vec4 u_p = u, u_m = u, upp = up, upm = up;
      if (i < 12) {
        xp[i] += h;
        xm[i] -= h;
      } else if (i < 16) {
        u_p[i - 12] += h;
        u_m[i - 12] -= h;
      } else {
        upp[i - 16] += h;
        upm[i - 16] -= h;
      }
      fd[i] = (eval(xp, u_p, upp) - eval(xm, u_m, upm)) / (2.0 * h);
    }
    const double scale = std::max({1.0, cost.d.cwiseAbs().maxCoeff(), fd.cwiseAbs().maxCoeff()});
    CHECK((cost.d - fd).cwiseAbs().maxCoeff() / scale <= 1e-5);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("terminal cost") {
  const Mat12 qf = Mat12::Identity();
  Vec12 g = Vec12::Zero();
  g[0] = 3.0;
  SUBCASE("zero at the goal") { CHECK(terminal_cost(g, g, qf) == 0.0); }
  SUBCASE("unit error in one coordinate") {
    Vec12 x = g;
    x[7] += 1.0;
    CHECK(terminal_cost(x, g, qf) == doctest::Approx(1.0));
  }
  SUBCASE("yaw error wraps across 2 pi") {
    Vec12 x = g;
    x[5] = 2.0 * M_PI + 0.1;
    CHECK(terminal_cost(x, g, qf) == doctest::Approx(0.01).epsilon(1e-9));
  }
}

TEST_CASE("discrete Riccati fixed point") {
  SUBCASE("scalar oracle") {
    // independent fixed-point iteration of p = 0.25 p - 0.25 p^2/(1+p) + 1
    double p_ref = 1.0;
    for (int i = 0; i < 200; ++i) p_ref = 0.25 * p_ref - 0.25 * p_ref * p_ref / (1.0 + p_ref) + 1.0;
    CHECK(p_ref == doctest::Approx(1.1327822185).epsilon(1e-9));  // root of p^2 - 0.25p - 1

    MatX a(1, 1), b(1, 1), q(1, 1), r(1, 1);
    a << 0.5;
    b << 1.0;
    q << 1.0;
    r << 1.0;
    const MatX p = solve_dare(a, b, q, r, 1e-12, 10000);
    CHECK(p(0, 0) == doctest::Approx(p_ref).epsilon(1e-6));
  }

  SUBCASE("memoryless system returns Q") {
    MatX a = MatX::Zero(3, 3), b = MatX::Identity(3, 2).leftCols(2), q = MatX::Identity(3, 3),
         r = MatX::Identity(2, 2);
    const MatX p = solve_dare(a, b, q, r);
    CHECK((p - q).norm() < 1e-12);
  }

  SUBCASE("vehicle linearization residual") {
    const VehicleParams params = default_params();
    Mat12 q = Mat12::Zero();
    q.diagonal() << 100, 100, 100, 10, 10, 10, 10, 10, 10, 10, 10, 10;
    Mat4 r = Mat4::Zero();
    r.diagonal() << 1, 1, 0.1, 0.1;
    Vec12 goal = Vec12::Zero();
    goal.head<3>() << 5, 8, 12;
    goal[5] = 0.7;

    const Mat12 qf = dare_terminal(params, 0.1, q, r, goal);
    Mat12 a;
    Eigen::Matrix<double, 12, 4> b;
    Vec12 x0 = Vec12::Zero();
    x0.head<6>() = goal.head<6>();
    linearize_step_euler(params, 0.1, x0, Vec4::Zero(), Vec3::Zero(),
                         RelVelMode::full_subtraction, a, b);
    CHECK(dare_residual(a, b, q, r, qf) <= 1e-8);

    Eigen::SelfAdjointEigenSolver<Mat12> es(qf);
    CHECK(es.eigenvalues().minCoeff() > 0.0);  // positive definite terminal weight
  }

  SUBCASE("unstabilizable linearization is reported") {
    // Unstable mode with no control authority at all.
    MatX a(1, 1), b(1, 1), q(1, 1), r(1, 1);
    a << 2.0;
    b << 0.0;
    q << 1.0;
    r << 1.0;
    CHECK_THROWS_AS(solve_dare(a, b, q, r, 1e-8, 2000), Error);
  }
}

TEST_CASE("weight validation") {
  CostWeights w = paper_weights();
  SUBCASE("valid set passes") { w.validate(); }
  SUBCASE("lambda out of range") {
    w.lambda_relax = 1.2;
    CHECK_THROWS_AS(w.validate(), Error);
  }
  SUBCASE("R must be positive definite") {
    w.R(0, 0) = 0.0;
    CHECK_THROWS_AS(w.validate(), Error);
  }
  SUBCASE("asymmetric Q rejected") {
    w.Q(0, 1) = 1.0;
    CHECK_THROWS_AS(w.validate(), Error);
  }
}
