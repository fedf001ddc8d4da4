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

#include <random>

#include "chmpc/kernels.hpp"

using namespace chmpc;

namespace {

struct Fixture {
  VehicleParams params;
  CostWeights weights;
  GateParams gate;
  StageModel model;
  std::vector<StageInput> inputs;

  explicit Fixture(std::size_t n, unsigned seed = 101) {
    params = load_vehicle_params("data/bluerov2_params.txt");
    weights.Q = Mat12::Zero();
    weights.Q.diagonal() << 100, 100, 100, 10, 10, 10, 10, 10, 10, 10, 10, 10;
    weights.R = Mat4::Zero();
    weights.R.diagonal() << 1, 1, 0.1, 0.1;
    weights.R_s = Mat4::Identity() * 0.01;
    weights.Q_f = Mat12::Identity();
    weights.lambda_relax = 0.9;
    weights.w_reb = 0.8;
    weights.e_ref = 40.0;
    weights.kappa_eff = 3.0;
    weights.w_glide = 0.35;
    model.params = &params;
    model.weights = &weights;
    model.gate = &gate;
    model.dt = 0.1;
    model.mode = CostMode::shaped;

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> pos(-15.0, 15.0);
    std::uniform_real_distribution<double> ang(-0.6, 0.6);
    std::uniform_real_distribution<double> vel(-1.2, 1.2);
    std::uniform_real_distribution<double> force(-80.0, 80.0);
    inputs.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      StageInput& in = inputs[k];
      in.x << pos(rng), pos(rng), pos(rng), ang(rng), ang(rng), ang(rng) * 2.0, vel(rng), vel(rng),
          vel(rng), vel(rng), vel(rng), vel(rng);
      in.u << force(rng), force(rng), force(rng), force(rng) * 0.25;
      in.u_prev << force(rng), force(rng), force(rng), force(rng) * 0.25;
      in.has_prev = k > 0;
      in.x_is_decision = k > 0;
      in.v_c = Vec3(0.25, -0.15, 0.0);
      in.goal.setZero();
      in.goal.head<3>() << 10.0, -8.0, 5.0;
    }
  }
};

}  // namespace

TEST_CASE("openmp kernels are bitwise identical to the serial references") {
  const Fixture fx(97);

  SUBCASE("values") {
    std::vector<StageValues> a(fx.inputs.size()), b(fx.inputs.size());
    horizon_eval_values(ExecPolicy::serial, fx.model, fx.inputs, a);
    horizon_eval_values(ExecPolicy::openmp, fx.model, fx.inputs, b);
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].cost == b[k].cost);
      CHECK(a[k].step == b[k].step);
    }
  }
  SUBCASE("derivatives") {
    std::vector<StageDerivs> a(fx.inputs.size()), b(fx.inputs.size());
    horizon_eval_derivs(ExecPolicy::serial, fx.model, fx.inputs, a);
    horizon_eval_derivs(ExecPolicy::openmp, fx.model, fx.inputs, b);
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].cost == b[k].cost);
      CHECK(a[k].cost_x == b[k].cost_x);
      CHECK(a[k].cost_u == b[k].cost_u);
      CHECK(a[k].cost_uprev == b[k].cost_uprev);
      CHECK(a[k].step == b[k].step);
      CHECK(a[k].step_x == b[k].step_x);
      CHECK(a[k].step_u == b[k].step_u);
    }
  }
  SUBCASE("batch stage cost") {
    std::vector<double> a(fx.inputs.size()), b(fx.inputs.size());
    batch_stage_cost(ExecPolicy::serial, fx.model, fx.inputs, a);
    batch_stage_cost(ExecPolicy::openmp, fx.model, fx.inputs, b);
    CHECK(a == b);
  }
  SUBCASE("batch sampling") {
    const GyreField field(0.0, 0.0, 0.4, 30.0);
    std::vector<Vec3> pts(301);
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = Vec3(0.3 * i, -0.2 * i, 0.1 * i);
    std::vector<Vec3> a(pts.size()), b(pts.size());
    batch_sample(ExecPolicy::serial, field, pts, a);
    batch_sample(ExecPolicy::openmp, field, pts, b);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(a[i] == b[i]);
  }
  SUBCASE("lagrangian hessians") {
    std::vector<Vec12> lambdas(fx.inputs.size());
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uni(-100.0, 100.0);
    for (auto& l : lambdas)
      for (int i = 0; i < 12; ++i) l[i] = uni(rng);
    std::vector<StageHessian> a(fx.inputs.size()), b(fx.inputs.size());
    horizon_lagrangian_hessians(ExecPolicy::serial, fx.model, fx.inputs, lambdas, a);
    horizon_lagrangian_hessians(ExecPolicy::openmp, fx.model, fx.inputs, lambdas, b);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
  }
}

TEST_CASE("stage derivatives match finite differences of the values") {
  Fixture fx(6, 202);
  std::vector<StageDerivs> ders(fx.inputs.size());
  horizon_eval_derivs(ExecPolicy::serial, fx.model, fx.inputs, ders);

  auto value_of_stage = [&](const StageInput& in) {
    std::vector<StageInput> one{in};
    std::vector<StageValues> out(1);
    horizon_eval_values(ExecPolicy::serial, fx.model, one, out);
    return out[0];
  };

  for (std::size_t k = 1; k < fx.inputs.size(); ++k) {  // k=0 has no x partials
    const StageInput& in = fx.inputs[k];
    for (int i = 0; i < 12; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(in.x[i]));
      StageInput p = in, m = in;
      p.x[i] += h;
      m.x[i] -= h;
      const StageValues vp = value_of_stage(p), vm = value_of_stage(m);
      const double fd_cost = (vp.cost - vm.cost) / (2.0 * h);
      CHECK(ders[k].cost_x[i] == doctest::Approx(fd_cost).epsilon(5e-5));
      const Vec12 fd_step = (vp.step - vm.step) / (2.0 * h);
      CHECK((ders[k].step_x.col(i) - fd_step).cwiseAbs().maxCoeff() < 1e-6);
    }
    for (int i = 0; i < 4; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(in.u[i]));
      StageInput p = in, m = in;
      p.u[i] += h;
      m.u[i] -= h;
      const StageValues vp = value_of_stage(p), vm = value_of_stage(m);
      CHECK(ders[k].cost_u[i] == doctest::Approx((vp.cost - vm.cost) / (2.0 * h)).epsilon(5e-5));
      const Vec12 fd_step = (vp.step - vm.step) / (2.0 * h);
      CHECK((ders[k].step_u.col(i) - fd_step).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("lagrangian hessian matches finite differences of the step jacobian") {
  Fixture fx(3, 303);
  std::vector<Vec12> lambdas(3, Vec12::Zero());
  lambdas[1] << 10, -20, 5, 80, -40, 60, 100, -50, 25, 12, -6, 3;
  std::vector<StageHessian> hess(3);
  horizon_lagrangian_hessians(ExecPolicy::serial, fx.model, fx.inputs, lambdas, hess);

  const StageInput& in = fx.inputs[1];
  const Vec12& lam = lambdas[1];

  auto grad16 = [&](const StageInput& s) {
    std::vector<StageInput> one{s};
    std::vector<StageDerivs> out(1);
    horizon_eval_derivs(ExecPolicy::serial, fx.model, one, out);
    Eigen::Matrix<double, 16, 1> g;
    g.head<12>() = out[0].step_x.transpose() * lam;
    g.tail<4>() = out[0].step_u.transpose() * lam;
    return g;
  };

  for (int i = 0; i < 16; ++i) {
    const double v0 = i < 12 ? in.x[i] : in.u[i - 12];
    const double h = 1e-6 * std::max(1.0, std::abs(v0));
    StageInput p = in, m = in;
    if (i < 12) {
      p.x[i] += h;
      m.x[i] -= h;
    } else {
      p.u[i - 12] += h;
      m.u[i - 12] -= h;
    }
    const Eigen::Matrix<double, 16, 1> fd = (grad16(p) - grad16(m)) / (2.0 * h);
    const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
    CHECK((hess[1].col(i) - fd).cwiseAbs().maxCoeff() / scale < 1e-5);
  }
}

TEST_CASE("pinned initial stage has no state partials") {
  Fixture fx(2, 404);
  std::vector<StageDerivs> ders(2);
  horizon_eval_derivs(ExecPolicy::serial, fx.model, fx.inputs, ders);
  CHECK(ders[0].cost_x.norm() == 0.0);
  CHECK(ders[0].step_x.norm() == 0.0);
  CHECK(ders[0].cost_uprev.norm() == 0.0);
  CHECK(ders[0].step_u.norm() > 0.0);
}
