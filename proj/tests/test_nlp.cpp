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

#include <cstring>
#include <limits>

#include "chmpc/nlp.hpp"

using namespace chmpc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

NlpProblem scalar_box_quadratic() {
  // min (x-2)^2 over [0, 1]
  NlpProblem p;
  p.n = 1;
  p.m = 0;
  p.lower = VecX::Constant(1, 0.0);
  p.upper = VecX::Constant(1, 1.0);
  p.eval = [](const VecX& x, double& f, VecX& c) {
    f = (x[0] - 2.0) * (x[0] - 2.0);
    c.resize(0);
  };
  p.eval_derivs = [](const VecX& x, double& f, VecX& g, VecX& c, MatX& j) {
    f = (x[0] - 2.0) * (x[0] - 2.0);
    g.resize(1);
    g[0] = 2.0 * (x[0] - 2.0);
    c.resize(0);
    j.resize(0, 1);
  };
  return p;
}

NlpProblem sum_to_one_quadratic() {
  // min x^2 + y^2 s.t. x + y = 1
  NlpProblem p;
  p.n = 2;
  p.m = 1;
  p.lower = VecX::Constant(2, -kInf);
  p.upper = VecX::Constant(2, kInf);
  p.eval = [](const VecX& x, double& f, VecX& c) {
    f = x.squaredNorm();
    c.resize(1);
    c[0] = x[0] + x[1] - 1.0;
  };
  p.eval_derivs = [](const VecX& x, double& f, VecX& g, VecX& c, MatX& j) {
    f = x.squaredNorm();
    g = 2.0 * x;
    c.resize(1);
    c[0] = x[0] + x[1] - 1.0;
    j.resize(1, 2);
    j << 1.0, 1.0;
  };
  return p;
}

NlpProblem rosenbrock() {
  NlpProblem p;
  p.n = 2;
  p.m = 0;
  p.lower = VecX::Constant(2, -kInf);
  p.upper = VecX::Constant(2, kInf);
  const auto fval = [](const VecX& x) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  };
  p.eval = [fval](const VecX& x, double& f, VecX& c) {
    f = fval(x);
    c.resize(0);
  };
  p.eval_derivs = [fval](const VecX& x, double& f, VecX& g, VecX& c, MatX& j) {
    f = fval(x);
    g.resize(2);
    g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
    g[1] = 200.0 * (x[1] - x[0] * x[0]);
    c.resize(0);
    j.resize(0, 2);
  };
  return p;
}

}  // namespace

TEST_CASE("active bound is found") {
  const NlpProblem p = scalar_box_quadratic();
  const NlpSolution s = solve(p, VecX::Constant(1, 0.2));
  CHECK(s.converged());
  CHECK(s.x[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("equality-constrained quadratic") {
  const NlpProblem p = sum_to_one_quadratic();
  VecX x0(2);
  x0 << 3.0, -2.0;
  const NlpSolution s = solve(p, x0);
  CHECK(s.converged());
  CHECK(s.x[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(s.x[1] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(s.feas_res <= 1e-6);
  CHECK(s.stat_res <= 1e-5);
}

TEST_CASE("equality-constrained quadratic with curvature model") {
  NlpProblem p = sum_to_one_quadratic();
  p.hess0 = 2.0 * MatX::Identity(2, 2);
  VecX x0(2);
  x0 << 3.0, -2.0;
  const NlpSolution s = solve(p, x0);
  CHECK(s.converged());
  CHECK(s.x[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(s.inner_iterations < 100);
}

TEST_CASE("rosenbrock from the classic start") {
  const NlpProblem p = rosenbrock();
  VecX x0(2);
  x0 << -1.2, 1.0;
  SolverOptions opts;
  opts.tol_stat = 1e-9;
  const NlpSolution s = solve(p, x0, opts);
  CHECK(s.converged());
  CHECK(std::abs(s.x[0] - 1.0) < 1e-6);
  CHECK(std::abs(s.x[1] - 1.0) < 1e-6);
}

TEST_CASE("identical inputs give bitwise identical solutions") {
  const NlpProblem p = sum_to_one_quadratic();
  VecX x0(2);
  x0 << 0.3, 1.7;
  const NlpSolution a = solve(p, x0);
  const NlpSolution b = solve(p, x0);
  CHECK(std::memcmp(a.x.data(), b.x.data(), sizeof(double) * 2) == 0);
  CHECK(a.objective == b.objective);
  CHECK(a.inner_iterations == b.inner_iterations);
}

TEST_CASE("iterates respect the box exactly") {
  NlpProblem p = scalar_box_quadratic();
  SolverOptions opts;
  opts.max_inner = 3;
  const NlpSolution s = solve(p, VecX::Constant(1, 5.0), opts);  // x0 outside box
  CHECK(s.x[0] >= 0.0);
  CHECK(s.x[0] <= 1.0);
}

TEST_CASE("iteration cap returns the best iterate with max_iter status") {
  const NlpProblem p = rosenbrock();
  VecX x0(2);
  x0 << -1.2, 1.0;
  SolverOptions opts;
  opts.max_inner = 1;
  opts.max_outer = 1;
  const NlpSolution s = solve(p, x0, opts);
  CHECK(s.status == SolveStatus::max_iter);
  CHECK(s.x.allFinite());
  double f0;
  VecX c0;
  p.eval(x0, f0, c0);
  CHECK(s.objective <= f0);  // made progress, usable as a warm start
}

TEST_CASE("gradient checker") {
  SUBCASE("exact on quadratics") {
    const NlpProblem p = sum_to_one_quadratic();
    VecX x(2);
    x << 0.7, -0.4;
    CHECK(check_gradients(p, x, 1e-5) <= 1e-10);
  }
  SUBCASE("flags a corrupted gradient") {
    NlpProblem p = sum_to_one_quadratic();
    auto good = p.eval_derivs;
    p.eval_derivs = [good](const VecX& x, double& f, VecX& g, VecX& c, MatX& j) {
      good(x, f, g, c, j);
      g[0] += 0.5;  // deliberate corruption
    };
    VecX x(2);
    x << 0.7, -0.4;
    CHECK(check_gradients(p, x, 1e-5) >= 1e-2);
  }
  SUBCASE("rejects non-positive step") {
    const NlpProblem p = sum_to_one_quadratic();
    CHECK_THROWS_AS(check_gradients(p, VecX::Zero(2), 0.0), Error);
  }
}
