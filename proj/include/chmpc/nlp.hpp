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
#include <iosfwd>

#include "chmpc/types.hpp"

namespace chmpc {

/// Smooth NLP: min f(x) s.t. c(x) = 0, lower <= x <= upper.
/// Callbacks must be deterministic for fixed input.
struct NlpProblem {
  int n = 0;  // decision dimension
  int m = 0;  // number of equality constraints
  VecX lower, upper;

  /// Value path, used by the line search: f(x) and c(x).
  std::function<void(const VecX& x, double& f, VecX& c)> eval;
  /// Derivative path: f, grad f, c and the dense Jacobian of c.
  /// J keeps its sparsity pattern between calls; implementations may zero it
  /// once and overwrite only their nonzero blocks afterwards.
  std::function<void(const VecX& x, double& f, VecX& g, VecX& c, MatX& J)> eval_derivs;

  /// Optional PSD model of the objective curvature (typically the constant
  /// quadratic part). When present, the inner solver takes reduced Newton-type
  /// steps with the frozen matrix hess0 + lag_hess + rho J'J instead of
  /// L-BFGS ones, which is decisive on ill-conditioned penalized
  /// transcriptions.
  MatX hess0;

  /// Optional constraint curvature: returns the n x n Hessian of lambda'c(x).
  /// Without it the pass model omits this term and the curvature pairs have
  /// to learn it, which slows the stationarity tail considerably.
  std::function<MatX(const VecX& x, const VecX& lambda)> lag_hess;

  /// Optional permutation of 0..n-1 under which the curvature model is
  /// banded with the given half bandwidth (e.g. stage-interleaved shooting
  /// variables); the reduced factorizations then cost O(n b^2) instead of
  /// O(n^3).
  std::vector<int> band_order;
  int band_width = 0;
};

enum class SolveStatus { converged, max_iter, line_search_failure };
const char* to_string(SolveStatus s);

struct SolverOptions {
  double tol_stat = 1e-5;   // projected-gradient stationarity
  double tol_feas = 1e-6;   // equality feasibility (inf norm)
  double tol_comp = 1e-5;   // box complementarity (min-form)
  int max_inner = 200;      // quasi-Newton iterations per outer pass
  int max_outer = 30;       // multiplier updates
  int lbfgs_mem = 30;
  double rho_init = 10.0;
  double rho_growth = 10.0;  // applied when feasibility improves by < 4x
  double rho_max = 1e8;
  double armijo_c1 = 1e-4;
  int max_backtracks = 40;
  std::ostream* trace = nullptr;  // optional line-delimited debug records
};

/// Best iterate is always returned; non-converged statuses are usable warm
/// starts for the next MPC step.
struct NlpSolution {
  VecX x;
  double objective = 0.0;
  double stat_res = 0.0;
  double feas_res = 0.0;
  double comp_res = 0.0;
  int inner_iterations = 0;
  int outer_iterations = 0;
  double final_rho = 0.0;  // feed back as rho_init when warm starting
  SolveStatus status = SolveStatus::max_iter;
  VecX multipliers;  // equality multipliers at exit

  bool converged() const { return status == SolveStatus::converged; }
};

/// Augmented-Lagrangian outer loop around a box-projected L-BFGS inner solver.
/// x0 is projected onto the bounds; lambda0, when given, warm-starts the
/// equality multipliers.
NlpSolution solve(const NlpProblem& problem, const VecX& x0, const SolverOptions& opts = {},
                  const VecX* lambda0 = nullptr);

/// Max relative error between analytic derivatives and central differences of
/// step h, over the objective gradient and the constraint Jacobian.
double check_gradients(const NlpProblem& problem, const VecX& x, double h);

}  // namespace chmpc
