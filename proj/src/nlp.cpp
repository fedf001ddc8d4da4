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

#include "chmpc/nlp.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <vector>

namespace chmpc {

int g_dbg_refactors = 0;
int g_dbg_evals = 0;
int g_dbg_derivs = 0;
int g_dbg_hbuilds = 0;

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::line_search_failure: return "line_search_failure";
  }
  return "unknown";
}

namespace {

VecX project(const VecX& x, const VecX& lo, const VecX& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

double projected_gradient_norm(const VecX& x, const VecX& g, const VecX& lo, const VecX& hi) {
  return (project(x - g, lo, hi) - x).cwiseAbs().maxCoeff();
}

double complementarity_residual(const VecX& x, const VecX& gl, const VecX& lo, const VecX& hi) {
  double worst = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    const double slack_lo = std::isfinite(lo[i]) ? x[i] - lo[i] : std::numeric_limits<double>::infinity();
    const double slack_hi = std::isfinite(hi[i]) ? hi[i] - x[i] : std::numeric_limits<double>::infinity();
    const double slack = std::max(0.0, std::min(slack_lo, slack_hi));
    worst = std::max(worst, std::min(std::abs(gl[i]), slack));
  }
  return worst;
}

struct LbfgsPair {
  VecX s, y;
  double rho;  // 1 / s'y
};

// Two-loop recursion on the masked gradient; masked coordinates are held.
VecX lbfgs_direction(const std::deque<LbfgsPair>& mem, const VecX& g_masked) {
  VecX q = -g_masked;
  if (mem.empty()) return q;
  std::vector<double> alpha(mem.size());
  for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  const auto& last = mem.back();
  const double gamma = last.s.dot(last.y) / last.y.squaredNorm();
  q *= gamma;
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(q);
    q += (alpha[i] - beta) * mem[i].s;
  }
  return q;
}

// Reduced solves with the structured curvature model: applies H_FF^-1 on the
// given free set, holding the remaining coordinates. With a band ordering the
// factorization is a banded Cholesky at O(n b^2); otherwise a dense band is
// used. Indefiniteness (possible away from the optimum, where the constraint
// curvature need not be convex) is handled by an escalating diagonal shift.
class ReducedModel {
 public:
  void set_structure(const std::vector<int>& order, int band) {
    rank_.assign(order.size(), 0);
    for (std::size_t r = 0; r < order.size(); ++r) rank_[order[r]] = static_cast<int>(r);
    band_hint_ = band;
  }

  void set_matrix(const MatX& h) {
    h_ = &h;
    dirty_ = true;
  }

  void set_free(const std::vector<int>& free_idx) {
    if (!dirty_ && free_idx == last_free_) return;
    ++chmpc::g_dbg_refactors;
    last_free_ = free_idx;
    dirty_ = false;
    ordered_ = free_idx;
    const int nf = static_cast<int>(ordered_.size());
    ok_ = nf > 0;
    if (!ok_) return;
    if (!rank_.empty()) {
      std::sort(ordered_.begin(), ordered_.end(), [&](int a, int b) { return rank_[a] < rank_[b]; });
    }
    bw_ = (band_hint_ > 0 && !rank_.empty()) ? std::min(band_hint_, nf - 1) : nf - 1;

    double maxdiag = 1.0;
    for (int i = 0; i < nf; ++i) maxdiag = std::max(maxdiag, std::abs((*h_)(ordered_[i], ordered_[i])));
    mu_ = 0.0;
    const double mu0 = 1e-8 * maxdiag;
    for (int tries = 0; tries < 60; ++tries) {
      if (factor()) return;
      mu_ = mu_ == 0.0 ? mu0 : mu_ * 10.0;
    }
    ok_ = false;  // direction falls back to steepest descent
  }

  double shift() const { return mu_; }

  VecX apply_inverse(const VecX& v) const {
    VecX out = VecX::Zero(v.size());
    if (!ok_) return out;
    const int nf = static_cast<int>(ordered_.size());
    VecX y(nf);
    for (int j = 0; j < nf; ++j) {
      double s = v[ordered_[j]];
      for (int k = std::max(0, j - bw_); k < j; ++k) s -= lb_(j - k, k) * y[k];
      y[j] = s / lb_(0, j);
    }
    for (int j = nf - 1; j >= 0; --j) {
      double s = y[j];
      const int imax = std::min(nf - 1, j + bw_);
      for (int i = j + 1; i <= imax; ++i) s -= lb_(i - j, j) * y[i];
      y[j] = s / lb_(0, j);
    }
    for (int j = 0; j < nf; ++j) out[ordered_[j]] = y[j];
    return out;
  }

 private:
  // In-place banded Cholesky of the reduced matrix plus the current shift.
  bool factor() {
    const int nf = static_cast<int>(ordered_.size());
    lb_.resize(bw_ + 1, nf);
    for (int j = 0; j < nf; ++j) {
      for (int d = 0; d <= bw_; ++d) {
        lb_(d, j) = j + d < nf ? (*h_)(ordered_[j + d], ordered_[j]) : 0.0;
      }
      lb_(0, j) += mu_;
    }
    for (int j = 0; j < nf; ++j) {
      double s = lb_(0, j);
      for (int k = std::max(0, j - bw_); k < j; ++k) {
        const double l = lb_(j - k, k);
        s -= l * l;
      }
      if (!(s > 0.0) || !std::isfinite(s)) return false;
      const double dj = std::sqrt(s);
      lb_(0, j) = dj;
      const int imax = std::min(nf - 1, j + bw_);
      for (int i = j + 1; i <= imax; ++i) {
        double t = lb_(i - j, j);
        for (int k = std::max({0, i - bw_, j - bw_}); k < j; ++k) t -= lb_(i - k, k) * lb_(j - k, k);
        lb_(i - j, j) = t / dj;
      }
    }
    return true;
  }

  const MatX* h_ = nullptr;
  bool dirty_ = true;
  bool ok_ = false;
  double mu_ = 0.0;
  int band_hint_ = 0;
  int bw_ = 0;
  std::vector<int> rank_;
  std::vector<int> last_free_;
  std::vector<int> ordered_;
  MatX lb_;
};

// Two-loop recursion preconditioned by the reduced model; all vectors are
// restricted to the current free set (pairs are discarded on mask changes).
VecX preconditioned_lbfgs_direction(const std::deque<LbfgsPair>& mem, const VecX& g_masked,
                                    const ReducedModel& model) {
  VecX q = g_masked;
  std::vector<double> alpha(mem.size());
  for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  VecX r = model.apply_inverse(q);
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(r);
    r += (alpha[i] - beta) * mem[i].s;
  }
  return -r;
}

}  // namespace

NlpSolution solve(const NlpProblem& problem, const VecX& x0, const SolverOptions& opts,
                  const VecX* lambda0) {
  const int n = problem.n;
  const int m = problem.m;
  const bool newton = problem.hess0.size() > 0;

  VecX x = project(x0, problem.lower, problem.upper);
  VecX lambda = VecX::Zero(m);
  if (lambda0 != nullptr && lambda0->size() == m) lambda = *lambda0;
  double rho = m > 0 ? opts.rho_init : 0.0;

  // Current-iterate evaluation cache.
  double f = 0.0;
  VecX g(n), c(m);
  MatX J;
  problem.eval_derivs(x, f, g, c, J);

  auto merit_value = [&](double fv, const VecX& cv) {
    return m > 0 ? fv + lambda.dot(cv) + 0.5 * rho * cv.squaredNorm() : fv;
  };
  auto merit_grad = [&]() -> VecX {
    return m > 0 ? VecX(g + J.transpose() * (lambda + rho * c)) : g;
  };

  NlpSolution sol;
  sol.x = x;
  sol.objective = f;
  sol.multipliers = lambda;

  int total_inner = 0;
  double feas_prev = std::numeric_limits<double>::infinity();
  bool line_search_failed = false;

  MatX h_pass;
  ReducedModel model;
  if (!problem.band_order.empty()) model.set_structure(problem.band_order, problem.band_width);
  std::deque<LbfgsPair> mem;

  const int outer_passes = m > 0 ? opts.max_outer : 1;
  for (int outer = 0; outer < outer_passes; ++outer) {
    double phi = merit_value(f, c);
    VecX gphi = merit_grad();
    line_search_failed = false;

    // Slow part of the curvature model (objective quadratic + constraint
    // curvature); the penalty part rho J'J tracks the current Jacobian, which
    // matters once rho is large and Jacobian drift is amplified by it.
    MatX h_slow;
    const auto build_slow = [&]() {
      h_slow = problem.hess0;
      if (m > 0 && problem.lag_hess) h_slow += problem.lag_hess(x, lambda + rho * c);
    };
    const auto build_pass_matrix = [&]() {
      h_pass = h_slow;
      if (m > 0) h_pass.noalias() += rho * (J.transpose() * J);
      model.set_matrix(h_pass);
    };
    if (newton) {
      build_slow();
      build_pass_matrix();
    }
    int steps_since_h = 0;
    std::vector<int> free_prev;

    // Loose pass-relative inner tolerance while infeasible; full KKT
    // stationarity once the constraints are essentially satisfied.
    const double stat0 = projected_gradient_norm(x, gphi, problem.lower, problem.upper);
    const double omega = (m > 0 && feas_prev > opts.tol_feas && outer + 1 < opts.max_outer)
                             ? std::max(opts.tol_stat, 1e-3 * stat0)
                             : opts.tol_stat;

    int inner = 0;
    const int inner_budget = m > 0 ? opts.max_inner : opts.max_inner * opts.max_outer;
    for (; inner < inner_budget; ++inner) {
      if (projected_gradient_norm(x, gphi, problem.lower, problem.upper) <= omega) break;

      // Refresh the Gauss-Newton part of the merit curvature when the pass
      // matrix has gone stale; the curvature pairs bridge in between.
      if (newton && m > 0 && steps_since_h >= 5) {
        ++chmpc::g_dbg_hbuilds;
        build_slow();
        build_pass_matrix();
        steps_since_h = 0;
      }

      // Hold coordinates pinned at an active bound. Only exactly-at-bound
      // coordinates are held (projection lands on the bound value exactly);
      // near-bound ones stay in the reduced system so the Newton step can
      // walk them onto the bound in a coordinated move.
      VecX gm = gphi;
      std::vector<int> free_now;
      free_now.reserve(n);
      for (int i = 0; i < n; ++i) {
        const double eps_act = 1e-12 * (1.0 + std::abs(x[i]));
        const bool at_lo = x[i] <= problem.lower[i] + eps_act && gphi[i] > 0.0;
        const bool at_hi = x[i] >= problem.upper[i] - eps_act && gphi[i] < 0.0;
        if (at_lo || at_hi) {
          gm[i] = 0.0;
        } else {
          free_now.push_back(i);
        }
      }
      if (free_now != free_prev) {
        mem.clear();
        free_prev = std::move(free_now);
      }
      if (newton) model.set_free(free_prev);

      bool accepted = false;
      for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
        VecX d;
        if (attempt == 0) {
          d = newton ? preconditioned_lbfgs_direction(mem, gm, model) : lbfgs_direction(mem, gm);
        } else {
          d = -gm;
        }
        for (int i = 0; i < n; ++i) {
          if (gm[i] == 0.0 && gphi[i] != 0.0) d[i] = 0.0;
        }
        if (d.dot(gphi) >= 0.0) d = -gm;

        // Sufficient-decrease test with an absolute allowance at the
        // floating-point noise floor of the merit; without it the line search
        // stalls once the achievable decrease drops below eps*|phi|.
        const double noise = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(phi));
        double alpha = 1.0;
        for (int bt = 0; bt < opts.max_backtracks; ++bt, alpha *= 0.5) {
          const VecX xt = project(x + alpha * d, problem.lower, problem.upper);
          const VecX step = xt - x;
          const double decrease = gphi.dot(step);
          if (decrease >= 0.0) continue;  // projection destroyed descent; shrink
          double ft;
          VecX ct(m);
          ++chmpc::g_dbg_evals;
          problem.eval(xt, ft, ct);
          const double phit = merit_value(ft, ct);
          if (std::isfinite(phit) && phit <= phi + opts.armijo_c1 * decrease + noise) {
            const VecX g_old = gphi;
            ++chmpc::g_dbg_derivs;
            problem.eval_derivs(xt, f, g, c, J);
            x = xt;
            phi = merit_value(f, c);
            gphi = merit_grad();
            if (!(newton && problem.lag_hess)) {  // exact model: no pairs needed
              const VecX s = step;
              const VecX y = gphi - g_old;
              const double sy = s.dot(y);
              if (sy > 1e-12 * s.norm() * y.norm()) {
                mem.push_back({s, y, 1.0 / sy});
                if (static_cast<int>(mem.size()) > opts.lbfgs_mem) mem.pop_front();
              }
            }
            ++steps_since_h;
            accepted = true;
            break;
          }
        }
        if (!accepted && attempt == 0 && !newton) mem.clear();
      }

      if (opts.trace != nullptr) {
        const VecX pgv = project(x - gphi, problem.lower, problem.upper) - x;
        int iworst = 0;
        pgv.cwiseAbs().maxCoeff(&iworst);
        *opts.trace << "WORST i=" << iworst << " x=" << x[iworst] << " lo=" << problem.lower[iworst]
                    << " hi=" << problem.upper[iworst] << " gphi=" << gphi[iworst]
                    << " pg=" << pgv[iworst] << "\n";
        *opts.trace << "outer=" << outer << " inner=" << inner << " merit=" << phi << " f=" << f
                    << " feas=" << (m > 0 ? c.cwiseAbs().maxCoeff() : 0.0)
                    << " stat=" << projected_gradient_norm(x, gphi, problem.lower, problem.upper)
                    << " rho=" << rho << " mu=" << model.shift() << " acc=" << accepted << "\n";
      }
      if (!accepted) {
        line_search_failed = true;
        break;
      }
    }
    total_inner += inner;

    // First-order multiplier estimate and KKT residuals at the inner solution.
    const VecX lambda_trial = m > 0 ? VecX(lambda + rho * c) : lambda;
    const VecX gl = m > 0 ? VecX(g + J.transpose() * lambda_trial) : g;
    const double stat = projected_gradient_norm(x, gl, problem.lower, problem.upper);
    const double feas = m > 0 ? c.cwiseAbs().maxCoeff() : 0.0;
    const double comp = complementarity_residual(x, gl, problem.lower, problem.upper);

    sol.x = x;
    sol.objective = f;
    sol.stat_res = stat;
    sol.feas_res = feas;
    sol.comp_res = comp;
    sol.multipliers = lambda_trial;
    sol.outer_iterations = outer + 1;
    sol.inner_iterations = total_inner;
    sol.final_rho = rho;

    if (stat <= opts.tol_stat && feas <= opts.tol_feas && comp <= opts.tol_comp) {
      sol.status = SolveStatus::converged;
      return sol;
    }
    // A stalled line search inside a pass means this pass's merit is at its
    // numerical floor; the multiplier/penalty update may still unblock the
    // next pass, so only the last pass's stall is terminal.
    if (line_search_failed && m == 0) {
      sol.status = SolveStatus::line_search_failure;
      return sol;
    }

    if (m > 0) {
      // The collected curvature stays valid across passes whose multiplier
      // update is small relative to the multipliers themselves.
      const double dlam = rho * feas;
      if (dlam > 1e-2 * (1.0 + lambda.cwiseAbs().maxCoeff())) mem.clear();
      lambda = lambda_trial;
      const double rho_old = rho;
      if (feas > opts.tol_feas && feas > 0.25 * feas_prev) {
        rho = std::min(rho * opts.rho_growth, opts.rho_max);
      }
      if (rho != rho_old) mem.clear();
      feas_prev = feas;
    }
  }

  sol.status = line_search_failed ? SolveStatus::line_search_failure : SolveStatus::max_iter;
  return sol;
}

double check_gradients(const NlpProblem& problem, const VecX& x, double h) {
  if (!(h > 0.0)) throw Error(Errc::invariant, "check_gradients: h must be > 0");
  const int n = problem.n;
  const int m = problem.m;

  double f = 0.0;
  VecX g(n), c(m);
  MatX J;
  problem.eval_derivs(x, f, g, c, J);

  VecX g_fd(n);
  MatX J_fd(m, n);
  VecX xp = x, cm(m), cp(m);
  for (int i = 0; i < n; ++i) {
    const double hi = h * std::max(1.0, std::abs(x[i]));
    double fp, fm;
    xp[i] = x[i] + hi;
    problem.eval(xp, fp, cp);
    xp[i] = x[i] - hi;
    problem.eval(xp, fm, cm);
    xp[i] = x[i];
    g_fd[i] = (fp - fm) / (2.0 * hi);
    if (m > 0) J_fd.col(i) = (cp - cm) / (2.0 * hi);
  }

  const double g_scale = std::max({1.0, g.cwiseAbs().maxCoeff(), g_fd.cwiseAbs().maxCoeff()});
  double err = (g - g_fd).cwiseAbs().maxCoeff() / g_scale;
  if (m > 0) {
    const double j_scale =
        std::max({1.0, J.cwiseAbs().maxCoeff(), J_fd.cwiseAbs().maxCoeff()});
    err = std::max(err, (J - J_fd).cwiseAbs().maxCoeff() / j_scale);
  }
  return err;
}

}  // namespace chmpc
