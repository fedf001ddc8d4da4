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

#include "chmpc/actuation.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "chmpc/nlp.hpp"

namespace chmpc {

void AllocationModel::validate() const {
  Eigen::JacobiSVD<MatX> svd(K4);
  const auto& sv = svd.singularValues();
  if (sv.size() < 4 || sv[3] <= 1e-9 * sv[0]) {
    throw Error(Errc::invariant, "allocation model: K4 must have full row rank 4");
  }
  for (int i = 0; i < 6; ++i) {
    if (!(T_min[i] < 0.0 && T_max[i] > 0.0)) {
      throw Error(Errc::invariant, "allocation model: need T_min < 0 < T_max per thruster");
    }
  }
  if (!(lambda_reg > 0.0)) throw Error(Errc::invariant, "allocation model: lambda_reg must be > 0");
}

namespace {

std::vector<double> read_numbers(const std::string& path, std::size_t expect,
                                 const std::string& header) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open file: " + path);
  std::string first;
  if (!std::getline(in, first)) throw Error(Errc::parse, path + ": empty file");
  while (!first.empty() && (first.back() == '\r' || first.back() == ' ')) first.pop_back();
  if (first != header) throw Error(Errc::parse, path + ": bad header, expected '" + header + "'");

  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double v;
    while (ls >> v) out.push_back(v);
  }
  if (out.size() != expect) {
    throw Error(Errc::dimension_mismatch,
                path + ": expected " + std::to_string(expect) + " numbers, got " + std::to_string(out.size()));
  }
  return out;
}

}  // namespace

AllocationModel load_allocation_model(const std::string& path) {
  const std::vector<double> v = read_numbers(path, 24 + 6 + 6 + 1, "ALLOCMODEL v1");
  AllocationModel m;
  int idx = 0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 6; ++c) m.K4(r, c) = v[idx++];
  for (int i = 0; i < 6; ++i) m.T_min[i] = v[idx++];
  for (int i = 0; i < 6; ++i) m.T_max[i] = v[idx++];
  m.lambda_reg = v[idx++];
  m.validate();
  return m;
}

void save_allocation_model(const AllocationModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write file: " + path);
  out.precision(17);
  out << "ALLOCMODEL v1\n# K4 rows: X, Y, Z, N over thrusters 1..6\n";
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 6; ++c) out << m.K4(r, c) << (c == 5 ? '\n' : ' ');
  }
  out << "# T_min\n";
  for (int i = 0; i < 6; ++i) out << m.T_min[i] << (i == 5 ? '\n' : ' ');
  out << "# T_max\n";
  for (int i = 0; i < 6; ++i) out << m.T_max[i] << (i == 5 ? '\n' : ' ');
  out << "# lambda_reg\n" << m.lambda_reg << "\n";
}

namespace {

VecX allocation_gradient(const AllocationModel& m, const Vec4& tau4, const VecX& t) {
  const Vec4 r = m.K4 * t - tau4;
  return 2.0 * (m.K4.transpose() * r) + 2.0 * m.lambda_reg * t;
}

}  // namespace

Vec6 allocate(const AllocationModel& m, const Vec4& tau4) {
  // Unconstrained regularized least-squares solution as warm start; in the
  // interior it is already the minimizer.
  const Mat6 H = m.K4.transpose() * m.K4 + m.lambda_reg * Mat6::Identity();
  const Vec6 t_uncon = H.ldlt().solve(m.K4.transpose() * tau4);

  NlpProblem p;
  p.n = 6;
  p.m = 0;
  p.lower = m.T_min;
  p.upper = m.T_max;
  p.eval = [&m, &tau4](const VecX& t, double& f, VecX& c) {
    const Vec4 r = m.K4 * t - tau4;
    f = r.squaredNorm() + m.lambda_reg * t.squaredNorm();
    c.resize(0);
  };
  p.eval_derivs = [&m, &tau4](const VecX& t, double& f, VecX& g, VecX& c, MatX& J) {
    const Vec4 r = m.K4 * t - tau4;
    f = r.squaredNorm() + m.lambda_reg * t.squaredNorm();
    g = allocation_gradient(m, tau4, t);
    c.resize(0);
    J.resize(0, 6);
  };
  p.hess0 = 2.0 * H;

  SolverOptions opts;
  opts.tol_stat = 1e-9;
  opts.tol_comp = 1e-9;
  opts.max_inner = 500;
  opts.lbfgs_mem = 12;
  const NlpSolution sol = solve(p, t_uncon, opts);

  const Vec6 t_star = sol.x;
  if (allocation_kkt_residual(m, tau4, t_star) > 1e-8) {
    throw Error(Errc::invariant, "allocate: KKT residual above 1e-8");
  }
  return t_star;
}

Vec6 allocate(const AllocationModel& m, const ControlWrench& wrench) {
  return allocate(m, wrench.as_vector());
}

double allocation_kkt_residual(const AllocationModel& m, const Vec4& tau4, const Vec6& T) {
  const VecX g = allocation_gradient(m, tau4, T);
  const VecX proj = (T - g).cwiseMax(VecX(m.T_min)).cwiseMin(VecX(m.T_max));
  return (proj - T).cwiseAbs().maxCoeff();
}

std::vector<CalPoint> load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open calibration file: " + path);
  std::string first;
  if (!std::getline(in, first)) throw Error(Errc::parse, path + ": empty file");
  while (!first.empty() && (first.back() == '\r' || first.back() == ' ')) first.pop_back();
  if (first != "THRUSTCAL v1") throw Error(Errc::parse, path + ": bad header, expected 'THRUSTCAL v1'");

  std::vector<CalPoint> out;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string dir;
    if (!(ls >> dir)) continue;
    CalPoint pt;
    if (dir == "P") {
      pt.forward = true;
    } else if (dir == "N") {
      pt.forward = false;
    } else {
      throw Error(Errc::parse, path + ":" + std::to_string(lineno) + ": direction must be P or N");
    }
    if (!(ls >> pt.power_w >> pt.thrust_n)) {
      throw Error(Errc::parse, path + ":" + std::to_string(lineno) + ": expected power and thrust");
    }
    if (!(pt.power_w > 0.0)) {
      throw Error(Errc::parse, path + ":" + std::to_string(lineno) + ": power must be > 0");
    }
    if (pt.forward ? pt.thrust_n < 0.0 : pt.thrust_n > 0.0) {
      throw Error(Errc::parse, path + ":" + std::to_string(lineno) + ": thrust sign does not match branch");
    }
    out.push_back(pt);
  }
  return out;
}

namespace {

// ln|T| = ln a + b ln P by least squares; returns {a, b, rms log residual}.
std::array<double, 3> fit_branch(const std::vector<CalPoint>& table, bool forward) {
  std::vector<double> xs, ys;
  for (const auto& pt : table) {
    if (pt.forward != forward) continue;
    const double t = std::abs(pt.thrust_n);
    if (t <= 0.0) throw Error(Errc::degenerate_data, "power fit: zero-thrust calibration point");
    xs.push_back(std::log(pt.power_w));
    ys.push_back(std::log(t));
  }
  const std::size_t n = xs.size();
  if (n < 3) throw Error(Errc::degenerate_data, "power fit: need at least 3 points per direction");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-12 * n * sxx) {
    throw Error(Errc::degenerate_data, "power fit: all calibration powers equal (rank deficient)");
  }
  const double b = (n * sxy - sx * sy) / denom;
  const double lna = (sy - b * sx) / n;

  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (lna + b * xs[i]);
    ss += r * r;
  }
  return {std::exp(lna), b, std::sqrt(ss / n)};
}

}  // namespace

PowerModel fit_power_model(const std::vector<CalPoint>& table) {
  PowerModel m;
  const auto f = fit_branch(table, true);
  const auto r = fit_branch(table, false);
  m.a_f = f[0];
  m.b_f = f[1];
  m.rms_log_residual_f = f[2];
  m.a_r = r[0];
  m.b_r = r[1];
  m.rms_log_residual_r = r[2];
  if (!(m.b_f > 0.0 && m.b_r > 0.0)) {
    throw Error(Errc::degenerate_data, "power fit: exponent must be positive (thrust increasing in power)");
  }
  return m;
}

PowerModel load_power_model(const std::string& path) {
  const std::vector<double> v = read_numbers(path, 6, "POWERMODEL v1");
  PowerModel m;
  m.a_f = v[0];
  m.b_f = v[1];
  m.a_r = v[2];
  m.b_r = v[3];
  m.rms_log_residual_f = v[4];
  m.rms_log_residual_r = v[5];
  if (!(m.a_f > 0 && m.b_f > 0 && m.a_r > 0 && m.b_r > 0)) {
    throw Error(Errc::invariant, "power model: coefficients must be positive");
  }
  return m;
}

void save_power_model(const PowerModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write file: " + path);
  out.precision(17);
  out << "POWERMODEL v1\n# a_f b_f  (forward T = a_f P^b_f)\n"
      << m.a_f << ' ' << m.b_f << "\n# a_r b_r  (reverse |T| = a_r P^b_r)\n"
      << m.a_r << ' ' << m.b_r << "\n# rms log residuals (forward, reverse)\n"
      << m.rms_log_residual_f << ' ' << m.rms_log_residual_r << "\n";
}

double power_for_thrust(const PowerModel& m, double thrust_n) {
  if (thrust_n == 0.0) return 0.0;
  const bool fwd = thrust_n > 0.0;
  const double a = fwd ? m.a_f : m.a_r;
  const double b = fwd ? m.b_f : m.b_r;
  return std::pow(std::abs(thrust_n) / a, 1.0 / b);
}

double thrust_for_power(const PowerModel& m, double power_w, bool forward) {
  if (power_w < 0.0) throw Error(Errc::invariant, "thrust_for_power: power must be >= 0");
  return forward ? m.a_f * std::pow(power_w, m.b_f) : -m.a_r * std::pow(power_w, m.b_r);
}

EnergyStats energy_accumulate(const PowerModel& pm, const AllocationModel& am,
                              std::span<const ControlWrench> wrenches, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::invariant, "energy_accumulate: dt must be > 0");
  EnergyStats st;
  st.power_w.reserve(wrenches.size());
  for (const auto& w : wrenches) {
    const Vec6 t = allocate(am, w);
    double p = 0.0;
    for (int i = 0; i < 6; ++i) p += power_for_thrust(pm, t[i]);
    st.power_w.push_back(p);
  }
  for (double p : st.power_w) {
    const double e = p * dt;
    st.total_j += e;
    st.max_step_j = std::max(st.max_step_j, e);
  }
  st.mean_step_j = st.power_w.empty() ? 0.0 : st.total_j / static_cast<double>(st.power_w.size());
  return st;
}

}  // namespace chmpc
