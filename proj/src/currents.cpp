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

#include "chmpc/currents.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace chmpc {

CurrentSample sample(const CurrentField& field, const Vec3& pos) {
  return CurrentSample::from_ned(field.sample_ned(pos));
}

std::vector<CurrentSample> sample_along(const CurrentField& field, const std::vector<Vec3>& positions) {
  if (positions.empty()) throw Error(Errc::invariant, "sample_along: need at least one position");
  std::vector<CurrentSample> out;
  out.reserve(positions.size());
  for (const auto& p : positions) out.push_back(sample(field, p));
  return out;
}

GyreField::GyreField(double center_n, double center_e, double strength, double radius)
    : cn_(center_n), ce_(center_e), strength_(strength), radius_(radius) {
  if (!(radius > 0.0) || !std::isfinite(strength)) {
    throw Error(Errc::invariant, "gyre field: radius must be > 0 and strength finite");
  }
}

double GyreField::tangential_speed(double r) const {
  const double s = r / radius_;
  return strength_ * s * std::exp(-s * s);
}

Vec3 GyreField::sample_ned(const Vec3& pos) const {
  const double dn = pos[0] - cn_;
  const double de = pos[1] - ce_;
  const double s2 = (dn * dn + de * de) / (radius_ * radius_);
  const double k = strength_ * std::exp(-s2) / radius_;
  return Vec3(-k * de, k * dn, 0.0);
}

CurrentGrid::CurrentGrid(const Vec3& origin, const Vec3& spacing, const std::array<int, 3>& dims,
                         std::vector<double> u, std::vector<double> v, GridInterp interp)
    : origin_(origin), spacing_(spacing), dims_(dims), u_(std::move(u)), v_(std::move(v)), interp_(interp) {
  for (int a = 0; a < 3; ++a) {
    if (!(spacing_[a] > 0.0)) throw Error(Errc::invariant, "current grid: spacing must be > 0 per axis");
    if (dims_[a] < 2) throw Error(Errc::invariant, "current grid: dims must be >= 2 per axis");
  }
  const std::size_t n = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  if (u_.size() != n) throw Error(Errc::dimension_mismatch, "current grid: u sample count does not match dims");
  if (v_.size() != n) throw Error(Errc::dimension_mismatch, "current grid: v sample count does not match dims");
  for (double x : u_)
    if (!std::isfinite(x)) throw Error(Errc::invariant, "current grid: non-finite u sample");
  for (double x : v_)
    if (!std::isfinite(x)) throw Error(Errc::invariant, "current grid: non-finite v sample");
}

namespace {

inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

}  // namespace

Vec3 CurrentGrid::sample_ned(const Vec3& pos) const {
  // Continuous index coordinates, clamped to the grid box so out-of-domain
  // queries return the nearest boundary value.
  int cell[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    double c = (pos[a] - origin_[a]) / spacing_[a];
    const double cmax = static_cast<double>(dims_[a] - 1);
    c = std::min(std::max(c, 0.0), cmax);
    int i = static_cast<int>(std::floor(c));
    if (i > dims_[a] - 2) i = dims_[a] - 2;
    cell[a] = i;
    double t = c - i;
    if (interp_ == GridInterp::smoothed) t = smoothstep(t);
    frac[a] = t;
  }

  double u = 0.0, v = 0.0;
  for (int di = 0; di < 2; ++di) {
    const double wi = di ? frac[0] : 1.0 - frac[0];
    for (int dj = 0; dj < 2; ++dj) {
      const double wj = dj ? frac[1] : 1.0 - frac[1];
      for (int dk = 0; dk < 2; ++dk) {
        const double wk = dk ? frac[2] : 1.0 - frac[2];
        const double w = wi * wj * wk;
        const std::size_t idx = node_index(cell[0] + di, cell[1] + dj, cell[2] + dk);
        u += w * u_[idx];
        v += w * v_[idx];
      }
    }
  }
  return Vec3(u, v, 0.0);
}

namespace {

[[noreturn]] void grid_error(Errc c, const std::string& name, const std::string& what) {
  throw Error(c, name + ": " + what);
}

}  // namespace

CurrentGrid load_grid(std::istream& in, const std::string& name) {
  std::string header;
  if (!std::getline(in, header)) grid_error(Errc::parse, name, "empty grid document");
  // Tolerate trailing whitespace/CR on the header line.
  while (!header.empty() && (header.back() == '\r' || header.back() == ' ')) header.pop_back();
  if (header != "CURRENTGRID v1") grid_error(Errc::parse, name, "bad header, expected 'CURRENTGRID v1'");

  Vec3 origin, spacing;
  std::array<int, 3> dims{};
  std::string mode_token;
  if (!(in >> origin[0] >> origin[1] >> origin[2])) grid_error(Errc::parse, name, "bad origin line");
  if (!(in >> spacing[0] >> spacing[1] >> spacing[2])) grid_error(Errc::parse, name, "bad spacing line");
  if (!(in >> dims[0] >> dims[1] >> dims[2])) grid_error(Errc::parse, name, "bad dims line");
  if (!(in >> mode_token)) grid_error(Errc::parse, name, "missing interpolation mode");

  GridInterp interp;
  if (mode_token == "trilinear") {
    interp = GridInterp::trilinear;
  } else if (mode_token == "smoothed") {
    interp = GridInterp::smoothed;
  } else {
    grid_error(Errc::parse, name, "unknown interpolation mode '" + mode_token + "'");
  }

  for (int a = 0; a < 3; ++a) {
    if (!(spacing[a] > 0.0)) grid_error(Errc::invariant, name, "spacing: must be > 0 per axis");
    if (dims[a] < 2) grid_error(Errc::invariant, name, "dims: must be >= 2 per axis");
  }

  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  std::vector<double> u(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(in >> u[i])) grid_error(Errc::dimension_mismatch, name, "u: expected " + std::to_string(n) + " samples");
    if (!std::isfinite(u[i])) grid_error(Errc::invariant, name, "u: non-finite sample at index " + std::to_string(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(in >> v[i])) grid_error(Errc::dimension_mismatch, name, "v: expected " + std::to_string(n) + " samples");
    if (!std::isfinite(v[i])) grid_error(Errc::invariant, name, "v: non-finite sample at index " + std::to_string(i));
  }
  std::string extra;
  if (in >> extra) grid_error(Errc::dimension_mismatch, name, "trailing data after v samples");

  return CurrentGrid(origin, spacing, dims, std::move(u), std::move(v), interp);
}

CurrentGrid load_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open grid file: " + path);
  return load_grid(in, path);
}

void save_grid(const CurrentGrid& g, std::ostream& out) {
  out << "CURRENTGRID v1\n";
  out.precision(17);
  out << g.origin()[0] << ' ' << g.origin()[1] << ' ' << g.origin()[2] << '\n';
  out << g.spacing()[0] << ' ' << g.spacing()[1] << ' ' << g.spacing()[2] << '\n';
  out << g.dims()[0] << ' ' << g.dims()[1] << ' ' << g.dims()[2] << '\n';
  out << (g.interp() == GridInterp::trilinear ? "trilinear" : "smoothed") << '\n';
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < g.dims()[0]; ++i)
      for (int j = 0; j < g.dims()[1]; ++j)
        for (int k = 0; k < g.dims()[2]; ++k)
          out << (pass == 0 ? g.u_at(i, j, k) : g.v_at(i, j, k)) << '\n';
  }
}

std::shared_ptr<const CurrentField> make_uniform(double u_c, double v_c) {
  return std::make_shared<UniformField>(u_c, v_c);
}

}  // namespace chmpc
