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

#include <array>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "chmpc/types.hpp"

namespace chmpc {

/// Quasi-static horizontal current field sampled at NED positions.
/// Fields are immutable after construction; sampling is const and safe to
/// call from many threads concurrently.
class CurrentField {
 public:
  virtual ~CurrentField() = default;
  /// Horizontal current [u_c, v_c, 0] in NED at `pos`; total (never throws
  /// for finite positions).
  virtual Vec3 sample_ned(const Vec3& pos) const = 0;
};

CurrentSample sample(const CurrentField& field, const Vec3& pos);
std::vector<CurrentSample> sample_along(const CurrentField& field, const std::vector<Vec3>& positions);

class UniformField final : public CurrentField {
 public:
  UniformField(double u_c, double v_c) : v_(u_c, v_c, 0.0) {}
  Vec3 sample_ned(const Vec3&) const override { return v_; }

 private:
  Vec3 v_;
};

/// Linear-in-position field: v(p) = base + slope * dot(axis, p).
class ShearField final : public CurrentField {
 public:
  ShearField(double base_u, double base_v, const Vec3& axis, double du_per_m, double dv_per_m)
      : base_(base_u, base_v, 0.0), axis_(axis), slope_(du_per_m, dv_per_m, 0.0) {}
  Vec3 sample_ned(const Vec3& pos) const override {
    const double s = axis_.dot(pos);
    return base_ + s * slope_;
  }

 private:
  Vec3 base_, axis_, slope_;
};

/// Smooth horizontal vortex centred at (center_n, center_e):
///   v(p) = strength * exp(-(r/R)^2) / R * (-(e - e0), (n - n0), 0),
/// i.e. tangential speed strength * (r/R) * exp(-(r/R)^2).
class GyreField final : public CurrentField {
 public:
  GyreField(double center_n, double center_e, double strength, double radius);
  Vec3 sample_ned(const Vec3& pos) const override;
  double tangential_speed(double r) const;

 private:
  double cn_, ce_, strength_, radius_;
};

enum class GridInterp { trilinear, smoothed };

/// Regular 3D grid of horizontal current samples with clamped extrapolation.
/// `smoothed` warps the per-axis interpolation weight with the cubic
/// smoothstep, which makes the field C1 across cell faces; plain trilinear
/// is exact on per-axis-linear fields but only C0 at faces.
class CurrentGrid final : public CurrentField {
 public:
  CurrentGrid(const Vec3& origin, const Vec3& spacing, const std::array<int, 3>& dims,
              std::vector<double> u, std::vector<double> v, GridInterp interp);

  Vec3 sample_ned(const Vec3& pos) const override;

  const Vec3& origin() const { return origin_; }
  const Vec3& spacing() const { return spacing_; }
  const std::array<int, 3>& dims() const { return dims_; }
  GridInterp interp() const { return interp_; }
  // Row-major node index: i along N is slowest, k along D fastest.
  std::size_t node_index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k;
  }
  double u_at(int i, int j, int k) const { return u_[node_index(i, j, k)]; }
  double v_at(int i, int j, int k) const { return v_[node_index(i, j, k)]; }

 private:
  Vec3 origin_, spacing_;
  std::array<int, 3> dims_;
  std::vector<double> u_, v_;
  GridInterp interp_;
};

/// CURRENTGRID v1 reader/writer. See data/ for the exact layout: header line,
/// origin, spacing, dims, interpolation token, then row-major u then v values.
CurrentGrid load_grid(std::istream& in, const std::string& name = "<stream>");
CurrentGrid load_grid_file(const std::string& path);
void save_grid(const CurrentGrid& grid, std::ostream& out);

/// Scenario-facing factory: analytic field spec or grid file.
std::shared_ptr<const CurrentField> make_uniform(double u_c, double v_c);

}  // namespace chmpc
