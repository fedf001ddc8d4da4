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

#include <Eigen/Core>
#include <cmath>

namespace chmpc {

/// Forward-mode differentiation scalar carrying K partial derivatives of
/// value type V. Nesting (V itself a Dual) yields exact second derivatives
/// in a single evaluation pass, hyper-dual style.
///
/// Model code is templated on the scalar type; comparisons act on the value
/// part only, so branches taken by the double instantiation and the Dual
/// instantiations coincide.
template <int K, typename V = double>
struct Dual {
  using Partials = Eigen::Matrix<V, K, 1>;

  V v = V(0.0);
  Partials d = Partials::Constant(V(0.0));

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit by design (constants)
  Dual(const V& value, const Partials& deriv) : v(value), d(deriv) {}

  /// Independent variable: value with a unit partial in `slot`.
  static Dual seed(double value, int slot) {
    Dual x(value);
    x.d[slot] = V(1.0);
    return x;
  }

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + o.d * v; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) {
    const V inv = 1.0 / o.v;
    v *= inv;
    d = (d - o.d * v) * inv;
    return *this;
  }
  Dual& operator+=(double s) { v += s; return *this; }
  Dual& operator-=(double s) { v -= s; return *this; }
  Dual& operator*=(double s) { v *= s; d *= V(s); return *this; }
  Dual& operator/=(double s) { v /= s; d *= V(1.0 / s); return *this; }

  Dual operator-() const { return Dual(-v, -d); }
};

inline double value_of(double x) { return x; }
template <int K, typename V> inline double value_of(const Dual<K, V>& x) { return value_of(x.v); }

template <int K, typename V> inline Dual<K, V> operator+(Dual<K, V> a, const Dual<K, V>& b) { return a += b; }
template <int K, typename V> inline Dual<K, V> operator-(Dual<K, V> a, const Dual<K, V>& b) { return a -= b; }
template <int K, typename V> inline Dual<K, V> operator*(const Dual<K, V>& a, const Dual<K, V>& b) {
  return Dual<K, V>(a.v * b.v, a.d * b.v + b.d * a.v);
}
template <int K, typename V> inline Dual<K, V> operator/(const Dual<K, V>& a, const Dual<K, V>& b) {
  const V inv = 1.0 / b.v;
  const V val = a.v * inv;
  return Dual<K, V>(val, (a.d - b.d * val) * inv);
}

template <int K, typename V> inline Dual<K, V> operator+(Dual<K, V> a, double s) { return a += s; }
template <int K, typename V> inline Dual<K, V> operator+(double s, Dual<K, V> a) { return a += s; }
template <int K, typename V> inline Dual<K, V> operator-(Dual<K, V> a, double s) { return a -= s; }
template <int K, typename V> inline Dual<K, V> operator-(double s, const Dual<K, V>& a) {
  return Dual<K, V>(s - a.v, -a.d);
}
template <int K, typename V> inline Dual<K, V> operator*(Dual<K, V> a, double s) { return a *= s; }
template <int K, typename V> inline Dual<K, V> operator*(double s, Dual<K, V> a) { return a *= s; }
template <int K, typename V> inline Dual<K, V> operator/(Dual<K, V> a, double s) { return a /= s; }
template <int K, typename V> inline Dual<K, V> operator/(double s, const Dual<K, V>& a) {
  const V inv = 1.0 / a.v;
  const V val = s * inv;
  return Dual<K, V>(val, a.d * (-val * inv));
}

template <int K, typename V> inline bool operator<(const Dual<K, V>& a, const Dual<K, V>& b) { return value_of(a) < value_of(b); }
template <int K, typename V> inline bool operator>(const Dual<K, V>& a, const Dual<K, V>& b) { return value_of(a) > value_of(b); }
template <int K, typename V> inline bool operator<=(const Dual<K, V>& a, const Dual<K, V>& b) { return value_of(a) <= value_of(b); }
template <int K, typename V> inline bool operator>=(const Dual<K, V>& a, const Dual<K, V>& b) { return value_of(a) >= value_of(b); }
template <int K, typename V> inline bool operator==(const Dual<K, V>& a, const Dual<K, V>& b) { return value_of(a) == value_of(b); }
template <int K, typename V> inline bool operator!=(const Dual<K, V>& a, const Dual<K, V>& b) { return value_of(a) != value_of(b); }
template <int K, typename V> inline bool operator<(const Dual<K, V>& a, double b) { return value_of(a) < b; }
template <int K, typename V> inline bool operator<(double a, const Dual<K, V>& b) { return a < value_of(b); }
template <int K, typename V> inline bool operator>(const Dual<K, V>& a, double b) { return value_of(a) > b; }
template <int K, typename V> inline bool operator>(double a, const Dual<K, V>& b) { return a > value_of(b); }
template <int K, typename V> inline bool operator<=(const Dual<K, V>& a, double b) { return value_of(a) <= b; }
template <int K, typename V> inline bool operator>=(const Dual<K, V>& a, double b) { return value_of(a) >= b; }

template <int K, typename V> inline Dual<K, V> sin(const Dual<K, V>& x) {
  using std::cos;
  using std::sin;
  return Dual<K, V>(sin(x.v), x.d * cos(x.v));
}
template <int K, typename V> inline Dual<K, V> cos(const Dual<K, V>& x) {
  using std::cos;
  using std::sin;
  return Dual<K, V>(cos(x.v), x.d * (-sin(x.v)));
}
template <int K, typename V> inline Dual<K, V> tan(const Dual<K, V>& x) {
  using std::tan;
  const V t = tan(x.v);
  return Dual<K, V>(t, x.d * (1.0 + t * t));
}
template <int K, typename V> inline Dual<K, V> tanh(const Dual<K, V>& x) {
  using std::tanh;
  const V t = tanh(x.v);
  return Dual<K, V>(t, x.d * (1.0 - t * t));
}
template <int K, typename V> inline Dual<K, V> exp(const Dual<K, V>& x) {
  using std::exp;
  const V e = exp(x.v);
  return Dual<K, V>(e, x.d * e);
}
template <int K, typename V> inline Dual<K, V> log(const Dual<K, V>& x) {
  using std::log;
  return Dual<K, V>(log(x.v), x.d / x.v);
}
template <int K, typename V> inline Dual<K, V> sqrt(const Dual<K, V>& x) {
  using std::sqrt;
  const V s = sqrt(x.v);
  return Dual<K, V>(s, x.d * (0.5 / s));
}
// Derivative sign(x); subgradient 0 at the kink.
template <int K, typename V> inline Dual<K, V> abs(const Dual<K, V>& x) {
  const double sign = value_of(x) > 0.0 ? 1.0 : (value_of(x) < 0.0 ? -1.0 : 0.0);
  const V av = value_of(x) < 0.0 ? V(-x.v) : x.v;
  return Dual<K, V>(av, x.d * sign);
}
template <int K, typename V> inline Dual<K, V> fabs(const Dual<K, V>& x) { return abs(x); }

inline bool isfinite_scalar(double x) { return std::isfinite(x); }
template <int K, typename V> inline bool isfinite_scalar(const Dual<K, V>& x) {
  if (!isfinite_scalar(x.v)) return false;
  for (int i = 0; i < K; ++i) {
    if (!isfinite_scalar(x.d[i])) return false;
  }
  return true;
}
template <int K, typename V> inline bool isfinite(const Dual<K, V>& x) { return isfinite_scalar(x); }

/// Wrap to [-pi, pi]; the shift is locally constant, so partials pass through.
inline double wrap_angle(double a) { return std::remainder(a, 2.0 * M_PI); }
template <int K, typename V> inline Dual<K, V> wrap_angle(const Dual<K, V>& a) {
  const double av = value_of(a);
  const double shift = av - std::remainder(av, 2.0 * M_PI);
  return a - shift;
}

}  // namespace chmpc

namespace Eigen {

template <int K, typename V>
struct NumTraits<chmpc::Dual<K, V>> : NumTraits<double> {
  using Real = chmpc::Dual<K, V>;
  using NonInteger = chmpc::Dual<K, V>;
  using Nested = chmpc::Dual<K, V>;
  using Literal = double;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 1 + K,
    MulCost = 2 + 2 * K,
  };
  static inline Real epsilon() { return Real(NumTraits<double>::epsilon()); }
  static inline Real dummy_precision() { return Real(NumTraits<double>::dummy_precision()); }
  static inline Real highest() { return Real(NumTraits<double>::highest()); }
  static inline Real lowest() { return Real(NumTraits<double>::lowest()); }
  static inline int digits10() { return NumTraits<double>::digits10(); }
};

template <int K, typename V, typename BinaryOp>
struct ScalarBinaryOpTraits<chmpc::Dual<K, V>, double, BinaryOp> {
  using ReturnType = chmpc::Dual<K, V>;
};
template <int K, typename V, typename BinaryOp>
struct ScalarBinaryOpTraits<double, chmpc::Dual<K, V>, BinaryOp> {
  using ReturnType = chmpc::Dual<K, V>;
};

}  // namespace Eigen
