// Copyright 2026 The socpsqp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SOCPSQP_SOC_GEOMETRY_HPP_
#define SOCPSQP_SOC_GEOMETRY_HPP_

#include "socpsqp/types.hpp"

#include <cmath>

namespace socpsqp {

/// A point in R^{n_j} split as (head, barred), the head being the x_{j0}
/// component of the Lorentz cone {x : ||x_bar|| <= x_0}.
struct ConePoint
{
  double head = 0.0;
  Vector bar;

  ConePoint() = default;
  ConePoint(double h, Vector b) : head(h), bar(std::move(b)) {}

  static ConePoint from_vector(const Eigen::Ref<const Vector> & v)
  {
    if (v.size() < 2) throw DimensionError("cone point needs dimension >= 2");
    return ConePoint(v[0], v.tail(v.size() - 1));
  }

  [[nodiscard]] Index dim() const { return bar.size() + 1; }

  [[nodiscard]] Vector to_vector() const
  {
    Vector v(dim());
    v[0] = head;
    v.tail(bar.size()) = bar;
    return v;
  }
};

class NondifferentiablePoint : public Error
{
public:
  NondifferentiablePoint() : Error("cone residual is not differentiable where the barred part is zero") {}
};

class InvalidGenerator : public Error
{
public:
  using Error::Error;
};

/// r(x) = ||x_bar|| - x_0. Negative in the interior, zero on the boundary.
inline double residual(const ConePoint & p) { return p.bar.norm() - p.head; }

/// (-1, x_bar / ||x_bar||). The barred block always has unit length.
inline Vector grad_residual(const ConePoint & p)
{
  const double nb = p.bar.norm();
  if (!(nb > 0.0)) throw NondifferentiablePoint();
  Vector g(p.dim());
  g[0] = -1.0;
  g.tail(p.bar.size()) = p.bar / nb;
  return g;
}

/// Block diag(0, I/||x_bar|| - x_bar x_bar^T / ||x_bar||^3).
inline Matrix hess_residual(const ConePoint & p)
{
  const double nb = p.bar.norm();
  if (!(nb > 0.0)) throw NondifferentiablePoint();
  const Index k = p.bar.size();
  Matrix h = Matrix::Zero(k + 1, k + 1);
  const Vector u = p.bar / nb;
  h.bottomRightCorner(k, k) = (Matrix::Identity(k, k) - u * u.transpose()) / nb;
  return h;
}

/// Largest eigenvalue of hess_residual(p): 1/||x_bar|| when n_j >= 3, else 0.
inline double hess_residual_norm(const ConePoint & p)
{
  if (p.bar.size() < 2) return 0.0;
  return 1.0 / p.bar.norm();
}

/// grad r(y)^T x = y_bar^T x_bar / ||y_bar|| - x_0; nonpositive for all x in the cone.
inline double cut_value(const ConePoint & y, const ConePoint & x)
{
  const double nb = y.bar.norm();
  if (!(nb > 0.0)) throw InvalidGenerator("cut generator needs a nonzero barred part");
  if (y.bar.size() != x.bar.size()) throw DimensionError("cut generator and point differ in dimension");
  return y.bar.dot(x.bar) / nb - x.head;
}

/// z_0 - ||z_bar + y_bar||_1 - ||y_bar||. A nonnegative value certifies that z
/// lies in the dual outer cone generated by the coordinate generators plus y;
/// a positive value certifies interior membership.
inline double phi_certificate(const ConePoint & z, const ConePoint & y)
{
  if (!(y.bar.norm() > 0.0) || y.head < 0.0)
    throw InvalidGenerator("phi certificate needs y_bar != 0 and y_0 >= 0");
  if (y.bar.size() != z.bar.size()) throw DimensionError("phi certificate dimension mismatch");
  return z.head - (z.bar + y.bar).lpNorm<1>() - y.bar.norm();
}

}  // namespace socpsqp

#endif  // SOCPSQP_SOC_GEOMETRY_HPP_
