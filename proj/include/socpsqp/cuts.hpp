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

#ifndef SOCPSQP_CUTS_HPP_
#define SOCPSQP_CUTS_HPP_

/**
 * @file
 * @brief Hyperplane-generating sets for the polyhedral outer approximation
 * of each cone.
 *
 * A generator y defines the cut grad_residual(y)^T x <= 0, i.e.
 * (y_bar / ||y_bar||)^T x_bar <= x_0. Only the barred direction matters, so
 * generators added from dual information may carry a negative head.
 */

#include "socpsqp/qp_core.hpp"
#include "socpsqp/soc_geometry.hpp"

#include <optional>
#include <vector>

namespace socpsqp {

inline constexpr double kDuplicateTol = 1e-10;
inline constexpr double kMembershipTol = 1e-12;

class HyperplaneSet
{
public:
  HyperplaneSet() = default;
  explicit HyperplaneSet(Index cone_dim) : dim_(cone_dim) {}

  [[nodiscard]] Index cone_dim() const { return dim_; }
  [[nodiscard]] std::size_t size() const { return generators_.size(); }
  [[nodiscard]] bool empty() const { return generators_.empty(); }
  [[nodiscard]] const std::vector<ConePoint> & generators() const { return generators_; }
  [[nodiscard]] const ConePoint & operator[](std::size_t i) const { return generators_[i]; }

  /// Unit barred direction of generator i.
  [[nodiscard]] Vector direction(std::size_t i) const
  {
    const auto & b = generators_[i].bar;
    return b / b.norm();
  }

  /// Normal of the cut of generator i, i.e. grad_residual(y_i).
  [[nodiscard]] Vector normal(std::size_t i) const { return grad_residual(generators_[i]); }

  [[nodiscard]] bool is_duplicate(const ConePoint & v) const
  {
    const double nv = v.bar.norm();
    if (!(nv > 0.0)) throw InvalidGenerator("duplicate test needs a nonzero barred part");
    const Vector dv = v.bar / nv;
    for (std::size_t i = 0; i < generators_.size(); ++i)
      if ((direction(i) - dv).lpNorm<Eigen::Infinity>() <= kDuplicateTol) return true;
    return false;
  }

  /// Appends y unless it duplicates an existing direction. Returns whether it was added.
  bool insert(ConePoint y)
  {
    if (dim_ == 0) dim_ = y.dim();
    if (y.dim() != dim_) throw DimensionError("generator dimension does not match the cone");
    if (!(y.bar.norm() > 0.0)) throw InvalidGenerator("generator needs a nonzero barred part");
    if (is_duplicate(y)) return false;
    generators_.push_back(std::move(y));
    return true;
  }

  bool operator==(const HyperplaneSet & other) const
  {
    if (dim_ != other.dim_ || generators_.size() != other.generators_.size()) return false;
    for (std::size_t i = 0; i < generators_.size(); ++i)
      if (generators_[i].head != other.generators_[i].head || generators_[i].bar != other.generators_[i].bar)
        return false;
    return true;
  }

private:
  Index dim_ = 0;
  std::vector<ConePoint> generators_;
};

/// The 2(n_j - 1) generators +-e_i, whose cuts are +-x_i <= x_0.
inline HyperplaneSet init_Y0(Index cone_dim)
{
  if (cone_dim < 2) throw DimensionError("cone dimension must be at least 2");
  HyperplaneSet set(cone_dim);
  const Index k = cone_dim - 1;
  for (Index i = 0; i < k; ++i) set.insert(ConePoint(0.0, Vector::Unit(k, i)));
  for (Index i = 0; i < k; ++i) set.insert(ConePoint(0.0, -Vector::Unit(k, i)));
  return set;
}

/// Adds x when it lies outside the cone with a nonzero barred part.
inline bool add_primal(HyperplaneSet & set, const ConePoint & x)
{
  if (!(x.bar.norm() > 0.0) || !(residual(x) > 0.0)) return false;
  return set.insert(x);
}

/// Adds -z when x is nonzero and z is strictly inside the cone.
inline bool add_dual(HyperplaneSet & set, const ConePoint & x, const ConePoint & z)
{
  const bool x_nonzero = x.head != 0.0 || x.bar.lpNorm<Eigen::Infinity>() > 0.0;
  if (!x_nonzero || !(z.bar.norm() > 0.0) || !(residual(z) < 0.0)) return false;
  return set.insert(ConePoint(-z.head, -z.bar));
}

inline HyperplaneSet update_primal(HyperplaneSet set, const ConePoint & x)
{
  add_primal(set, x);
  return set;
}

inline HyperplaneSet update_dual(HyperplaneSet set, const ConePoint & x, const ConePoint & z)
{
  add_dual(set, x, z);
  return set;
}

inline bool is_duplicate(const HyperplaneSet & set, const ConePoint & v) { return set.is_duplicate(v); }

/// Membership in the polyhedral outer approximation C(Y).
inline bool in_outer_cone(const ConePoint & x, const HyperplaneSet & set)
{
  if (x.head < -kMembershipTol) return false;
  for (const auto & y : set.generators())
    if (cut_value(y, x) > kMembershipTol) return false;
  return true;
}

struct ConeDecomposition
{
  Vector sigma;
  double eta = 0.0;
};

/// Finds sigma, eta >= 0 with z = -sum sigma_l grad_residual(y_l) + eta e_0.
inline std::optional<ConeDecomposition> dual_cone_decompose(const ConePoint & z, const HyperplaneSet & set)
{
  const auto count = static_cast<Index>(set.size());
  const Index dim = z.dim();
  QpProblem qp(count + 1);
  qp.lower.setZero();
  std::vector<Vector> normals;
  normals.reserve(set.size());
  for (std::size_t l = 0; l < set.size(); ++l) normals.push_back(-set.normal(l));
  const Vector target = z.to_vector();
  for (Index i = 0; i < dim; ++i) {
    QpRow row;
    for (Index l = 0; l < count; ++l) {
      const double v = normals[static_cast<std::size_t>(l)][i];
      if (v != 0.0) row.coeffs.push(l, v);
    }
    if (i == 0) row.coeffs.push(count, 1.0);
    row.rhs = target[i];
    row.sense = Sense::EQ;
    qp.rows.push_back(std::move(row));
  }
  const QpSolution sol = solve_qp(qp);
  if (sol.status != QpStatus::Optimal) return std::nullopt;
  ConeDecomposition out{sol.d.head(count).cwiseMax(0.0), std::max(sol.d[count], 0.0)};
  Vector rebuilt = Vector::Zero(dim);
  rebuilt[0] = out.eta;
  for (Index l = 0; l < count; ++l) rebuilt += out.sigma[l] * normals[static_cast<std::size_t>(l)];
  if ((rebuilt - target).lpNorm<Eigen::Infinity>() > 1e-9) return std::nullopt;
  return out;
}

}  // namespace socpsqp

#endif  // SOCPSQP_CUTS_HPP_
