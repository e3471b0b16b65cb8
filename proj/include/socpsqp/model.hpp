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

#ifndef SOCPSQP_MODEL_HPP_
#define SOCPSQP_MODEL_HPP_

#include "socpsqp/soc_geometry.hpp"
#include "socpsqp/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace socpsqp {

/// Ordered variable indices of one second-order cone. indices[0] is the head.
struct ConeSpec
{
  std::vector<Index> indices;

  [[nodiscard]] Index dim() const { return static_cast<Index>(indices.size()); }
  bool operator==(const ConeSpec &) const = default;
};

struct LinearRow
{
  SparseRow coeffs;
  double rhs = 0.0;
  Sense sense = Sense::LE;

  bool operator==(const LinearRow &) const = default;
};

/**
 * min c^T x  s.t.  rows (LE / EQ),  lower <= x <= upper,  x_{I_j} in K_j.
 *
 * Variables not covered by any cone are plain bounded variables.
 */
struct ConeProblem
{
  Index num_vars = 0;
  Vector objective;
  std::vector<LinearRow> rows;
  Vector lower;
  Vector upper;
  std::vector<ConeSpec> cones;

  ConeProblem() = default;

  explicit ConeProblem(Index n)
  : num_vars(n), objective(Vector::Zero(n)), lower(Vector::Constant(n, -kInf)),
    upper(Vector::Constant(n, kInf))
  {}

  [[nodiscard]] Index num_rows() const { return static_cast<Index>(rows.size()); }
  [[nodiscard]] Index num_cones() const { return static_cast<Index>(cones.size()); }

  /// Throws ModelError when an invariant is broken.
  void validate() const
  {
    if (num_vars < 0) throw ModelError("negative variable count");
    if (objective.size() != num_vars) throw ModelError("objective size differs from num_vars");
    if (lower.size() != num_vars || upper.size() != num_vars)
      throw ModelError("bound vectors must have num_vars entries");
    for (Index k = 0; k < num_vars; ++k) {
      if (lower[k] > upper[k]) throw ModelError("lower bound exceeds upper bound for variable " + std::to_string(k));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (const auto & [idx, v] : rows[i].coeffs.terms) {
        if (idx < 0 || idx >= num_vars)
          throw ModelError("row " + std::to_string(i) + " references variable out of range");
        if (!std::isfinite(v)) throw ModelError("row " + std::to_string(i) + " has a non-finite coefficient");
      }
      if (!std::isfinite(rows[i].rhs)) throw ModelError("row " + std::to_string(i) + " has a non-finite rhs");
    }
    std::vector<char> used(static_cast<std::size_t>(num_vars), 0);
    for (std::size_t j = 0; j < cones.size(); ++j) {
      if (cones[j].dim() < 2) throw ModelError("cone " + std::to_string(j) + " has dimension < 2");
      for (Index idx : cones[j].indices) {
        if (idx < 0 || idx >= num_vars) throw ModelError("cone " + std::to_string(j) + " index out of range");
        if (used[static_cast<std::size_t>(idx)]) throw ModelError("cone index sets overlap at variable " + std::to_string(idx));
        used[static_cast<std::size_t>(idx)] = 1;
      }
    }
  }

  [[nodiscard]] ConePoint block(const Vector & x, Index j) const
  {
    const auto & idx = cones[static_cast<std::size_t>(j)].indices;
    ConePoint p;
    p.head = x[idx[0]];
    p.bar.resize(static_cast<Index>(idx.size()) - 1);
    for (std::size_t i = 1; i < idx.size(); ++i) p.bar[static_cast<Index>(i) - 1] = x[idx[i]];
    return p;
  }

  /// Writes a cone-local vector into the positions of cone j.
  void scatter(Index j, const Vector & local, Vector & out) const
  {
    const auto & idx = cones[static_cast<std::size_t>(j)].indices;
    for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = local[static_cast<Index>(i)];
  }

  /// -1 for variables outside every cone.
  [[nodiscard]] std::vector<Index> cone_of_var() const
  {
    std::vector<Index> owner(static_cast<std::size_t>(num_vars), -1);
    for (std::size_t j = 0; j < cones.size(); ++j)
      for (Index idx : cones[j].indices) owner[static_cast<std::size_t>(idx)] = static_cast<Index>(j);
    return owner;
  }

  [[nodiscard]] Vector row_activity(const Vector & x) const
  {
    Vector ax(num_rows());
    for (Index i = 0; i < num_rows(); ++i) ax[i] = rows[static_cast<std::size_t>(i)].coeffs.dot(x);
    return ax;
  }

  /// A^T lambda over the linear rows (bounds excluded).
  [[nodiscard]] Vector rows_transpose_times(const Vector & lambda) const
  {
    Vector out = Vector::Zero(num_vars);
    for (Index i = 0; i < num_rows(); ++i) rows[static_cast<std::size_t>(i)].coeffs.axpy(lambda[i], out);
    return out;
  }

  [[nodiscard]] bool has_finite_bounds() const
  {
    return lower.array().isFinite().any() || upper.array().isFinite().any();
  }
};

/**
 * Primal-dual point. `bound_duals` uses the reduced-cost sign convention:
 * positive entries are multipliers of active lower bounds, negative entries
 * of active upper bounds, so that z = c + A^T lambda - bound_duals.
 */
struct PrimalDualTriple
{
  Vector x;
  Vector lambda;
  Vector z;
  Vector bound_duals;
};

enum class SolveStatus { Optimal, Infeasible, IterationLimit, SubproblemFailure };

inline const char * to_string(SolveStatus s)
{
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::IterationLimit: return "iteration_limit";
    case SolveStatus::SubproblemFailure: return "subproblem_failure";
  }
  return "unknown";
}

struct SolveReport
{
  SolveStatus status = SolveStatus::IterationLimit;
  PrimalDualTriple triple;
  double kkt_error = kInf;
  int total_iters = 0;
  int sqp_step_iters = 0;
  int qp_newton_solves = 0;
  int qp_master_solves = 0;
  double final_rho = 0.0;
  /// kkt_error after every outer iteration, starting with the initial point.
  std::vector<double> error_history;
  /// Largest c^T d - rho * sum_{j in D}[r_j]^+ seen over all solved subproblems.
  double max_model_decrease = -kInf;
  /// Penalty parameter stored at every accepted iteration.
  std::vector<double> rho_history;
};

/// Dual slack z = c + A^T lambda - bound_duals.
inline Vector dual_slack(const ConeProblem & problem, const Vector & lambda, const Vector & bound_duals)
{
  return problem.objective + problem.rows_transpose_times(lambda) - bound_duals;
}

/**
 * Optimality error: the max of primal violation, complementarity and sign
 * violation over rows and finite bounds, stationarity of variables outside
 * the cones, and per cone [r(x_j)]^+, [r(z_j)]^+, |x_j^T z_j|.
 */
inline double kkt_error(const ConeProblem & problem, const Vector & x, const Vector & lambda,
                        const Vector & bound_duals)
{
  if (x.size() != problem.num_vars || lambda.size() != problem.num_rows() ||
      bound_duals.size() != problem.num_vars)
    throw DimensionError("kkt_error: dimension mismatch");

  double err = 0.0;
  for (Index i = 0; i < problem.num_rows(); ++i) {
    const auto & row = problem.rows[static_cast<std::size_t>(i)];
    const double slack = row.coeffs.dot(x) - row.rhs;
    err = std::max(err, row.sense == Sense::EQ ? std::abs(slack) : positive_part(slack));
    err = std::max(err, std::abs(slack * lambda[i]));
    if (row.sense == Sense::LE) err = std::max(err, positive_part(-lambda[i]));
  }
  for (Index k = 0; k < problem.num_vars; ++k) {
    const double s = bound_duals[k];
    const double lo = problem.lower[k];
    const double up = problem.upper[k];
    if (std::isfinite(lo)) {
      err = std::max(err, positive_part(lo - x[k]));
      err = std::max(err, std::abs((x[k] - lo) * positive_part(s)));
    } else {
      err = std::max(err, positive_part(s));
    }
    if (std::isfinite(up)) {
      err = std::max(err, positive_part(x[k] - up));
      err = std::max(err, std::abs((up - x[k]) * positive_part(-s)));
    } else {
      err = std::max(err, positive_part(-s));
    }
  }

  const Vector z = dual_slack(problem, lambda, bound_duals);
  const auto owner = problem.cone_of_var();
  for (Index k = 0; k < problem.num_vars; ++k)
    if (owner[static_cast<std::size_t>(k)] < 0) err = std::max(err, std::abs(z[k]));

  for (Index j = 0; j < problem.num_cones(); ++j) {
    const ConePoint xj = problem.block(x, j);
    const ConePoint zj = problem.block(z, j);
    err = std::max(err, positive_part(residual(xj)));
    err = std::max(err, positive_part(residual(zj)));
    err = std::max(err, std::abs(xj.head * zj.head + xj.bar.dot(zj.bar)));
  }
  return err;
}

/// Convenience overload for problems without finite bounds.
inline double kkt_error(const ConeProblem & problem, const Vector & x, const Vector & lambda)
{
  return kkt_error(problem, x, lambda, Vector::Zero(problem.num_vars));
}

inline double kkt_error(const ConeProblem & problem, const PrimalDualTriple & t)
{
  const Vector s = t.bound_duals.size() == problem.num_vars ? t.bound_duals : Vector::Zero(problem.num_vars);
  return kkt_error(problem, t.x, t.lambda, s);
}

enum class ConeClass : std::uint8_t { Extremal, Differentiable, Nondifferentiable };

/// Partition of the cones into extremal-active (E), differentiable (D) and the rest (N).
struct ConePartition
{
  std::vector<ConeClass> label;
  std::vector<Index> extremal;
  std::vector<Index> differentiable;
  std::vector<Index> nondifferentiable;

  [[nodiscard]] bool is_extremal(Index j) const { return label[static_cast<std::size_t>(j)] == ConeClass::Extremal; }
  [[nodiscard]] bool is_differentiable(Index j) const
  {
    return label[static_cast<std::size_t>(j)] == ConeClass::Differentiable;
  }
};

inline constexpr double kExtremalTol = 1e-6;
inline constexpr double kDifferentiableTol = 1e-8;

inline ConePartition classify_cones(const ConeProblem & problem, const Vector & x,
                                    double eps_extremal = kExtremalTol, double eps_diff = kDifferentiableTol)
{
  if (x.size() != problem.num_vars) throw DimensionError("classify_cones: dimension mismatch");
  ConePartition part;
  part.label.resize(problem.cones.size());
  for (Index j = 0; j < problem.num_cones(); ++j) {
    const ConePoint p = problem.block(x, j);
    ConeClass c;
    if (std::max(std::abs(p.head), p.bar.lpNorm<Eigen::Infinity>()) < eps_extremal) {
      c = ConeClass::Extremal;
      part.extremal.push_back(j);
    } else if (p.bar.norm() > eps_diff) {
      c = ConeClass::Differentiable;
      part.differentiable.push_back(j);
    } else {
      c = ConeClass::Nondifferentiable;
      part.nondifferentiable.push_back(j);
    }
    part.label[static_cast<std::size_t>(j)] = c;
  }
  return part;
}

}  // namespace socpsqp

#endif  // SOCPSQP_MODEL_HPP_
