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

#ifndef SOCPSQP_SUBPROBLEMS_HPP_
#define SOCPSQP_SUBPROBLEMS_HPP_

/**
 * @file
 * @brief Assembly of the step QPs and recovery of their dual information.
 *
 * All three QP families share one assembler. For a base point p (the
 * current iterate, or iterate plus the fast step for the correction QP)
 * the step variable s must satisfy
 *
 *   A (p + s) <= / = b,                  linear rows
 *   r(p_j) + grad r(p_j)^T s_j <= 0,     linearized cones
 *   p_j0 + s_j0 >= 0,                    head bounds (folded into variable bounds)
 *   grad r(y)^T (p_j + s_j) <= 0,        cuts, one per generator y
 *
 * Every QP row carries a RowKey so that the working set of one solve can
 * seed the next even when rows were added or removed in between.
 */

#include "socpsqp/cuts.hpp"
#include "socpsqp/model.hpp"
#include "socpsqp/qp_core.hpp"

#include <algorithm>
#include <compare>
#include <map>
#include <vector>

namespace socpsqp {

enum class RowKind : std::uint8_t { Linear, Linearization, Cut };

struct RowKey
{
  RowKind kind = RowKind::Linear;
  Index cone = -1;
  Index item = -1;

  auto operator<=>(const RowKey &) const = default;
};

/// Working set expressed in keys rather than positions.
struct KeyedActiveSet
{
  std::vector<RowKey> rows;
  std::vector<Index> lower;
  std::vector<Index> upper;

  [[nodiscard]] bool empty() const { return rows.empty() && lower.empty() && upper.empty(); }
};

/// Which constraint families each cone contributes.
struct ConeRowPlan
{
  std::vector<char> linearize;
  std::vector<char> head_bound;
  std::vector<char> cuts;

  explicit ConeRowPlan(Index cones = 0)
  : linearize(static_cast<std::size_t>(cones), 0), head_bound(static_cast<std::size_t>(cones), 0),
    cuts(static_cast<std::size_t>(cones), 0)
  {}
};

struct SubproblemQp
{
  QpProblem qp;
  std::vector<RowKey> keys;
  /// Base point p; the QP variable is the step from p.
  Vector base;
  /// Step already taken before p (nonzero only for the correction QP).
  Vector shift;
  /// Per cone: gradient used in the linearization row, empty if absent.
  std::vector<Vector> lin_grad;
  /// Per variable: the finite lower bound belongs to a cone head bound.
  std::vector<char> head_owned;
};

class SqpHessian
{
public:
  Matrix matrix;
  Vector mu;
  bool scaled = false;
  double norm = 0.0;
};

inline constexpr double kHessianCap = 1e12;

/// Block-diagonal sum of mu_j times the residual Hessian over `differentiable` cones.
inline SqpHessian build_hessian(const ConeProblem & problem, const Vector & mu, const Vector & x,
                                const std::vector<Index> & differentiable, double cap = kHessianCap)
{
  if (mu.size() != problem.num_cones()) throw DimensionError("build_hessian: one multiplier per cone expected");
  SqpHessian h;
  h.mu = mu;
  h.matrix = Matrix::Zero(problem.num_vars, problem.num_vars);
  for (Index j : differentiable) {
    const double m = mu[j];
    if (!(m > 0.0)) continue;
    const ConePoint p = problem.block(x, j);
    const Matrix blk = m * hess_residual(p);
    const auto & idx = problem.cones[static_cast<std::size_t>(j)].indices;
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = 0; b < idx.size(); ++b)
        h.matrix(idx[a], idx[b]) += blk(static_cast<Index>(a), static_cast<Index>(b));
    h.norm = std::max(h.norm, m * hess_residual_norm(p));
  }
  if (h.norm > cap) {
    h.matrix *= cap / h.norm;
    h.norm = cap;
    h.scaled = true;
  }
  return h;
}

namespace detail {

inline SubproblemQp assemble(const ConeProblem & problem, const Vector & x, const Vector & shift, const Matrix & h,
                             const std::vector<HyperplaneSet> & cuts, const ConeRowPlan & plan)
{
  const Index n = problem.num_vars;
  SubproblemQp sub;
  sub.base = x + shift;
  sub.shift = shift;
  const Vector & p = sub.base;
  QpProblem & qp = sub.qp;
  qp = QpProblem(n);
  qp.hessian = h;
  qp.linear = problem.objective;
  if (shift.lpNorm<Eigen::Infinity>() > 0.0) qp.linear.noalias() += h * shift;
  qp.lower = problem.lower - p;
  qp.upper = problem.upper - p;
  sub.head_owned.assign(static_cast<std::size_t>(n), 0);
  sub.lin_grad.assign(problem.cones.size(), Vector());

  for (Index i = 0; i < problem.num_rows(); ++i) {
    const auto & row = problem.rows[static_cast<std::size_t>(i)];
    qp.rows.push_back({row.coeffs, row.rhs - row.coeffs.dot(p), row.sense});
    sub.keys.push_back({RowKind::Linear, -1, i});
  }
  for (Index j = 0; j < problem.num_cones(); ++j) {
    const auto js = static_cast<std::size_t>(j);
    const auto & idx = problem.cones[js].indices;
    const ConePoint pj = problem.block(p, j);
    if (plan.linearize[js] && pj.bar.norm() > 0.0) {
      Vector g = grad_residual(pj);
      SparseRow row;
      for (std::size_t a = 0; a < idx.size(); ++a)
        if (g[static_cast<Index>(a)] != 0.0) row.push(idx[a], g[static_cast<Index>(a)]);
      qp.rows.push_back({std::move(row), -residual(pj), Sense::LE});
      sub.keys.push_back({RowKind::Linearization, j, 0});
      sub.lin_grad[js] = std::move(g);
    }
    if (plan.head_bound[js]) {
      const Index k = idx[0];
      if (-p[k] > qp.lower[k]) {
        qp.lower[k] = -p[k];
        sub.head_owned[static_cast<std::size_t>(k)] = 1;
      }
    }
    if (plan.cuts[js]) {
      const auto & set = cuts[js];
      for (std::size_t l = 0; l < set.size(); ++l) {
        const Vector dir = set.direction(l);
        SparseRow row;
        row.push(idx[0], -1.0);
        for (Index a = 0; a < dir.size(); ++a)
          if (dir[a] != 0.0) row.push(idx[static_cast<std::size_t>(a) + 1], dir[a]);
        qp.rows.push_back({std::move(row), pj.head - dir.dot(pj.bar), Sense::LE});
        sub.keys.push_back({RowKind::Cut, j, static_cast<Index>(l)});
      }
    }
  }
  return sub;
}

}  // namespace detail

/// Cut QP: linearizations on D, cuts and head bounds on every cone.
inline SubproblemQp build_master_qp(const ConeProblem & problem, const Vector & x, const Matrix & h,
                                    const std::vector<HyperplaneSet> & cuts, const ConePartition & part)
{
  ConeRowPlan plan(problem.num_cones());
  for (Index j = 0; j < problem.num_cones(); ++j) {
    const auto js = static_cast<std::size_t>(j);
    plan.linearize[js] = part.is_differentiable(j) ? 1 : 0;
    plan.head_bound[js] = 1;
    plan.cuts[js] = 1;
  }
  return detail::assemble(problem, x, Vector::Zero(problem.num_vars), h, cuts, plan);
}

/// Fast-step QP: linearizations on D, cut sets only on `in_cut_set` cones.
inline SubproblemQp build_newton_qp(const ConeProblem & problem, const Vector & x, const Matrix & h,
                                    const std::vector<HyperplaneSet> & cuts, const ConePartition & part,
                                    const std::vector<char> & in_cut_set)
{
  ConeRowPlan plan(problem.num_cones());
  for (Index j = 0; j < problem.num_cones(); ++j) {
    const auto js = static_cast<std::size_t>(j);
    const bool d = part.is_differentiable(j);
    plan.linearize[js] = d ? 1 : 0;
    plan.cuts[js] = in_cut_set[js];
    plan.head_bound[js] = (d || in_cut_set[js]) ? 1 : 0;
  }
  return detail::assemble(problem, x, Vector::Zero(problem.num_vars), h, cuts, plan);
}

/// Second-order correction QP, re-linearized at x + fast_step.
inline SubproblemQp build_soc_qp(const ConeProblem & problem, const Vector & x, const Vector & fast_step,
                                 const Matrix & h, const std::vector<HyperplaneSet> & cuts, const ConePartition & part,
                                 const std::vector<char> & in_cut_set)
{
  ConeRowPlan plan(problem.num_cones());
  for (Index j = 0; j < problem.num_cones(); ++j) {
    const auto js = static_cast<std::size_t>(j);
    const bool d = part.is_differentiable(j);
    plan.linearize[js] = d ? 1 : 0;
    plan.cuts[js] = in_cut_set[js];
    plan.head_bound[js] = (d && !in_cut_set[js]) ? 1 : 0;
  }
  return detail::assemble(problem, x, fast_step, h, cuts, plan);
}

inline KeyedActiveSet key_active_set(const SubproblemQp & sub, const ActiveSet & active)
{
  KeyedActiveSet out;
  for (Index r : active.rows) out.rows.push_back(sub.keys[static_cast<std::size_t>(r)]);
  out.lower = active.lower;
  out.upper = active.upper;
  return out;
}

/// Positions in `sub` of the keyed rows that still exist.
inline ActiveSet map_active_set(const KeyedActiveSet & keyed, const SubproblemQp & sub)
{
  std::map<RowKey, Index> where;
  for (std::size_t r = 0; r < sub.keys.size(); ++r) where.emplace(sub.keys[r], static_cast<Index>(r));
  ActiveSet out;
  for (const auto & key : keyed.rows) {
    const auto it = where.find(key);
    if (it != where.end()) out.rows.push_back(it->second);
  }
  for (Index k : keyed.lower)
    if (std::isfinite(sub.qp.lower[k])) out.lower.push_back(k);
  for (Index k : keyed.upper)
    if (std::isfinite(sub.qp.upper[k])) out.upper.push_back(k);
  return out;
}

struct StepResult
{
  /// Total step from the iterate (fast step plus correction for the correction QP).
  Vector d;
  Vector lambda_hat;
  /// Duals of the original variable bounds, reduced-cost convention.
  Vector bound_duals;
  Vector mu_hat;
  std::vector<Vector> nu_hat;
  Vector eta_hat;
  /// c + H d + A^T lambda_hat - bound_duals.
  Vector z_hat;
  /// c + A^T lambda_hat - bound_duals.
  Vector z_check;
  QpStatus qp_status = QpStatus::Failed;
  int qp_iterations = 0;
  KeyedActiveSet active;
};

/// Splits the QP multipliers into row, bound and per-cone parts and checks the cone-dual form.
inline StepResult recover_duals(const ConeProblem & problem, const SubproblemQp & sub,
                                const std::vector<HyperplaneSet> & cuts, const QpSolution & sol)
{
  if (sol.status != QpStatus::Optimal) throw Error("recover_duals needs an optimal QP solution");
  const Index m = problem.num_rows();
  const Index p = problem.num_cones();
  StepResult out;
  out.qp_status = sol.status;
  out.qp_iterations = sol.iterations;
  out.d = sub.shift + sol.d;
  out.lambda_hat = sol.row_duals.head(m);
  out.bound_duals = sol.bound_duals;
  out.mu_hat = Vector::Zero(p);
  out.eta_hat = Vector::Zero(p);
  out.nu_hat.resize(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    const auto js = static_cast<std::size_t>(j);
    out.nu_hat[js] = Vector::Zero(problem.cones[js].dim());
    const Index head = problem.cones[js].indices[0];
    if (sub.head_owned[static_cast<std::size_t>(head)] && out.bound_duals[head] > 0.0) {
      out.eta_hat[j] = out.bound_duals[head];
      out.nu_hat[js][0] += out.bound_duals[head];
      out.bound_duals[head] = 0.0;
    }
  }
  for (std::size_t r = static_cast<std::size_t>(m); r < sub.keys.size(); ++r) {
    const RowKey & key = sub.keys[r];
    const double dual = sol.row_duals[static_cast<Index>(r)];
    const auto js = static_cast<std::size_t>(key.cone);
    if (key.kind == RowKind::Linearization) {
      out.mu_hat[key.cone] = dual;
    } else if (key.kind == RowKind::Cut && dual != 0.0) {
      out.nu_hat[js] -= dual * cuts[js].normal(static_cast<std::size_t>(key.item));
    }
  }
  out.z_check = problem.objective + problem.rows_transpose_times(out.lambda_hat) - out.bound_duals;
  out.z_hat = out.z_check;
  if (sub.qp.has_hessian()) out.z_hat.noalias() += sub.qp.hessian * out.d;

  double scale = 1.0 + out.z_hat.lpNorm<Eigen::Infinity>();
  double worst = 0.0;
  for (Index j = 0; j < p; ++j) {
    const auto js = static_cast<std::size_t>(j);
    Vector model = out.nu_hat[js];
    if (sub.lin_grad[js].size() > 0) model -= out.mu_hat[j] * sub.lin_grad[js];
    const ConePoint zj = problem.block(out.z_hat, j);
    worst = std::max(worst, (zj.to_vector() - model).lpNorm<Eigen::Infinity>());
  }
  if (worst > 1e-6 * scale) throw Error("cone dual reconstruction mismatch");
  out.active = key_active_set(sub, sol.active);
  return out;
}

/// Multiplier update: mu_hat corrected by the projection of the cut aggregate onto the cone gradient.
inline Vector update_mu(const ConeProblem & problem, const Vector & mu_hat, const std::vector<Vector> & nu_hat,
                        const Vector & x_next, const Vector & x_curr, const ConePartition & part_next,
                        const ConePartition & part_curr)
{
  const Index p = problem.num_cones();
  Vector mu = Vector::Zero(p);
  for (Index j = 0; j < p; ++j) {
    if (!part_next.is_differentiable(j)) continue;
    const auto & nu = nu_hat[static_cast<std::size_t>(j)];
    double v;
    if (part_curr.is_differentiable(j)) {
      const Vector g = grad_residual(problem.block(x_curr, j));
      v = mu_hat[j] - g.dot(nu) / g.squaredNorm();
    } else {
      const Vector g = grad_residual(problem.block(x_next, j));
      v = -g.dot(nu) / g.squaredNorm();
    }
    mu[j] = std::max(v, 0.0);
  }
  return mu;
}

/// Number of rows of one kind.
inline Index count_rows(const SubproblemQp & sub, RowKind kind)
{
  return static_cast<Index>(std::count_if(sub.keys.begin(), sub.keys.end(), [&](const RowKey & k) { return k.kind == kind; }));
}

}  // namespace socpsqp

#endif  // SOCPSQP_SUBPROBLEMS_HPP_
