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

#ifndef SOCPSQP_DRIVER_HPP_
#define SOCPSQP_DRIVER_HPP_

/**
 * @file
 * @brief SQP method for linear second-order cone programs.
 *
 * Each iteration first tries a fast step from a QP in which the cones that
 * are differentiable at the iterate are linearized and only the cones near
 * the apex are replaced by their polyhedral outer approximation. If the
 * exact penalty function rejects it, the method falls back to a cutting
 * plane loop on the fully outer-approximated QP until a step is accepted.
 */

#include "socpsqp/cuts.hpp"
#include "socpsqp/merit.hpp"
#include "socpsqp/model.hpp"
#include "socpsqp/qp_core.hpp"
#include "socpsqp/subproblems.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace socpsqp {

struct SolverConfig
{
  double tol = 1e-7;
  int max_iters = 200;
  int max_inner_iters = 100;
  bool enable_soc_step = false;
  double c_dec = kDecreaseFraction;
  double c_inc = kPenaltyGrowth;
  double c_H = kHessianCap;
  double rho_init = kInitialPenalty;
  double active_tol = kExtremalTol;

  void validate() const
  {
    if (!(tol > 0.0)) throw ModelError("tol must be positive");
    if (max_iters < 0 || max_inner_iters <= 0) throw ModelError("iteration limits must be positive");
    if (!(c_dec > 0.0 && c_dec < 1.0)) throw ModelError("c_dec must lie in (0, 1)");
    if (!(c_inc > 1.0)) throw ModelError("c_inc must exceed 1");
    if (!(c_H > 0.0) || !(rho_init > 0.0) || !(active_tol > 0.0))
      throw ModelError("c_H, rho_init and active_tol must be positive");
  }
};

enum class StepKind : std::uint8_t { Start, Fast, Correction, Master };

inline const char * to_string(StepKind k)
{
  switch (k) {
    case StepKind::Start: return "start";
    case StepKind::Fast: return "fast";
    case StepKind::Correction: return "soc";
    case StepKind::Master: return "master";
  }
  return "unknown";
}

struct TraceRecord
{
  int iteration = 0;
  StepKind step = StepKind::Start;
  int inner_iters = 0;
  int extremal_growth = 0;
  int qp_iters = 0;
  double rho = 0.0;
  double phi = 0.0;
  double kkt_error = 0.0;
  /// Largest violation of the linear rows and variable bounds at the iterate.
  double linear_violation = 0.0;
  /// Smallest cone head at the iterate.
  double min_head = 0.0;
};

using TraceSink = std::function<void(const TraceRecord &)>;

namespace detail {

struct SolverState
{
  Vector x;
  Vector lambda;
  Vector bound_duals;
  Vector mu;
  std::vector<HyperplaneSet> cuts;
  KeyedActiveSet warm;
};

inline double linear_violation(const ConeProblem & problem, const Vector & x)
{
  double worst = 0.0;
  for (const auto & row : problem.rows) {
    const double s = row.coeffs.dot(x) - row.rhs;
    worst = std::max(worst, row.sense == Sense::EQ ? std::abs(s) : s);
  }
  for (Index k = 0; k < problem.num_vars; ++k)
    worst = std::max({worst, problem.lower[k] - x[k], x[k] - problem.upper[k]});
  return worst;
}

inline double min_head(const ConeProblem & problem, const Vector & x)
{
  double m = kInf;
  for (const auto & cone : problem.cones) m = std::min(m, x[cone.indices[0]]);
  return m;
}

inline TraceRecord trace_record(const ConeProblem & problem, const Vector & x, int iteration, StepKind step,
                                int inner, int growth, int qp_iters, double rho, double err)
{
  return {iteration, step, inner, growth, qp_iters, rho, penalty_value(problem, x, rho), err,
          linear_violation(problem, x), min_head(problem, x)};
}

inline bool linearly_feasible(const ConeProblem & problem, const Vector & x, double tol)
{
  for (Index i = 0; i < problem.num_rows(); ++i) {
    const auto & row = problem.rows[static_cast<std::size_t>(i)];
    const double s = row.coeffs.dot(x) - row.rhs;
    if (row.sense == Sense::EQ ? std::abs(s) > tol : s > tol) return false;
  }
  for (Index k = 0; k < problem.num_vars; ++k)
    if (x[k] < problem.lower[k] - tol || x[k] > problem.upper[k] + tol) return false;
  for (const auto & cone : problem.cones)
    if (x[cone.indices[0]] < -tol) return false;
  return true;
}

/// Closest point to `target` satisfying the rows, the bounds and nonnegative cone heads.
inline QpSolution project_start(const ConeProblem & problem, const Vector & target)
{
  const Index n = problem.num_vars;
  QpProblem qp(n);
  qp.hessian = Matrix::Identity(n, n);
  qp.linear = -target;
  qp.lower = problem.lower;
  qp.upper = problem.upper;
  for (const auto & cone : problem.cones) qp.lower[cone.indices[0]] = std::max(qp.lower[cone.indices[0]], 0.0);
  for (const auto & row : problem.rows) qp.rows.push_back({row.coeffs, row.rhs, row.sense});
  return solve_qp(qp);
}

/// Dual point added to the cuts; the primal side is treated as nonzero.
inline void seed_dual_cut(HyperplaneSet & set, const ConePoint & z)
{
  if (z.bar.norm() > 0.0 && residual(z) < 0.0) set.insert(ConePoint(-z.head, -z.bar));
}

}  // namespace detail

enum class FastOutcome : std::uint8_t { Solved, Fallthrough, Infeasible };

struct FastStep
{
  FastOutcome outcome = FastOutcome::Fallthrough;
  StepResult step;
  std::vector<char> in_cut_set;
  int solves = 0;
  int growth = 0;
};

/// Fast-step QP with the apex set grown until no head outside it reaches zero.
inline FastStep fast_step_loop(const ConeProblem & problem, const Vector & x, const SqpHessian & h,
                               const std::vector<HyperplaneSet> & cuts, const ConePartition & part,
                               const KeyedActiveSet & warm, const SolverConfig & config)
{
  FastStep out;
  out.in_cut_set.assign(problem.cones.size(), 0);
  for (Index j : part.extremal) out.in_cut_set[static_cast<std::size_t>(j)] = 1;
  KeyedActiveSet keyed = warm;
  for (;;) {
    const SubproblemQp sub = build_newton_qp(problem, x, h.matrix, cuts, part, out.in_cut_set);
    const ActiveSet seed = map_active_set(keyed, sub);
    const QpSolution sol = solve_qp(sub.qp, seed);
    ++out.solves;
    if (sol.status == QpStatus::Infeasible) {
      out.outcome = FastOutcome::Infeasible;
      return out;
    }
    if (sol.status != QpStatus::Optimal) {
      out.outcome = FastOutcome::Fallthrough;
      return out;
    }
    try {
      out.step = recover_duals(problem, sub, cuts, sol);
    } catch (const Error &) {
      out.outcome = FastOutcome::Fallthrough;
      return out;
    }
    keyed = out.step.active;
    bool grew = false;
    for (Index j = 0; j < problem.num_cones(); ++j) {
      const auto js = static_cast<std::size_t>(j);
      if (out.in_cut_set[js]) continue;
      const Index head = problem.cones[js].indices[0];
      if (x[head] + out.step.d[head] <= config.active_tol) {
        out.in_cut_set[js] = 1;
        grew = true;
      }
    }
    if (!grew) {
      out.outcome = FastOutcome::Solved;
      return out;
    }
    ++out.growth;
  }
}

/**
 * Solves min c^T x s.t. rows, bounds, x_j in the second-order cones.
 * A start triple, when given, supplies x (projected onto the linear
 * constraints if needed), the row multipliers and the bound duals.
 */
inline SolveReport solve(const ConeProblem & problem, const std::optional<PrimalDualTriple> & start = std::nullopt,
                         const SolverConfig & config = {}, const TraceSink & trace = {})
{
  problem.validate();
  config.validate();
  const Index n = problem.num_vars;
  const Index m = problem.num_rows();
  const Index p = problem.num_cones();

  SolveReport report;
  detail::SolverState st;
  st.x = Vector::Zero(n);
  st.lambda = Vector::Zero(m);
  st.bound_duals = Vector::Zero(n);
  bool have_duals = false;
  if (start) {
    if (start->x.size() != n) throw DimensionError("start point dimension mismatch");
    st.x = start->x;
    if (start->lambda.size() == m) {
      st.lambda = start->lambda;
      have_duals = true;
    } else if (start->lambda.size() != 0) {
      throw DimensionError("start multipliers dimension mismatch");
    }
    if (start->bound_duals.size() == n) st.bound_duals = start->bound_duals;
  }

  auto finish = [&](SolveStatus status) {
    report.status = status;
    report.triple.x = st.x;
    report.triple.lambda = st.lambda;
    report.triple.bound_duals = st.bound_duals;
    report.triple.z = dual_slack(problem, st.lambda, st.bound_duals);
    report.kkt_error = kkt_error(problem, st.x, st.lambda, st.bound_duals);
    return report;
  };

  if (!detail::linearly_feasible(problem, st.x, 1e-9)) {
    const QpSolution proj = detail::project_start(problem, st.x);
    if (proj.status == QpStatus::Infeasible) return finish(SolveStatus::Infeasible);
    if (proj.status != QpStatus::Optimal) return finish(SolveStatus::SubproblemFailure);
    st.x = proj.d;
  }

  PenaltyState penalty(config.rho_init);
  report.final_rho = penalty.rho();
  const Vector z0 = dual_slack(problem, st.lambda, st.bound_duals);
  const ConePartition part0 = classify_cones(problem, st.x, config.active_tol);
  st.mu = Vector::Ones(p);
  st.cuts.reserve(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    st.cuts.push_back(init_Y0(problem.cones[static_cast<std::size_t>(j)].dim()));
    const ConePoint zj = problem.block(z0, j);
    detail::seed_dual_cut(st.cuts.back(), zj);
    if (have_duals) {
      st.mu[j] = 0.0;
      if (part0.is_differentiable(j)) {
        const Vector g = grad_residual(problem.block(st.x, j));
        st.mu[j] = std::max(0.0, -g.dot(zj.to_vector()) / g.squaredNorm());
      }
    }
  }

  double err = kkt_error(problem, st.x, st.lambda, st.bound_duals);
  report.error_history.push_back(err);
  if (trace) trace(detail::trace_record(problem, st.x, 0, StepKind::Start, 0, 0, 0, penalty.rho(), err));
  if (err <= config.tol) return finish(SolveStatus::Optimal);

  auto note_model = [&](const ConePartition & part, const Vector & d, double rho) {
    report.max_model_decrease =
      std::max(report.max_model_decrease, model_decrease(problem, st.x, d, rho, part.differentiable));
  };

  for (int k = 0; k < config.max_iters; ++k) {
    const ConePartition part = classify_cones(problem, st.x, config.active_tol);
    const SqpHessian h = build_hessian(problem, st.mu, st.x, part.differentiable, config.c_H);

    std::optional<StepResult> accepted;
    StepKind kind = StepKind::Master;
    double rho_accepted = penalty.rho();
    int inner = 0;
    int growth = 0;
    int qp_iters = 0;

    // Fast step.
    const FastStep fast = fast_step_loop(problem, st.x, h, st.cuts, part, st.warm, config);
    report.qp_newton_solves += fast.solves;
    growth = fast.growth;
    if (fast.outcome == FastOutcome::Infeasible) return finish(SolveStatus::Infeasible);
    if (fast.outcome == FastOutcome::Solved) {
      const StepResult & s = fast.step;
      qp_iters += s.qp_iterations;
      const double rho_c = rho_new(problem, penalty.rho(), s.z_hat, config.c_inc);
      note_model(part, s.d, rho_c);
      const double phi0 = penalty_value(problem, st.x, rho_c);
      const double model = model_decrease(problem, st.x, s.d, rho_c, part.differentiable);
      if (accept_trial(phi0, penalty_value(problem, st.x + s.d, rho_c), model, config.c_dec)) {
        accepted = s;
        kind = StepKind::Fast;
        rho_accepted = rho_c;
      } else if (config.enable_soc_step) {
        const SubproblemQp sub = build_soc_qp(problem, st.x, s.d, h.matrix, st.cuts, part, fast.in_cut_set);
        const QpSolution sol = solve_qp(sub.qp, map_active_set(s.active, sub));
        ++report.qp_newton_solves;
        if (sol.status == QpStatus::Optimal) {
          try {
            StepResult corr = recover_duals(problem, sub, st.cuts, sol);
            qp_iters += corr.qp_iterations;
            bool guard = true;
            for (Index j = 0; j < p; ++j) {
              const Index head = problem.cones[static_cast<std::size_t>(j)].indices[0];
              if (st.x[head] + corr.d[head] <= config.active_tol && !fast.in_cut_set[static_cast<std::size_t>(j)])
                guard = false;
            }
            if (guard && accept_trial(phi0, penalty_value(problem, st.x + corr.d, rho_c), model, config.c_dec)) {
              accepted = std::move(corr);
              kind = StepKind::Correction;
              rho_accepted = rho_c;
            }
          } catch (const Error &) {
          }
        }
      }
    }

    // Cutting-plane loop on the outer-approximated QP.
    if (!accepted) {
      KeyedActiveSet warm = fast.outcome == FastOutcome::Solved ? fast.step.active : st.warm;
      for (;;) {
        if (inner >= config.max_inner_iters) return finish(SolveStatus::SubproblemFailure);
        ++inner;
        const SubproblemQp sub = build_master_qp(problem, st.x, h.matrix, st.cuts, part);
        const QpSolution sol = solve_qp(sub.qp, map_active_set(warm, sub));
        ++report.qp_master_solves;
        if (sol.status == QpStatus::Infeasible) return finish(SolveStatus::Infeasible);
        if (sol.status != QpStatus::Optimal) return finish(SolveStatus::SubproblemFailure);
        StepResult s;
        try {
          s = recover_duals(problem, sub, st.cuts, sol);
        } catch (const Error &) {
          return finish(SolveStatus::SubproblemFailure);
        }
        qp_iters += s.qp_iterations;
        warm = s.active;
        const double rho_c = rho_new(problem, penalty.rho(), s.z_hat, config.c_inc);
        note_model(part, s.d, rho_c);
        if (accept_step(problem, st.x, s.d, rho_c, part.differentiable, config.c_dec)) {
          accepted = std::move(s);
          rho_accepted = rho_c;
          break;
        }
        const Vector trial = st.x + s.d;
        bool added = false;
        for (Index j = 0; j < p; ++j) {
          auto & set = st.cuts[static_cast<std::size_t>(j)];
          const ConePoint tj = problem.block(trial, j);
          added = add_primal(set, tj) || added;
          added = add_dual(set, tj, problem.block(s.z_check, j)) || added;
        }
        if (!added) {
          // Every violated cone already carries this cut direction: the trial is
          // feasible for the outer approximation up to QP tolerance and cannot
          // be cut off any further.
          accepted = std::move(s);
          rho_accepted = rho_c;
          break;
        }
      }
    }

    // State update.
    const StepResult & s = *accepted;
    const Vector x_next = st.x + s.d;
    if (kind == StepKind::Master) {
      const ConePartition part_next = classify_cones(problem, x_next, config.active_tol);
      st.mu = update_mu(problem, s.mu_hat, s.nu_hat, x_next, st.x, part_next, part);
    } else {
      st.mu = s.mu_hat.cwiseMax(0.0);
    }
    for (Index j = 0; j < p; ++j) {
      auto & set = st.cuts[static_cast<std::size_t>(j)];
      const ConePoint xj = problem.block(st.x, j);
      add_primal(set, xj);
      add_dual(set, xj, problem.block(s.z_check, j));
    }
    st.x = x_next;
    st.lambda = s.lambda_hat;
    st.bound_duals = s.bound_duals;
    st.warm = s.active;
    penalty.commit(k, rho_accepted);
    report.final_rho = penalty.rho();
    report.rho_history.push_back(penalty.rho());
    report.total_iters = k + 1;
    if (kind != StepKind::Master) ++report.sqp_step_iters;

    err = kkt_error(problem, st.x, st.lambda, st.bound_duals);
    report.error_history.push_back(err);
    if (trace)
      trace(detail::trace_record(problem, st.x, k + 1, kind, inner, growth, qp_iters, penalty.rho(), err));
    if (err <= config.tol) return finish(SolveStatus::Optimal);
  }
  return finish(SolveStatus::IterationLimit);
}

/// Packages a previous result as a start for a related problem; cone duals are recomputed there.
inline PrimalDualTriple warm_start_from(const SolveReport & report, const ConeProblem & next)
{
  const auto & t = report.triple;
  if (t.x.size() != next.num_vars || t.lambda.size() != next.num_rows())
    throw DimensionError("warm start does not match the new problem");
  PrimalDualTriple out;
  out.x = t.x;
  out.lambda = t.lambda;
  out.bound_duals = t.bound_duals.size() == next.num_vars ? t.bound_duals : Vector::Zero(next.num_vars);
  out.z = dual_slack(next, out.lambda, out.bound_duals);
  return out;
}

}  // namespace socpsqp

#endif  // SOCPSQP_DRIVER_HPP_
