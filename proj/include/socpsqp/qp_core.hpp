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

#ifndef SOCPSQP_QP_CORE_HPP_
#define SOCPSQP_QP_CORE_HPP_

/**
 * @file
 * @brief Dense convex QP engine.
 *
 * Primal active-set method working in the null space of the active
 * constraints. The orthogonal factor of the working-set matrix is updated
 * with Givens rotations when a constraint enters or leaves, so the engine
 * is cheap to warm start from a guessed working set. A positive
 * semi-definite (possibly singular) Hessian is handled through a pivoted
 * Cholesky factorization of the reduced Hessian: when the reduced problem
 * is unbounded the engine moves along a zero-curvature descent direction
 * until a constraint blocks.
 *
 * Feasibility is obtained with an elastic phase that relaxes only the rows
 * violated at the starting point by one shared slack variable. When that
 * slack cannot be driven to zero the multipliers of the elastic problem
 * form a Farkas certificate.
 */

#include "socpsqp/types.hpp"

#include <Eigen/Jacobi>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace socpsqp {

struct QpRow
{
  SparseRow coeffs;
  double rhs = 0.0;
  Sense sense = Sense::LE;
};

/// minimize 0.5 d^T H d + g^T d  s.t.  rows,  lower <= d <= upper.
struct QpProblem
{
  /// Symmetric positive semi-definite; an empty matrix stands for zero.
  Matrix hessian;
  Vector linear;
  std::vector<QpRow> rows;
  Vector lower;
  Vector upper;

  QpProblem() = default;

  explicit QpProblem(Index n)
  : linear(Vector::Zero(n)), lower(Vector::Constant(n, -kInf)), upper(Vector::Constant(n, kInf))
  {}

  [[nodiscard]] Index num_vars() const { return linear.size(); }
  [[nodiscard]] Index num_rows() const { return static_cast<Index>(rows.size()); }
  [[nodiscard]] bool has_hessian() const { return hessian.size() > 0; }

  void validate() const
  {
    const Index n = num_vars();
    if (lower.size() != n || upper.size() != n) throw DimensionError("qp bounds size mismatch");
    if (has_hessian()) {
      if (hessian.rows() != n || hessian.cols() != n) throw DimensionError("qp hessian size mismatch");
      const double scale = std::max(1.0, hessian.cwiseAbs().maxCoeff());
      if ((hessian - hessian.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw ModelError("qp hessian is not symmetric");
    }
    for (const auto & row : rows)
      for (const auto & [i, v] : row.coeffs.terms)
        if (i < 0 || i >= n) throw DimensionError("qp row index out of range");
  }
};

enum class QpStatus { Optimal, Infeasible, Failed };

inline const char * to_string(QpStatus s)
{
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::Failed: return "failed";
  }
  return "unknown";
}

/// Working set used for warm starts: active rows and active bounds.
struct ActiveSet
{
  std::vector<Index> rows;
  std::vector<Index> lower;
  std::vector<Index> upper;

  [[nodiscard]] bool empty() const { return rows.empty() && lower.empty() && upper.empty(); }
};

/**
 * Weights y with y^T [rows; bounds] = 0 and y^T rhs < 0. `bounds[k] > 0`
 * weights the upper bound row e_k^T d <= u_k, `bounds[k] < 0` the lower
 * bound row -e_k^T d <= -l_k with weight |bounds[k]|.
 */
struct FarkasCertificate
{
  Vector rows;
  Vector bounds;
};

struct QpSolution
{
  Vector d;
  Vector row_duals;
  /// Reduced-cost convention: H d + g + A^T row_duals - bound_duals = 0.
  Vector bound_duals;
  QpStatus status = QpStatus::Failed;
  double kkt_residual = kInf;
  std::optional<FarkasCertificate> farkas;
  ActiveSet active;
  int iterations = 0;
  int attempts = 0;
};

struct QpOptions
{
  double kkt_tol = 1e-9;
  /// Diagonal shift used by the second attempt of the fallback chain.
  double regularization = 1e-7;
  bool fallbacks = true;
  /// Force smallest-index pivoting from the first iteration.
  bool bland = false;
};

/// Infinity-norm KKT residual of `sol`, recomputed from the problem data.
inline double verify_qp_kkt(const QpProblem & qp, const QpSolution & sol)
{
  const Index n = qp.num_vars();
  if (sol.d.size() != n || sol.row_duals.size() != qp.num_rows() || sol.bound_duals.size() != n)
    throw DimensionError("verify_qp_kkt: dimension mismatch");
  Vector stat = qp.linear - sol.bound_duals;
  if (qp.has_hessian()) stat.noalias() += qp.hessian * sol.d;
  double err = 0.0;
  for (Index i = 0; i < qp.num_rows(); ++i) {
    const auto & row = qp.rows[static_cast<std::size_t>(i)];
    const double lam = sol.row_duals[i];
    row.coeffs.axpy(lam, stat);
    const double slack = row.coeffs.dot(sol.d) - row.rhs;
    if (row.sense == Sense::EQ) {
      err = std::max(err, std::abs(slack));
    } else {
      err = std::max(err, positive_part(slack));
      err = std::max(err, positive_part(-lam));
      err = std::max(err, std::abs(lam * slack));
    }
  }
  err = std::max(err, stat.lpNorm<Eigen::Infinity>());
  for (Index k = 0; k < n; ++k) {
    const double lo = qp.lower[k];
    const double up = qp.upper[k];
    const double s = sol.bound_duals[k];
    const double x = sol.d[k];
    if (std::isfinite(lo)) err = std::max(err, positive_part(lo - x));
    if (std::isfinite(up)) err = std::max(err, positive_part(x - up));
    if (lo == up) continue;
    if (s > 0.0) err = std::max(err, std::isfinite(lo) ? std::abs(s * (x - lo)) : s);
    if (s < 0.0) err = std::max(err, std::isfinite(up) ? std::abs(s * (up - x)) : -s);
  }
  return err;
}

/// Independent check of an infeasibility certificate after normalizing it to unit max-norm.
inline bool verify_farkas(const QpProblem & qp, const FarkasCertificate & cert, double tol = 1e-9)
{
  const Index n = qp.num_vars();
  if (cert.rows.size() != qp.num_rows() || cert.bounds.size() != n) return false;
  double scale = 0.0;
  if (cert.rows.size() > 0) scale = cert.rows.lpNorm<Eigen::Infinity>();
  if (n > 0) scale = std::max(scale, cert.bounds.lpNorm<Eigen::Infinity>());
  if (!(scale > 0.0) || !std::isfinite(scale)) return false;
  Vector combo = Vector::Zero(n);
  double rhs = 0.0;
  for (Index i = 0; i < qp.num_rows(); ++i) {
    const auto & row = qp.rows[static_cast<std::size_t>(i)];
    const double y = cert.rows[i] / scale;
    if (row.sense == Sense::LE && y < -1e-12) return false;
    row.coeffs.axpy(y, combo);
    rhs += y * row.rhs;
  }
  for (Index k = 0; k < n; ++k) {
    const double y = cert.bounds[k] / scale;
    if (y > 0.0) {
      if (!std::isfinite(qp.upper[k])) return false;
      rhs += y * qp.upper[k];
    } else if (y < 0.0) {
      if (!std::isfinite(qp.lower[k])) return false;
      rhs += y * qp.lower[k];
    }
    combo[k] += y;
  }
  return combo.lpNorm<Eigen::Infinity>() <= tol && rhs < -1e-10;
}

namespace detail {

using RowMajorSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// All constraints in "<=" or "=" orientation, bounds included as unit rows.
struct UnifiedConstraints
{
  enum class Origin : std::uint8_t { Row, Lower, Upper, Fixed };

  RowMajorSparse matrix;
  Vector rhs;
  std::vector<char> is_eq;
  std::vector<Origin> origin;
  std::vector<Index> source;
  Vector row_norm;
  std::vector<Index> lower_id;
  std::vector<Index> upper_id;

  [[nodiscard]] Index size() const { return rhs.size(); }

  explicit UnifiedConstraints(const QpProblem & qp)
  {
    const Index n = qp.num_vars();
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> b;
    lower_id.assign(static_cast<std::size_t>(n), -1);
    upper_id.assign(static_cast<std::size_t>(n), -1);
    auto push = [&](Origin o, Index src, bool eq, double r) {
      origin.push_back(o);
      source.push_back(src);
      is_eq.push_back(eq ? 1 : 0);
      b.push_back(r);
    };
    for (Index i = 0; i < qp.num_rows(); ++i) {
      const auto & row = qp.rows[static_cast<std::size_t>(i)];
      const auto id = static_cast<Index>(b.size());
      for (const auto & [k, v] : row.coeffs.terms)
        if (v != 0.0) trip.emplace_back(id, k, v);
      push(Origin::Row, i, row.sense == Sense::EQ, row.rhs);
    }
    for (Index k = 0; k < n; ++k) {
      const double lo = qp.lower[k];
      const double up = qp.upper[k];
      if (std::isfinite(lo) && lo == up) {
        const auto id = static_cast<Index>(b.size());
        trip.emplace_back(id, k, 1.0);
        push(Origin::Fixed, k, true, up);
        lower_id[static_cast<std::size_t>(k)] = id;
        upper_id[static_cast<std::size_t>(k)] = id;
        continue;
      }
      if (std::isfinite(lo)) {
        const auto id = static_cast<Index>(b.size());
        trip.emplace_back(id, k, -1.0);
        push(Origin::Lower, k, false, -lo);
        lower_id[static_cast<std::size_t>(k)] = id;
      }
      if (std::isfinite(up)) {
        const auto id = static_cast<Index>(b.size());
        trip.emplace_back(id, k, 1.0);
        push(Origin::Upper, k, false, up);
        upper_id[static_cast<std::size_t>(k)] = id;
      }
    }
    matrix.resize(static_cast<Index>(b.size()), n);
    matrix.setFromTriplets(trip.begin(), trip.end());
    matrix.makeCompressed();
    rhs = Eigen::Map<Vector>(b.data(), static_cast<Index>(b.size()));
    row_norm.resize(rhs.size());
    for (Index c = 0; c < rhs.size(); ++c) row_norm[c] = matrix.row(c).norm();
  }
};

/// Pivoted Cholesky of a PSD matrix: P^T M P ~= L L^T with L of width `rank`.
struct PivotedCholesky
{
  std::vector<Index> perm;
  Matrix lower;
  Index rank = 0;

  PivotedCholesky(Matrix m, double rel_tol)
  {
    const Index k = m.rows();
    perm.resize(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) perm[static_cast<std::size_t>(i)] = i;
    const double dmax = k > 0 ? m.diagonal().maxCoeff() : 0.0;
    const double floor = rel_tol * std::max(dmax, 0.0);
    for (Index j = 0; j < k; ++j) {
      Index piv = j;
      m.diagonal().tail(k - j).maxCoeff(&piv);
      piv += j;
      if (!(m(piv, piv) > floor) || m(piv, piv) <= 0.0) break;
      if (piv != j) {
        m.row(j).swap(m.row(piv));
        m.col(j).swap(m.col(piv));
        std::swap(perm[static_cast<std::size_t>(j)], perm[static_cast<std::size_t>(piv)]);
      }
      const double djj = std::sqrt(m(j, j));
      m(j, j) = djj;
      const Index rest = k - j - 1;
      if (rest > 0) {
        m.col(j).tail(rest) /= djj;
        const Vector col = m.col(j).tail(rest);
        m.bottomRightCorner(rest, rest).noalias() -= col * col.transpose();
      }
      ++rank;
    }
    lower = m.leftCols(rank).template triangularView<Eigen::Lower>();
  }
};

enum class EngineStatus { Optimal, Unbounded, IterationLimit, Stopped };

/**
 * Primal active-set iterations from a feasible point. The working set is
 * kept as A_W^T = Q [R; 0]; the trailing columns of Q span the null space.
 */
class ActiveSetEngine
{
public:
  ActiveSetEngine(const Matrix * hessian, const Vector & linear, const RowMajorSparse & cons, const Vector & rhs,
                  const Vector & row_norm, const std::vector<char> & is_eq, bool bland)
  : n_(linear.size()), g_(linear), c_(cons), b_(rhs), norm_(row_norm), eq_(is_eq), bland_(bland)
  {
    q_ = Matrix::Identity(n_, n_);
    r_ = Matrix::Zero(n_, n_);
    in_w_.assign(static_cast<std::size_t>(cons.rows()), 0);
    if (hessian != nullptr && hessian->size() > 0) {
      for (Index i = 0; i < n_; ++i)
        if (hessian->row(i).cwiseAbs().maxCoeff() > 0.0) support_.push_back(i);
      const auto s = static_cast<Index>(support_.size());
      h_support_.resize(s, s);
      for (Index a = 0; a < s; ++a)
        for (Index bcol = 0; bcol < s; ++bcol)
          h_support_(a, bcol) = (*hessian)(support_[static_cast<std::size_t>(a)], support_[static_cast<std::size_t>(bcol)]);
    }
  }

  [[nodiscard]] Index working_size() const { return t_; }
  [[nodiscard]] const std::vector<Index> & working_set() const { return w_; }
  [[nodiscard]] const Vector & point() const { return d_; }
  [[nodiscard]] const Vector & working_multipliers() const { return lambda_w_; }
  [[nodiscard]] int iterations() const { return iterations_; }

  /// Adds constraint c to the working set; false if numerically dependent.
  bool add(Index c)
  {
    if (in_w_[static_cast<std::size_t>(c)] || t_ >= n_) return false;
    Vector w = Vector::Zero(n_);
    for (RowMajorSparse::InnerIterator it(c_, c); it; ++it) w.noalias() += it.value() * q_.row(it.index()).transpose();
    const double null_part = w.tail(n_ - t_).norm();
    if (!(null_part > 1e-10 * std::max(norm_[c], 1e-300))) return false;
    for (Index i = n_ - 1; i > t_; --i) {
      if (w[i] == 0.0) continue;
      Eigen::JacobiRotation<double> rot;
      rot.makeGivens(w[i - 1], w[i]);
      w.applyOnTheLeft(i - 1, i, rot.adjoint());
      q_.applyOnTheRight(i - 1, i, rot);
      w[i] = 0.0;
    }
    r_.col(t_).head(t_ + 1) = w.head(t_ + 1);
    w_.push_back(c);
    in_w_[static_cast<std::size_t>(c)] = 1;
    ++t_;
    return true;
  }

  void remove_at(Index pos)
  {
    const Index c = w_[static_cast<std::size_t>(pos)];
    for (Index j = pos; j + 1 < t_; ++j) r_.col(j).head(j + 2) = r_.col(j + 1).head(j + 2);
    r_.col(t_ - 1).setZero();
    for (Index i = pos; i + 1 < t_; ++i) {
      Eigen::JacobiRotation<double> rot;
      rot.makeGivens(r_(i, i), r_(i + 1, i));
      r_.block(i, i, 2, t_ - 1 - i).applyOnTheLeft(0, 1, rot.adjoint());
      q_.applyOnTheRight(i, i + 1, rot);
      r_(i + 1, i) = 0.0;
    }
    w_.erase(w_.begin() + pos);
    in_w_[static_cast<std::size_t>(c)] = 0;
    --t_;
  }

  /// Minimum-norm point satisfying the working constraints with equality.
  [[nodiscard]] Vector min_norm_point() const
  {
    if (t_ == 0) return Vector::Zero(n_);
    Vector bw(t_);
    for (Index i = 0; i < t_; ++i) bw[i] = b_[w_[static_cast<std::size_t>(i)]];
    const Vector y = r_.topLeftCorner(t_, t_).transpose().triangularView<Eigen::Lower>().solve(bw);
    return q_.leftCols(t_) * y;
  }

  /// Solves A_W^T w = a for a constraint dependent on the working set.
  [[nodiscard]] Vector dependency_weights(Index c) const
  {
    Vector w = Vector::Zero(n_);
    for (RowMajorSparse::InnerIterator it(c_, c); it; ++it) w.noalias() += it.value() * q_.row(it.index()).transpose();
    return r_.topLeftCorner(t_, t_).triangularView<Eigen::Upper>().solve(w.head(t_));
  }

  void set_point(Vector d) { d_ = std::move(d); }

  EngineStatus run(std::optional<Index> stop_on = std::nullopt)
  {
    const Index m = c_.rows();
    const Index max_iter = 20 * (n_ + m) + 200;
    bool stationary = false;
    Index degenerate_run = 0;
    Index just_dropped = -1;
    std::vector<char> skip(static_cast<std::size_t>(m), 0);

    for (iterations_ = 0; iterations_ < max_iter; ++iterations_) {
      project_onto_working_set();
      const Vector grad = gradient();
      const double gscale = 1.0 + grad.lpNorm<Eigen::Infinity>();
      const Index k = n_ - t_;

      Vector p;
      bool newton = true;
      if (!stationary && k > 0) {
        const Vector q = q_.rightCols(k).transpose() * grad;
        if (q.lpNorm<Eigen::Infinity>() <= 1e-13 * gscale) {
          stationary = true;
        } else {
          p = direction(q, newton, gscale);
          if (p.size() == 0) stationary = true;
        }
      } else {
        stationary = true;
      }

      if (stationary) {
        compute_multipliers(grad);
        Index drop = -1;
        double most_negative = -1e-11 * gscale;
        for (Index i = 0; i < t_; ++i) {
          const Index c = w_[static_cast<std::size_t>(i)];
          if (eq_[static_cast<std::size_t>(c)]) continue;
          const double lam = lambda_w_[i];
          if (lam < most_negative) {
            if (bland_) {
              if (drop < 0 || c < w_[static_cast<std::size_t>(drop)]) drop = i;
            } else {
              most_negative = lam;
              drop = i;
            }
          }
        }
        if (drop < 0) return EngineStatus::Optimal;
        just_dropped = w_[static_cast<std::size_t>(drop)];
        remove_at(drop);
        std::fill(skip.begin(), skip.end(), 0);
        stationary = false;
        continue;
      }

      // Ratio test.
      const Vector cp = c_ * p;
      const Vector slack = b_ - c_ * d_;
      const double pnorm = p.norm();
      double alpha = newton ? 1.0 : kInf;
      Index block = -1;
      for (Index c = 0; c < m; ++c) {
        if (in_w_[static_cast<std::size_t>(c)] || skip[static_cast<std::size_t>(c)]) continue;
        if (eq_[static_cast<std::size_t>(c)]) continue;
        const double rel = c == just_dropped ? 1e-8 : 1e-12;
        if (!(cp[c] > rel * norm_[c] * pnorm)) continue;
        const double ac = std::max(slack[c], 0.0) / cp[c];
        if (ac < alpha || (ac == alpha && block >= 0 && c < block)) {
          alpha = ac;
          block = c;
        }
      }
      just_dropped = -1;
      if (block < 0) {
        if (!newton) return EngineStatus::Unbounded;
        d_ += p;
        stationary = true;
        continue;
      }
      d_ += alpha * p;
      if (alpha * pnorm <= 1e-14 * (1.0 + d_.norm())) {
        if (++degenerate_run > 2 * (n_ + 10)) bland_ = true;
      } else {
        degenerate_run = 0;
      }
      if (!add(block)) {
        skip[static_cast<std::size_t>(block)] = 1;
        continue;
      }
      std::fill(skip.begin(), skip.end(), 0);
      if (stop_on && block == *stop_on) return EngineStatus::Stopped;
    }
    return EngineStatus::IterationLimit;
  }

  void compute_multipliers(const Vector & grad)
  {
    if (t_ == 0) {
      lambda_w_.resize(0);
      return;
    }
    const Vector rhs = -(q_.leftCols(t_).transpose() * grad);
    lambda_w_ = r_.topLeftCorner(t_, t_).triangularView<Eigen::Upper>().solve(rhs);
  }

  [[nodiscard]] Vector gradient() const
  {
    Vector grad = g_;
    if (!support_.empty()) {
      const auto s = static_cast<Index>(support_.size());
      Vector ds(s);
      for (Index i = 0; i < s; ++i) ds[i] = d_[support_[static_cast<std::size_t>(i)]];
      const Vector hd = h_support_ * ds;
      for (Index i = 0; i < s; ++i) grad[support_[static_cast<std::size_t>(i)]] += hd[i];
    }
    return grad;
  }

private:
  void project_onto_working_set()
  {
    if (t_ == 0) return;
    Vector res(t_);
    double worst = 0.0;
    for (Index i = 0; i < t_; ++i) {
      const Index c = w_[static_cast<std::size_t>(i)];
      res[i] = b_[c] - c_.row(c).dot(d_);
      worst = std::max(worst, std::abs(res[i]));
    }
    if (worst == 0.0) return;
    const Vector y = r_.topLeftCorner(t_, t_).transpose().triangularView<Eigen::Lower>().solve(res);
    d_.noalias() += q_.leftCols(t_) * y;
  }

  /// Null-space direction. Returns an empty vector when the step is negligible.
  Vector direction(const Vector & q, bool & newton, double gscale)
  {
    const Index k = q.size();
    const auto s = static_cast<Index>(support_.size());
    Vector pz;
    if (s == 0) {
      newton = false;
      pz = -q;
    } else {
      Matrix zs(s, k);
      for (Index i = 0; i < s; ++i) zs.row(i) = q_.row(support_[static_cast<std::size_t>(i)]).tail(k);
      const Matrix hz = h_support_ * zs;
      Matrix red = zs.transpose() * hz;
      red = 0.5 * (red + red.transpose()).eval();
      const PivotedCholesky chol(red, 1e-11);
      const Index r = chol.rank;
      Vector qp(k);
      for (Index i = 0; i < k; ++i) qp[i] = q[chol.perm[static_cast<std::size_t>(i)]];
      const auto l11 = chol.lower.topRows(r).template triangularView<Eigen::Lower>();
      Vector u;
      Vector y1;
      if (r > 0) {
        y1 = l11.solve(qp.head(r));
        u = qp.tail(k - r) - chol.lower.bottomRows(k - r) * y1;
      } else {
        y1.resize(0);
        u = qp;
      }
      Vector pp = Vector::Zero(k);
      if (k - r == 0 || u.lpNorm<Eigen::Infinity>() <= 1e-12 * gscale) {
        newton = true;
        if (r > 0) pp.head(r) = -l11.transpose().solve(y1);
      } else {
        newton = false;
        pp.tail(k - r) = -u;
        if (r > 0) pp.head(r) = l11.transpose().solve(chol.lower.bottomRows(k - r).transpose() * u);
      }
      pz.resize(k);
      for (Index i = 0; i < k; ++i) pz[chol.perm[static_cast<std::size_t>(i)]] = pp[i];
    }
    Vector p = q_.rightCols(k) * pz;
    if (p.lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + d_.lpNorm<Eigen::Infinity>())) return Vector();
    return p;
  }

  Index n_;
  const Vector & g_;
  const RowMajorSparse & c_;
  const Vector & b_;
  const Vector & norm_;
  const std::vector<char> & eq_;
  bool bland_;

  std::vector<Index> support_;
  Matrix h_support_;
  Matrix q_;
  Matrix r_;
  std::vector<Index> w_;
  std::vector<char> in_w_;
  Index t_ = 0;
  Vector d_;
  Vector lambda_w_;
  int iterations_ = 0;
};

struct AttemptResult
{
  QpSolution solution;
  bool certified = false;
};

inline QpSolution make_failed(Index n, Index m)
{
  QpSolution s;
  s.d = Vector::Zero(n);
  s.row_duals = Vector::Zero(m);
  s.bound_duals = Vector::Zero(n);
  s.status = QpStatus::Failed;
  return s;
}

inline std::vector<Index> warm_ids(const UnifiedConstraints & uc, const ActiveSet * warm, Index num_rows)
{
  std::vector<Index> ids;
  if (warm == nullptr) return ids;
  for (Index r : warm->rows)
    if (r >= 0 && r < num_rows) ids.push_back(r);
  for (Index k : warm->lower)
    if (k >= 0 && k < static_cast<Index>(uc.lower_id.size()) && uc.lower_id[static_cast<std::size_t>(k)] >= 0)
      ids.push_back(uc.lower_id[static_cast<std::size_t>(k)]);
  for (Index k : warm->upper)
    if (k >= 0 && k < static_cast<Index>(uc.upper_id.size()) && uc.upper_id[static_cast<std::size_t>(k)] >= 0)
      ids.push_back(uc.upper_id[static_cast<std::size_t>(k)]);
  return ids;
}

inline FarkasCertificate farkas_from_weights(const UnifiedConstraints & uc, Index num_rows, Index n,
                                             const std::vector<std::pair<Index, double>> & weights)
{
  FarkasCertificate cert{Vector::Zero(num_rows), Vector::Zero(n)};
  for (const auto & [c, y0] : weights) {
    double y = y0;
    if (!uc.is_eq[static_cast<std::size_t>(c)] && y < 0.0) y = 0.0;
    const Index src = uc.source[static_cast<std::size_t>(c)];
    switch (uc.origin[static_cast<std::size_t>(c)]) {
      case UnifiedConstraints::Origin::Row: cert.rows[src] += y; break;
      case UnifiedConstraints::Origin::Lower: cert.bounds[src] -= y; break;
      case UnifiedConstraints::Origin::Upper: cert.bounds[src] += y; break;
      case UnifiedConstraints::Origin::Fixed: cert.bounds[src] += y; break;
    }
  }
  return cert;
}

inline void extract_solution(const QpProblem & qp, const UnifiedConstraints & uc, const ActiveSetEngine & eng,
                             QpSolution & sol)
{
  const Index n = qp.num_vars();
  sol.d = eng.point();
  sol.row_duals = Vector::Zero(qp.num_rows());
  sol.bound_duals = Vector::Zero(n);
  sol.active = ActiveSet{};
  const auto & w = eng.working_set();
  const Vector & lam = eng.working_multipliers();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Index c = w[i];
    const double mu = lam[static_cast<Index>(i)];
    const Index src = uc.source[static_cast<std::size_t>(c)];
    switch (uc.origin[static_cast<std::size_t>(c)]) {
      case UnifiedConstraints::Origin::Row:
        sol.row_duals[src] = uc.is_eq[static_cast<std::size_t>(c)] ? mu : std::max(mu, 0.0);
        sol.active.rows.push_back(src);
        break;
      case UnifiedConstraints::Origin::Lower:
        sol.bound_duals[src] = std::max(mu, 0.0);
        sol.active.lower.push_back(src);
        break;
      case UnifiedConstraints::Origin::Upper:
        sol.bound_duals[src] = -std::max(mu, 0.0);
        sol.active.upper.push_back(src);
        break;
      case UnifiedConstraints::Origin::Fixed:
        sol.bound_duals[src] = -mu;
        sol.active.lower.push_back(src);
        break;
    }
  }
}

/// One full solve: equality rows, warm rows, elastic phase, optimality phase.
inline QpSolution attempt(const QpProblem & qp, const Matrix * hessian, const ActiveSet * warm, bool bland,
                          double feas_tol)
{
  const Index n = qp.num_vars();
  const Index m = qp.num_rows();
  const UnifiedConstraints uc(qp);
  const Index mc = uc.size();
  QpSolution sol = make_failed(n, m);

  // Equality rows first; dependent ones must be consistent.
  ActiveSetEngine base(hessian, qp.linear, uc.matrix, uc.rhs, uc.row_norm, uc.is_eq, bland);
  std::vector<Index> dependent_eq;
  for (Index c = 0; c < mc; ++c)
    if (uc.is_eq[static_cast<std::size_t>(c)] && !base.add(c)) dependent_eq.push_back(c);
  {
    const Vector d_eq = base.min_norm_point();
    for (Index c : dependent_eq) {
      const double gap = uc.matrix.row(c).dot(d_eq) - uc.rhs[c];
      if (std::abs(gap) > feas_tol) {
        const Vector w = base.dependency_weights(c);
        std::vector<std::pair<Index, double>> weights;
        const double sign = gap > 0.0 ? 1.0 : -1.0;
        weights.emplace_back(c, sign);
        for (Index i = 0; i < base.working_size(); ++i)
          weights.emplace_back(base.working_set()[static_cast<std::size_t>(i)], -sign * w[i]);
        sol.status = QpStatus::Infeasible;
        sol.farkas = farkas_from_weights(uc, m, n, weights);
        return sol;
      }
    }
  }
  for (Index c : warm_ids(uc, warm, m))
    if (!uc.is_eq[static_cast<std::size_t>(c)]) base.add(c);
  Vector d0 = base.min_norm_point();
  std::vector<Index> start_set = base.working_set();

  const Vector slack0 = uc.rhs - uc.matrix * d0;
  double max_violation = 0.0;
  for (Index c = 0; c < mc; ++c)
    if (!uc.is_eq[static_cast<std::size_t>(c)]) max_violation = std::max(max_violation, -slack0[c]);

  int iters = 0;
  if (max_violation > 1e-12 * (1.0 + uc.rhs.lpNorm<Eigen::Infinity>())) {
    // Elastic phase: minimize v with violated rows relaxed by v.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(uc.matrix.nonZeros() + mc + 1));
    for (Index c = 0; c < mc; ++c) {
      for (RowMajorSparse::InnerIterator it(uc.matrix, c); it; ++it) trip.emplace_back(c, it.index(), it.value());
      if (!uc.is_eq[static_cast<std::size_t>(c)] && slack0[c] < 0.0) trip.emplace_back(c, n, -1.0);
    }
    trip.emplace_back(mc, n, -1.0);
    RowMajorSparse c1(mc + 1, n + 1);
    c1.setFromTriplets(trip.begin(), trip.end());
    c1.makeCompressed();
    Vector b1(mc + 1);
    b1.head(mc) = uc.rhs;
    b1[mc] = 0.0;
    Vector norm1(mc + 1);
    for (Index c = 0; c <= mc; ++c) norm1[c] = c1.row(c).norm();
    std::vector<char> eq1 = uc.is_eq;
    eq1.push_back(0);
    Vector g1 = Vector::Zero(n + 1);
    g1[n] = 1.0;
    ActiveSetEngine ph1(nullptr, g1, c1, b1, norm1, eq1, bland);
    for (Index c : start_set) ph1.add(c);
    Vector x1(n + 1);
    x1.head(n) = d0;
    x1[n] = max_violation;
    ph1.set_point(x1);
    const EngineStatus st = ph1.run(mc);
    iters += ph1.iterations();
    if (st == EngineStatus::Unbounded || st == EngineStatus::IterationLimit) {
      sol.iterations = iters;
      return sol;
    }
    const double vstar = ph1.point()[n];
    if (st == EngineStatus::Optimal && vstar > feas_tol) {
      ph1.compute_multipliers(ph1.gradient());
      std::vector<std::pair<Index, double>> weights;
      const auto & w = ph1.working_set();
      for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] != mc) weights.emplace_back(w[i], ph1.working_multipliers()[static_cast<Index>(i)]);
      sol.status = QpStatus::Infeasible;
      sol.farkas = farkas_from_weights(uc, m, n, weights);
      sol.iterations = iters;
      return sol;
    }
    d0 = ph1.point().head(n);
    start_set.clear();
    for (Index c : ph1.working_set())
      if (c != mc) start_set.push_back(c);
  }

  ActiveSetEngine ph2(hessian, qp.linear, uc.matrix, uc.rhs, uc.row_norm, uc.is_eq, bland);
  for (Index c = 0; c < mc; ++c)
    if (uc.is_eq[static_cast<std::size_t>(c)]) ph2.add(c);
  for (Index c : start_set) ph2.add(c);
  ph2.set_point(d0);
  const EngineStatus st2 = ph2.run();
  iters += ph2.iterations();
  sol.iterations = iters;
  if (st2 != EngineStatus::Optimal) return sol;
  ph2.compute_multipliers(ph2.gradient());
  extract_solution(qp, uc, ph2, sol);
  sol.status = QpStatus::Optimal;
  return sol;
}

}  // namespace detail

/**
 * Solves the QP with the fallback chain: warm active-set solve, retry with
 * H + regularization * I polished on the original Hessian, then a cold
 * start with smallest-index pivoting.
 */
inline QpSolution solve_qp(const QpProblem & qp, const ActiveSet * warm = nullptr, const QpOptions & opt = {})
{
  qp.validate();
  const Index n = qp.num_vars();
  const Matrix * h = qp.has_hessian() ? &qp.hessian : nullptr;
  int total_iters = 0;
  int attempts = 0;

  auto accept = [&](QpSolution & s) {
    total_iters += s.iterations;
    ++attempts;
    if (s.status == QpStatus::Optimal) {
      s.kkt_residual = verify_qp_kkt(qp, s);
      if (s.kkt_residual > opt.kkt_tol) {
        // One polishing pass from a freshly factorized working set.
        QpSolution again = detail::attempt(qp, h, &s.active, opt.bland, opt.kkt_tol);
        total_iters += again.iterations;
        if (again.status == QpStatus::Optimal) {
          again.kkt_residual = verify_qp_kkt(qp, again);
          if (again.kkt_residual < s.kkt_residual) s = std::move(again);
        }
      }
      return s.kkt_residual <= opt.kkt_tol;
    }
    if (s.status == QpStatus::Infeasible) return s.farkas.has_value() && verify_farkas(qp, *s.farkas);
    return false;
  };
  auto finish = [&](QpSolution s) {
    s.iterations = total_iters;
    s.attempts = attempts;
    return s;
  };

  QpSolution first = detail::attempt(qp, h, warm, opt.bland, opt.kkt_tol);
  if (accept(first) || !opt.fallbacks) {
    if (!(first.status == QpStatus::Optimal && first.kkt_residual <= opt.kkt_tol) &&
        !(first.status == QpStatus::Infeasible && first.farkas && verify_farkas(qp, *first.farkas)))
      first.status = QpStatus::Failed;
    return finish(std::move(first));
  }

  Matrix shifted = h != nullptr ? qp.hessian : Matrix::Zero(n, n);
  shifted.diagonal().array() += opt.regularization;
  QpSolution reg = detail::attempt(qp, &shifted, warm, opt.bland, opt.kkt_tol);
  total_iters += reg.iterations;
  ++attempts;
  if (reg.status == QpStatus::Optimal) {
    QpSolution polished = detail::attempt(qp, h, &reg.active, opt.bland, opt.kkt_tol);
    if (accept(polished)) return finish(std::move(polished));
  } else if (reg.status == QpStatus::Infeasible && reg.farkas && verify_farkas(qp, *reg.farkas)) {
    return finish(std::move(reg));
  }

  QpSolution cold = detail::attempt(qp, h, nullptr, true, opt.kkt_tol);
  if (accept(cold)) return finish(std::move(cold));

  QpSolution failed = first.status == QpStatus::Optimal ? std::move(first) : std::move(cold);
  failed.status = QpStatus::Failed;
  failed.farkas.reset();
  return finish(std::move(failed));
}

inline QpSolution solve_qp(const QpProblem & qp, const ActiveSet & warm, const QpOptions & opt = {})
{
  return solve_qp(qp, &warm, opt);
}

}  // namespace socpsqp

#endif  // SOCPSQP_QP_CORE_HPP_
