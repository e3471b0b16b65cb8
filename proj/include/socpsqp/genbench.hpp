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

#ifndef SOCPSQP_GENBENCH_HPP_
#define SOCPSQP_GENBENCH_HPP_

/**
 * @file
 * @brief Random SOCP instances with a planted nondegenerate optimum, and the
 * benchmark harness built on them.
 *
 * Instances have the form
 *
 *   min c^T x  s.t.  A x = b,  x_j in K_j,  x_j0 <= 1000,  0 <= x_off <= 1000
 *
 * with a prescribed number of cones that are at the apex, in the interior,
 * or on the boundary away from the apex at the optimum.
 */

#include "socpsqp/driver.hpp"
#include "socpsqp/model.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace socpsqp {

/// Reproducible uniform sampling on top of the standardized 64-bit Mersenne Twister.
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double unit() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * unit(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n)
  {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

private:
  std::mt19937_64 engine_;
};

enum class Activity : std::uint8_t { Extremal, Interior, Boundary };

inline const char * to_string(Activity a)
{
  switch (a) {
    case Activity::Extremal: return "extremal";
    case Activity::Interior: return "interior";
    case Activity::Boundary: return "boundary";
  }
  return "unknown";
}

struct GenParams
{
  Index n = 200;
  Index m = 60;
  Index k0 = 10;
  Index ki = 10;
  Index kb = 10;
  double density = 0.5;
  std::uint64_t seed = 1;

  [[nodiscard]] Index num_cones() const { return k0 + ki + kb; }
  [[nodiscard]] Index extremal_dims() const { return k0 > 0 ? (m + kb) / 2 : 0; }

  void validate() const
  {
    if (n <= 0 || m < 0 || k0 < 0 || ki < 0 || kb < 0) throw ModelError("generator sizes must be nonnegative");
    if (!(density > 0.0 && density <= 1.0)) throw ModelError("density must lie in (0, 1]");
    const Index p = num_cones();
    if (!(n > 2 * p)) throw ModelError("generator needs n > 2p");
    if (!(n > m + kb + (m + kb) / 2)) throw ModelError("generator needs n > m + KB + floor((m + KB) / 2)");
    if (k0 > 0 && extremal_dims() < 2 * k0) throw ModelError("too many apex cones for floor((m + KB) / 2) dimensions");
    if (ki + kb > 0 && m + kb < 2 * (ki + kb)) throw ModelError("too many non-apex cones for m + KB dimensions");
    if (ki + kb == 0 && m + kb > 0) throw ModelError("m + KB dimensions need at least one non-apex cone");
  }
};

struct GeneratedInstance
{
  ConeProblem problem;
  PrimalDualTriple planted;
  std::vector<Activity> activity;
  GenParams params;
  int attempts = 0;
};

namespace detail {

/// Uniform composition of `total` into `parts` integers, each at least 2.
inline std::vector<Index> sample_dims(Rng & rng, Index total, Index parts)
{
  std::vector<Index> dims;
  if (parts == 0) return dims;
  const Index extra = total - 2 * parts;
  const Index slots = extra + parts - 1;
  std::set<Index> bars;
  for (Index j = slots - (parts - 1); j < slots; ++j) {
    const auto t = static_cast<Index>(rng.below(static_cast<std::uint64_t>(j + 1)));
    if (!bars.insert(t).second) bars.insert(j);
  }
  Index prev = -1;
  for (Index b : bars) {
    dims.push_back(b - prev - 1 + 2);
    prev = b;
  }
  dims.push_back(slots - prev - 1 + 2);
  return dims;
}

inline Vector sample_box(Rng & rng, Index len, double lo, double hi)
{
  Vector v(len);
  for (Index i = 0; i < len; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

/// Barred part of length `len` scaled to norm `target`.
inline Vector sample_direction(Rng & rng, Index len, double target)
{
  Vector v = sample_box(rng, len, -10.0, 10.0);
  return v * (target / v.norm());
}

}  // namespace detail

/**
 * Square Jacobian of the constraints active at the planted optimum: rows of
 * A, cone gradients of boundary cones, unit rows of apex cones and of
 * off-cone variables at their lower bound.
 */
inline Matrix active_jacobian(const GeneratedInstance & inst)
{
  const auto & pb = inst.problem;
  const Vector & x = inst.planted.x;
  std::vector<Vector> rows;
  for (const auto & row : pb.rows) {
    Vector a = Vector::Zero(pb.num_vars);
    row.coeffs.axpy(1.0, a);
    rows.push_back(std::move(a));
  }
  for (Index j = 0; j < pb.num_cones(); ++j) {
    const auto & idx = pb.cones[static_cast<std::size_t>(j)].indices;
    const Activity act = inst.activity[static_cast<std::size_t>(j)];
    if (act == Activity::Boundary) {
      const ConePoint pj = pb.block(x, j);
      if (!(pj.bar.norm() > 0.0)) continue;
      Vector a = Vector::Zero(pb.num_vars);
      pb.scatter(j, grad_residual(pj), a);
      rows.push_back(std::move(a));
    } else if (act == Activity::Extremal) {
      for (Index k : idx) rows.push_back(Vector::Unit(pb.num_vars, k));
    }
  }
  const auto owner = pb.cone_of_var();
  for (Index k = 0; k < pb.num_vars; ++k)
    if (owner[static_cast<std::size_t>(k)] < 0 && std::isfinite(pb.lower[k]) && x[k] <= pb.lower[k])
      rows.push_back(Vector::Unit(pb.num_vars, k));
  Matrix jac(static_cast<Index>(rows.size()), pb.num_vars);
  for (std::size_t i = 0; i < rows.size(); ++i) jac.row(static_cast<Index>(i)) = rows[i].transpose();
  return jac;
}

/// Strict complementarity margin and conditioning of the active Jacobian at the planted point.
inline bool nondegeneracy_screen(const GeneratedInstance & inst, double margin = 1e-3, double min_ratio = 1e-5)
{
  const auto & pb = inst.problem;
  const Vector z = dual_slack(pb, inst.planted.lambda, inst.planted.bound_duals);
  for (Index j = 0; j < pb.num_cones(); ++j) {
    const ConePoint sum = pb.block(Vector(inst.planted.x + z), j);
    if (!(residual(sum) <= -margin)) return false;
  }
  const Matrix jac = active_jacobian(inst);
  if (jac.rows() != pb.num_vars) return false;
  const Vector sv = Eigen::JacobiSVD<Matrix>(jac).singularValues();
  if (sv.size() == 0 || !(sv[0] > 0.0)) return false;
  return sv[sv.size() - 1] / sv[0] >= min_ratio;
}

inline GeneratedInstance generate(const GenParams & params, int max_attempts = 20)
{
  params.validate();
  Rng rng(params.seed);
  const Index n = params.n;
  const Index m = params.m;
  const Index p = params.num_cones();

  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    std::vector<Index> dims = detail::sample_dims(rng, params.extremal_dims(), params.k0);
    const std::vector<Index> rest = detail::sample_dims(rng, m + params.kb, params.ki + params.kb);
    dims.insert(dims.end(), rest.begin(), rest.end());

    GeneratedInstance inst;
    inst.params = params;
    inst.attempts = attempt;
    ConeProblem & pb = inst.problem;
    pb = ConeProblem(n);
    Vector x = Vector::Zero(n);
    Vector z = Vector::Zero(n);
    Index next = 0;
    for (Index j = 0; j < p; ++j) {
      const Index nj = dims[static_cast<std::size_t>(j)];
      ConeSpec cone;
      for (Index i = 0; i < nj; ++i) cone.indices.push_back(next + i);
      const Index head = next;
      const auto bar = Eigen::seqN(next + 1, nj - 1);
      if (j < params.k0) {
        inst.activity.push_back(Activity::Extremal);
        const double z0 = rng.uniform(1.0, 5.0);
        const Vector dir = detail::sample_box(rng, nj - 1, -10.0, 10.0);
        const double eps = rng.uniform(0.0, 1.0);
        z[head] = z0;
        z(bar) = dir * (z0 / ((2.0 + eps) * dir.norm()));
      } else if (j < params.k0 + params.ki) {
        inst.activity.push_back(Activity::Interior);
        const double x0 = rng.uniform(1.0, 5.0);
        const Vector dir = detail::sample_box(rng, nj - 1, -10.0, 10.0);
        const double eps = rng.uniform(0.0, 1.0);
        x[head] = x0;
        x(bar) = dir * (x0 / ((2.0 + eps) * dir.norm()));
      } else {
        inst.activity.push_back(Activity::Boundary);
        const Vector dir = detail::sample_box(rng, nj - 1, -10.0, 10.0);
        const double x0 = rng.uniform(1.0, 5.0);
        const double beta = rng.uniform(1.0, 5.0);
        x[head] = x0;
        x(bar) = dir * (x0 / dir.norm());
        z[head] = beta * x0;
        z(bar) = -beta * x(bar);
      }
      pb.upper[head] = 1000.0;
      pb.cones.push_back(std::move(cone));
      next += nj;
    }
    for (Index k = next; k < n; ++k) {
      pb.lower[k] = 0.0;
      pb.upper[k] = 1000.0;
      z[k] = rng.uniform(1.0, 5.0);
    }

    // Linearly independent sparse rows.
    Matrix basis(n, m);
    for (Index i = 0; i < m; ++i) {
      for (;;) {
        Vector a = Vector::Zero(n);
        for (Index k = 0; k < n; ++k)
          if (rng.unit() < params.density) a[k] = rng.uniform(-5.0, 5.0);
        Vector r = a;
        for (int pass = 0; pass < 2; ++pass)
          if (i > 0) r -= basis.leftCols(i) * (basis.leftCols(i).transpose() * r);
        if (r.norm() < 1e-8) continue;
        basis.col(i) = r / r.norm();
        SparseRow row;
        for (Index k = 0; k < n; ++k)
          if (a[k] != 0.0) row.push(k, a[k]);
        pb.rows.push_back({std::move(row), 0.0, Sense::EQ});
        break;
      }
    }

    inst.planted.x = x;
    inst.planted.lambda = Vector::Zero(m);
    inst.planted.bound_duals = Vector::Zero(n);
    for (Index k = next; k < n; ++k) inst.planted.bound_duals[k] = z[k];
    pb.objective = z;
    for (Index i = 0; i < m; ++i) pb.rows[static_cast<std::size_t>(i)].rhs = pb.rows[static_cast<std::size_t>(i)].coeffs.dot(x);
    inst.planted.z = z;
    if (!nondegeneracy_screen(inst)) continue;
    const Vector lambda = detail::sample_box(rng, m, 1.0, 10.0);
    inst.planted.lambda = lambda;
    pb.objective = z - pb.rows_transpose_times(lambda);
    for (Index k = 0; k < n; ++k)
      if (k >= next) inst.planted.z[k] = 0.0;
    return inst;
  }
  throw Error("nondegeneracy screen rejected every sampled instance");
}

// ---------------------------------------------------------------------------
// Benchmark harness

enum class BenchSuite : std::uint8_t { ColdStart, WarmPerturb, Refine };

inline const char * to_string(BenchSuite s)
{
  switch (s) {
    case BenchSuite::ColdStart: return "cold";
    case BenchSuite::WarmPerturb: return "warm";
    case BenchSuite::Refine: return "refine";
  }
  return "unknown";
}

struct BenchSize
{
  Index n = 200;
  Index m = 60;
  Index k = 10;
};

/// Parses "n:m:K[,n:m:K...]".
inline std::vector<BenchSize> parse_sizes(const std::string & text)
{
  std::vector<BenchSize> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    BenchSize s;
    char c1 = 0;
    char c2 = 0;
    std::stringstream is(item);
    if (!(is >> s.n >> c1 >> s.m >> c2 >> s.k) || c1 != ':' || c2 != ':' || !is.eof())
      throw ModelError("size entries must look like n:m:K, got '" + item + "'");
    out.push_back(s);
  }
  if (out.empty()) throw ModelError("no benchmark sizes given");
  return out;
}

struct BenchConfig
{
  BenchSuite suite = BenchSuite::ColdStart;
  /// Perturbation level for the warm suite, target start error for refine.
  double level = 1e-3;
  std::vector<BenchSize> sizes{BenchSize{}};
  int repeats = 30;
  double density = 0.5;
  std::uint64_t seed = 1;
  SolverConfig solver;
};

struct BenchRecord
{
  std::uint64_t seed = 0;
  SolveStatus status = SolveStatus::IterationLimit;
  int iterations = 0;
  int fast_iterations = 0;
  int newton_solves = 0;
  int master_solves = 0;
  double start_error = 0.0;
  double final_error = 0.0;
  std::vector<double> error_history;
  bool extremal_identified = false;
  double seconds = 0.0;
};

struct BenchRow
{
  BenchSize size;
  int attempted = 0;
  int solved = 0;
  double mean_iterations = 0.0;
  double mean_fast_iterations = 0.0;
  double mean_newton_solves = 0.0;
  double mean_master_solves = 0.0;
  double max_final_error = 0.0;
  double mean_seconds = 0.0;
  std::vector<BenchRecord> records;
};

struct BenchTable
{
  BenchSuite suite = BenchSuite::ColdStart;
  double level = 0.0;
  std::vector<BenchRow> rows;

  [[nodiscard]] std::string to_text() const
  {
    std::ostringstream os;
    os << "suite " << to_string(suite);
    if (suite != BenchSuite::ColdStart) os << " level " << level;
    os << "\n";
    os << std::setw(6) << "n" << std::setw(6) << "m" << std::setw(5) << "K" << std::setw(8) << "solved"
       << std::setw(8) << "iters" << std::setw(8) << "fast" << std::setw(9) << "newton" << std::setw(9) << "master"
       << std::setw(12) << "max_err" << std::setw(10) << "sec" << "\n";
    os << std::fixed;
    for (const auto & r : rows) {
      os << std::setw(6) << r.size.n << std::setw(6) << r.size.m << std::setw(5) << r.size.k << std::setw(5)
         << r.solved << "/" << std::left << std::setw(2) << r.attempted << std::right << std::setprecision(2)
         << std::setw(8) << r.mean_iterations << std::setw(8) << r.mean_fast_iterations << std::setw(9)
         << r.mean_newton_solves << std::setw(9) << r.mean_master_solves << std::scientific << std::setprecision(2)
         << std::setw(12) << r.max_final_error << std::fixed << std::setprecision(3) << std::setw(10)
         << r.mean_seconds << "\n";
    }
    return os.str();
  }

  [[nodiscard]] std::string to_csv() const
  {
    std::ostringstream os;
    os << "suite,level,n,m,K,attempted,solved,mean_iters,mean_fast_iters,mean_newton_qps,mean_master_qps,"
          "max_final_error,mean_seconds\n";
    os << std::setprecision(17);
    for (const auto & r : rows)
      os << to_string(suite) << "," << level << "," << r.size.n << "," << r.size.m << "," << r.size.k << ","
         << r.attempted << "," << r.solved << "," << r.mean_iterations << "," << r.mean_fast_iterations << ","
         << r.mean_newton_solves << "," << r.mean_master_solves << "," << r.max_final_error << ","
         << r.mean_seconds << "\n";
    return os.str();
  }
};

/// Seed of instance `rep` of size class `s`; distinct classes never share seeds.
inline std::uint64_t bench_seed(std::uint64_t base, std::size_t s, int rep)
{
  return base + 1000003ULL * static_cast<std::uint64_t>(s) + static_cast<std::uint64_t>(rep);
}

inline GenParams bench_params(const BenchSize & size, double density, std::uint64_t seed)
{
  GenParams gp;
  gp.n = size.n;
  gp.m = size.m;
  gp.k0 = gp.ki = gp.kb = size.k;
  gp.density = density;
  gp.seed = seed;
  return gp;
}

/// Adds uniform noise in [-level, level] to 10% of the objective entries.
inline ConeProblem perturb_objective(const ConeProblem & problem, double level, std::uint64_t seed)
{
  ConeProblem out = problem;
  Rng rng(seed);
  const Index n = problem.num_vars;
  const auto count = static_cast<Index>(std::max<Index>(1, (n + 5) / 10));
  std::set<Index> picked;
  for (Index j = n - count; j < n; ++j) {
    const auto t = static_cast<Index>(rng.below(static_cast<std::uint64_t>(j + 1)));
    if (!picked.insert(t).second) picked.insert(j);
  }
  for (Index k : picked) out.objective[k] += rng.uniform(-level, level);
  return out;
}

/**
 * Moves the planted optimum by a perturbation of size `scale`: apex cones
 * and fixed variables leave their bounds, the multipliers get noise, and
 * the remaining cone variables absorb the change so that A x = b still holds.
 */
inline PrimalDualTriple pollute_planted(const GeneratedInstance & inst, double scale, std::uint64_t seed)
{
  const auto & pb = inst.problem;
  Rng rng(seed);
  PrimalDualTriple t = inst.planted;
  Vector shift = Vector::Zero(pb.num_vars);
  std::vector<Index> absorbing;
  for (Index j = 0; j < pb.num_cones(); ++j) {
    const auto & idx = pb.cones[static_cast<std::size_t>(j)].indices;
    if (inst.activity[static_cast<std::size_t>(j)] == Activity::Extremal) {
      shift[idx[0]] = scale;
      for (std::size_t i = 1; i < idx.size(); ++i) shift[idx[i]] = scale * rng.uniform(-0.5, 0.5) / std::sqrt(double(idx.size()));
    } else {
      absorbing.insert(absorbing.end(), idx.begin(), idx.end());
    }
  }
  const auto owner = pb.cone_of_var();
  for (Index k = 0; k < pb.num_vars; ++k)
    if (owner[static_cast<std::size_t>(k)] < 0) shift[k] = scale * rng.unit();
  const Vector residual_rows = -pb.row_activity(shift);
  Matrix sub(pb.num_rows(), static_cast<Index>(absorbing.size()));
  for (Index i = 0; i < pb.num_rows(); ++i) {
    Vector a = Vector::Zero(pb.num_vars);
    pb.rows[static_cast<std::size_t>(i)].coeffs.axpy(1.0, a);
    for (std::size_t c = 0; c < absorbing.size(); ++c) sub(i, static_cast<Index>(c)) = a[absorbing[c]];
  }
  const Vector fix = sub.completeOrthogonalDecomposition().solve(residual_rows);
  for (std::size_t c = 0; c < absorbing.size(); ++c) shift[absorbing[c]] += fix[static_cast<Index>(c)];
  t.x += shift;
  for (Index i = 0; i < t.lambda.size(); ++i) t.lambda[i] += scale * rng.uniform(-1.0, 1.0);
  t.z = dual_slack(pb, t.lambda, t.bound_duals);
  return t;
}

/// Pollutes the planted triple until its KKT error lands in [target / 3, 3 * target].
inline PrimalDualTriple pollute_to_error(const GeneratedInstance & inst, double target, std::uint64_t seed)
{
  double scale = target;
  PrimalDualTriple t;
  for (int round = 0; round < 30; ++round) {
    t = pollute_planted(inst, scale, seed);
    const double e = kkt_error(inst.problem, t);
    if (e >= target / 3.0 && e <= 3.0 * target) return t;
    scale *= e > 0.0 ? target / e : 10.0;
  }
  return t;
}

inline BenchRecord record_of(const SolveReport & rep, std::uint64_t seed, double start_error, double seconds)
{
  BenchRecord r;
  r.seed = seed;
  r.status = rep.status;
  r.iterations = rep.total_iters;
  r.fast_iterations = rep.sqp_step_iters;
  r.newton_solves = rep.qp_newton_solves;
  r.master_solves = rep.qp_master_solves;
  r.start_error = start_error;
  r.final_error = rep.kkt_error;
  r.error_history = rep.error_history;
  r.seconds = seconds;
  return r;
}

inline bool extremal_matches(const GeneratedInstance & inst, const Vector & x, double tol = kExtremalTol)
{
  const ConePartition part = classify_cones(inst.problem, x, tol);
  for (Index j = 0; j < inst.problem.num_cones(); ++j)
    if (part.is_extremal(j) != (inst.activity[static_cast<std::size_t>(j)] == Activity::Extremal)) return false;
  return true;
}

/// One instance of a suite.
inline BenchRecord run_bench_instance(const BenchConfig & cfg, const BenchSize & size, std::uint64_t seed)
{
  using clock = std::chrono::steady_clock;
  const GeneratedInstance inst = generate(bench_params(size, cfg.density, seed));
  const auto seconds_since = [](clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };
  switch (cfg.suite) {
    case BenchSuite::ColdStart: {
      const auto t0 = clock::now();
      const SolveReport rep = solve(inst.problem, std::nullopt, cfg.solver);
      BenchRecord r = record_of(rep, seed, rep.error_history.front(), seconds_since(t0));
      r.extremal_identified = rep.status == SolveStatus::Optimal && extremal_matches(inst, rep.triple.x);
      return r;
    }
    case BenchSuite::WarmPerturb: {
      const SolveReport base = solve(inst.problem, std::nullopt, cfg.solver);
      const ConeProblem perturbed = perturb_objective(inst.problem, cfg.level, seed ^ 0x9e3779b97f4a7c15ULL);
      const PrimalDualTriple start = warm_start_from(base, perturbed);
      const auto t0 = clock::now();
      const SolveReport rep = solve(perturbed, start, cfg.solver);
      return record_of(rep, seed, kkt_error(perturbed, start), seconds_since(t0));
    }
    case BenchSuite::Refine: {
      const PrimalDualTriple start = pollute_to_error(inst, cfg.level, seed ^ 0x9e3779b97f4a7c15ULL);
      const auto t0 = clock::now();
      const SolveReport rep = solve(inst.problem, start, cfg.solver);
      return record_of(rep, seed, kkt_error(inst.problem, start), seconds_since(t0));
    }
  }
  return {};
}

inline BenchTable run_benchmark(const BenchConfig & cfg)
{
  if (cfg.repeats <= 0) throw ModelError("repeats must be positive");
  BenchTable table;
  table.suite = cfg.suite;
  table.level = cfg.suite == BenchSuite::ColdStart ? 0.0 : cfg.level;
  for (std::size_t s = 0; s < cfg.sizes.size(); ++s) {
    BenchRow row;
    row.size = cfg.sizes[s];
    for (int rep = 0; rep < cfg.repeats; ++rep) {
      BenchRecord r = run_bench_instance(cfg, row.size, bench_seed(cfg.seed, s, rep));
      ++row.attempted;
      if (r.status == SolveStatus::Optimal) ++row.solved;
      row.mean_iterations += r.iterations;
      row.mean_fast_iterations += r.fast_iterations;
      row.mean_newton_solves += r.newton_solves;
      row.mean_master_solves += r.master_solves;
      row.max_final_error = std::max(row.max_final_error, r.final_error);
      row.mean_seconds += r.seconds;
      row.records.push_back(std::move(r));
    }
    const double inv = 1.0 / row.attempted;
    row.mean_iterations *= inv;
    row.mean_fast_iterations *= inv;
    row.mean_newton_solves *= inv;
    row.mean_master_solves *= inv;
    row.mean_seconds *= inv;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace socpsqp

#endif  // SOCPSQP_GENBENCH_HPP_
