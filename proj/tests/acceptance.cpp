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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <socpsqp/socpsqp.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cone_oracle.hpp"
#include "qp_oracle.hpp"
#include "sampling.hpp"

namespace {

using namespace socpsqp;

constexpr std::uint64_t kBaseSeed = 1;
constexpr int kRepeats = 30;
const std::array<BenchSize, 3> kClasses{{{200, 60, 10}, {200, 60, 4}, {200, 60, 2}}};

// Largest model decrease over every subproblem of every solve below.
double g_model_decrease = -kInf;

SolveReport tracked_solve(const ConeProblem & p, const std::optional<PrimalDualTriple> & start, const SolverConfig & cfg)
{
  SolveReport rep = solve(p, start, cfg);
  g_model_decrease = std::max(g_model_decrease, rep.max_model_decrease);
  return rep;
}

std::map<int, std::pair<bool, std::string>> g_verdicts;

void verdict(int id, bool pass, const std::string & detail) { g_verdicts[id] = {pass, detail}; }

std::string fmt(const char * f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct ColdInstance
{
  GeneratedInstance inst;
  SolveReport report;
};

std::vector<std::vector<ColdInstance>> g_cold;

void cold_start()
{
  bool pass = true;
  std::string detail = "cold start";
  for (std::size_t s = 0; s < kClasses.size(); ++s) {
    std::vector<ColdInstance> runs;
    int optimal = 0;
    double iters = 0.0, fast_ratio = 0.0;
    for (int r = 0; r < kRepeats; ++r) {
      ColdInstance ci{generate(bench_params(kClasses[s], 0.5, bench_seed(kBaseSeed, s, r))), {}};
      ci.report = tracked_solve(ci.inst.problem, std::nullopt, SolverConfig{});
      if (ci.report.status == SolveStatus::Optimal) ++optimal;
      iters += ci.report.total_iters;
      fast_ratio += ci.report.total_iters > 0 ? double(ci.report.sqp_step_iters) / ci.report.total_iters : 1.0;
      runs.push_back(std::move(ci));
    }
    iters /= kRepeats;
    fast_ratio /= kRepeats;
    pass = pass && optimal == kRepeats && iters >= 3.0 && iters <= 18.0 && fast_ratio >= 0.6;
    detail += fmt(" | K=%ld optimal %d/%d mean iters %.2f fast ratio %.2f", long(kClasses[s].k), optimal, kRepeats,
                  iters, fast_ratio);
    g_cold.push_back(std::move(runs));
  }
  verdict(1, pass, detail);
}

void warm_start()
{
  bool pass = true;
  std::string detail = "warm start";
  for (const auto & [level, limit] : {std::pair{1e-3, 2.0}, std::pair{1e-1, 5.0}}) {
    double iters = 0.0;
    int optimal = 0;
    for (const ColdInstance & ci : g_cold[0]) {
      const ConeProblem perturbed = perturb_objective(ci.inst.problem, level, ci.inst.params.seed ^ 0x9e3779b97f4a7c15ULL);
      const SolveReport rep = tracked_solve(perturbed, warm_start_from(ci.report, perturbed), SolverConfig{});
      iters += rep.total_iters;
      if (rep.status == SolveStatus::Optimal) ++optimal;
    }
    iters /= kRepeats;
    pass = pass && iters <= limit;
    detail += fmt(" | level %.0e mean iters %.2f (limit %.0f) optimal %d/%d", level, iters, limit, optimal, kRepeats);
  }
  verdict(2, pass, detail);
}

void refinement()
{
  SolverConfig cfg;
  cfg.tol = 1e-9;
  int good = 0, in_range = 0;
  double worst = 0.0;
  for (const ColdInstance & ci : g_cold[0]) {
    const PrimalDualTriple start = pollute_to_error(ci.inst, 3e-6, ci.inst.params.seed ^ 0x9e3779b97f4a7c15ULL);
    const double e0 = kkt_error(ci.inst.problem, start);
    if (e0 >= 1e-6 && e0 <= 1e-5) ++in_range;
    const SolveReport rep = tracked_solve(ci.inst.problem, start, cfg);
    worst = std::max(worst, rep.kkt_error);
    if (rep.status == SolveStatus::Optimal && rep.kkt_error <= 1e-9 && rep.total_iters <= 3) ++good;
  }
  verdict(3, in_range == kRepeats && good >= 27,
          fmt("refinement | start error in [1e-6, 1e-5] %d/%d | final <= 1e-9 within 3 iters %d/%d (need 27) worst %.2e",
              in_range, kRepeats, good, kRepeats, worst));
}

void quadratic_tail()
{
  int good = 0;
  for (const ColdInstance & ci : g_cold[0]) {
    const auto & h = ci.report.error_history;
    if (h.size() < 2 || !nondegeneracy_screen(ci.inst)) continue;
    const double e1 = h[h.size() - 2], e2 = h.back();
    if (e2 <= std::max(10.0 * e1 * e1, 1e-12)) ++good;
  }
  verdict(4, good >= 24, fmt("quadratic tail | e2 <= max(10 e1^2, 1e-12) on %d/%d (need 24)", good, kRepeats));
}

void identification()
{
  int solved = 0, matched = 0;
  for (const auto & runs : g_cold)
    for (const ColdInstance & ci : runs) {
      if (ci.report.status != SolveStatus::Optimal) continue;
      ++solved;
      if (extremal_matches(ci.inst, ci.report.triple.x)) ++matched;
    }
  verdict(5, solved > 0 && matched == solved, fmt("identification | extremal set matches on %d/%d solved", matched, solved));
}

void property_suites()
{
  sampling::Source src(606);
  const double h = 1e-6;
  double fd_worst = 0.0;
  for (int t = 0; t < 300; ++t) {
    const auto dim = static_cast<Index>(src.integer(2, 7));
    const Vector v = (Vector(dim) << src.uniform(-1, 1), src.box(dim - 1, 0.5, 1.5)).finished();
    const Vector g = grad_residual(ConePoint::from_vector(v));
    const Matrix hess = hess_residual(ConePoint::from_vector(v));
    for (Index i = 0; i < dim; ++i) {
      Vector vp = v, vm = v;
      vp[i] += h;
      vm[i] -= h;
      const auto at = [](const Vector & w) { return ConePoint::from_vector(w); };
      const double fd = (residual(at(vp)) - residual(at(vm))) / (2 * h);
      fd_worst = std::max(fd_worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
      const Vector col = (grad_residual(at(vp)) - grad_residual(at(vm))) / (2 * h);
      fd_worst = std::max(fd_worst, (col - hess.col(i)).lpNorm<Eigen::Infinity>() /
                                      std::max(1.0, hess.col(i).lpNorm<Eigen::Infinity>()));
    }
  }

  int cut_violations = 0;
  for (int g = 0; g < 20; ++g) {
    const auto dim = static_cast<Index>(src.integer(2, 8));
    const ConePoint y = src.generator(dim);
    for (int s = 0; s < 10000; ++s)
      if (cut_value(y, src.in_cone(dim)) > 1e-12) ++cut_violations;
  }

  int phi_ok = 0;
  for (int t = 0; t < 100; ++t) {
    const auto dim = static_cast<Index>(src.integer(2, 6));
    const ConePoint y = src.generator(dim);
    const Vector zbar = src.gaussian(dim - 1);
    const ConePoint z((zbar + y.bar).lpNorm<1>() + y.bar.norm() + src.uniform(0.0, 1.0) * (t % 10 != 0), zbar);
    HyperplaneSet set = init_Y0(dim);
    set.insert(y);
    if (phi_certificate(z, y) >= -1e-12 && oracle::split_certificate(z, y).minCoeff() >= -1e-12 &&
        dual_cone_decompose(z, set).has_value())
      ++phi_ok;
  }

  std::mt19937_64 rng(20261016);
  int qp_ok = 0, farkas = 0, farkas_ok = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto [qp, planted] = oracle::random_qp(rng, trial % 2);
    const QpSolution sol = solve_qp(qp);
    const auto best = oracle::brute_force_optimum(qp);
    if (sol.status == QpStatus::Infeasible) {
      ++farkas;
      const bool verified = sol.farkas && verify_farkas(qp, *sol.farkas);
      if (verified) ++farkas_ok;
      if (verified && !best) ++qp_ok;
    } else if (sol.status == QpStatus::Optimal && best && std::abs(oracle::objective(qp, sol.d) - *best) <= 1e-7) {
      ++qp_ok;
    }
  }

  const bool decrease_ok = g_model_decrease <= 1e-10;
  verdict(6, fd_worst <= 1e-5 && cut_violations == 0 && phi_ok == 100 && qp_ok == 500 && farkas_ok == farkas && decrease_ok,
          fmt("property suites | finite differences worst rel %.1e | cut violations %d in 2e5 | phi oracle %d/100 | "
              "qp brute force %d/500 | farkas verified %d/%d | max model decrease %.1e",
              fd_worst, cut_violations, phi_ok, qp_ok, farkas_ok, farkas, g_model_decrease));
}

void infeasibility()
{
  ConeProblem rows(3);
  rows.cones.push_back(ConeSpec{{1, 2}});
  rows.rows.push_back({SparseRow{{0, 1.0}}, -1.0, Sense::LE});
  rows.rows.push_back({SparseRow{{0, -1.0}}, 0.0, Sense::LE});

  // The coordinate cuts admit x = (1, 0.8, 0.8); the cone itself does not.
  ConeProblem emptied(3);
  emptied.cones.push_back(ConeSpec{{0, 1, 2}});
  emptied.upper[0] = 1.0;
  emptied.objective << 0.0, 1.0, 0.5;
  emptied.rows.push_back({SparseRow{{1, -1.0}, {2, -1.0}}, -1.6, Sense::LE});

  const SolveStatus a = tracked_solve(rows, std::nullopt, SolverConfig{}).status;
  const SolveStatus b = tracked_solve(emptied, std::nullopt, SolverConfig{}).status;
  verdict(7, a == SolveStatus::Infeasible && b == SolveStatus::Infeasible,
          fmt("infeasibility | conflicting rows %s | cone emptied by cuts %s", to_string(a), to_string(b)));
}

void generator_contract()
{
  struct Shape
  {
    Index n, m, k0, ki, kb;
  };
  const std::array<Shape, 5> shapes{{{40, 12, 2, 2, 2}, {60, 20, 1, 3, 2}, {100, 30, 4, 4, 4}, {200, 60, 10, 10, 10},
                                     {120, 40, 6, 1, 5}}};
  const std::array<double, 4> densities{0.3, 0.5, 0.7, 1.0};
  int total = 0, kkt_ok = 0, counts_ok = 0, screen_ok = 0, bytes_ok = 0;
  double worst = 0.0;
  for (const Shape & sh : shapes)
    for (int r = 0; r < 40; ++r) {
      GenParams gp;
      gp.n = sh.n;
      gp.m = sh.m;
      gp.k0 = sh.k0;
      gp.ki = sh.ki;
      gp.kb = sh.kb;
      gp.density = densities[static_cast<std::size_t>(r) % densities.size()];
      gp.seed = 7000 + static_cast<std::uint64_t>(r) + 100 * static_cast<std::uint64_t>(sh.n);
      const GeneratedInstance inst = generate(gp);
      ++total;
      const double e = kkt_error(inst.problem, inst.planted);
      worst = std::max(worst, e);
      if (e <= 1e-8) ++kkt_ok;
      std::array<Index, 3> count{};
      bool labels = true;
      for (Index j = 0; j < inst.problem.num_cones(); ++j) {
        const auto a = oracle::observed_activity(inst.problem, inst.planted, j);
        labels = labels && a && *a == inst.activity[static_cast<std::size_t>(j)];
        if (a) ++count[static_cast<std::size_t>(*a)];
      }
      if (labels && count == std::array<Index, 3>{sh.k0, sh.ki, sh.kb}) ++counts_ok;
      if (nondegeneracy_screen(inst)) ++screen_ok;
      if (write_instance(InstanceFile{inst.problem, inst.planted, {}}) ==
          write_instance(InstanceFile{generate(gp).problem, generate(gp).planted, {}}))
        ++bytes_ok;
    }
  verdict(8, kkt_ok == total && counts_ok == total && screen_ok == total && bytes_ok == total && total == 200,
          fmt("generator | %d instances | planted kkt <= 1e-8 %d (worst %.1e) | activity counts %d | screen %d | "
              "identical bytes %d",
              total, kkt_ok, worst, counts_ok, screen_ok, bytes_ok));
}

bool same_bits(const Vector & a, const Vector & b)
{
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

void cbf_fixtures()
{
  struct Fixture
  {
    const char * file;
    double objective;
  };
  const double r2 = std::sqrt(2.0);
  const std::array<Fixture, 6> fixtures{{{"lp_eq.cbf", 1.0},
                                         {"quad_eq.cbf", r2},
                                         {"rotated.cbf", 5.0 + r2},
                                         {"int_relaxed.cbf", -r2},
                                         {"affine_cone_max.cbf", -r2},
                                         {"rotated_con.cbf", r2}}};
  SolverConfig cfg;
  cfg.tol = 1e-5;
  int solved = 0, lossless = 0;
  bool has_q = false, has_qr = false, has_int = false, has_eq = false;
  std::string misses;
  for (const Fixture & f : fixtures) {
    try {
      const CbfModel model = parse_cbf(read_text_file(std::string(SOCPSQP_TEST_DATA) + "/cbf/" + f.file));
      for (const auto * groups : {&model.var_groups, &model.con_groups})
        for (const CbfGroup & g : *groups) {
          has_q = has_q || g.cone == CbfCone::Quad;
          has_qr = has_qr || g.cone == CbfCone::RotQuad;
          has_eq = has_eq || g.cone == CbfCone::Zero;
        }
      has_int = has_int || !model.integers.empty();
      const CbfConversion conv = to_cone_problem(model);
      const SolveReport rep = tracked_solve(conv.problem, std::nullopt, cfg);
      if (rep.status == SolveStatus::Optimal && rep.kkt_error <= 1e-5 &&
          std::abs(conv.original_objective(rep.triple.x) - f.objective) <= 1e-4 * (1.0 + std::abs(f.objective)))
        ++solved;
      else
        misses += std::string(" ") + f.file;
      const std::string text = write_instance(InstanceFile{conv.problem, rep.triple, {}});
      const InstanceFile back = read_instance(text);
      if (write_instance(back) == text && same_bits(back.problem.objective, conv.problem.objective) &&
          same_bits(back.problem.lower, conv.problem.lower) && same_bits(back.problem.upper, conv.problem.upper) &&
          back.problem.rows == conv.problem.rows && back.problem.cones == conv.problem.cones && back.planted &&
          same_bits(back.planted->x, rep.triple.x) && same_bits(back.planted->lambda, rep.triple.lambda))
        ++lossless;
    } catch (const Error & e) {
      misses += std::string(" ") + f.file + " (" + e.what() + ")";
    }
  }
  const int n = static_cast<int>(fixtures.size());
  verdict(9, solved == n && lossless == n && has_q && has_qr && has_int && has_eq,
          fmt("cbf | %d fixtures | solved to 1e-5 %d | lossless json %d | covers Q %d QR %d INT %d EQ %d%s", n, solved,
              lossless, has_q, has_qr, has_int, has_eq, misses.empty() ? "" : (" | missed" + misses).c_str()));
}

}  // namespace

int main()
{
  const std::vector<std::pair<int, std::function<void()>>> steps{
    {1, cold_start},        {2, warm_start},      {3, refinement},
    {4, quadratic_tail},    {5, identification},  {7, infeasibility},
    {8, generator_contract}, {9, cbf_fixtures},   {6, property_suites}};
  for (const auto & [id, step] : steps) {
    try {
      step();
    } catch (const std::exception & e) {
      verdict(id, false, std::string("exception: ") + e.what());
    }
  }
  int failures = 0;
  for (const auto & [id, v] : g_verdicts) {
    std::printf("criterion %d  %s  %s\n", id, v.first ? "PASS" : "FAIL", v.second.c_str());
    failures += v.first ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failures, g_verdicts.size());
  return failures == 0 && g_verdicts.size() == 9 ? 0 : 1;
}
