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

// Command-line front end: solve, generate, bench and check.

#include "socpsqp/socpsqp.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace socpsqp;

constexpr int kExitOptimal = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitLimit = 3;
constexpr int kExitFailure = 4;
constexpr int kExitUsage = 64;
constexpr int kExitInput = 66;

struct LoadedProblem
{
  ConeProblem problem;
  std::optional<CbfConversion> cbf;
};

bool has_suffix(const std::string & s, const std::string & suffix)
{
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

LoadedProblem load_problem(const std::string & path)
{
  const std::string text = read_text_file(path);
  LoadedProblem out;
  if (has_suffix(path, ".cbf") || has_suffix(path, ".CBF")) {
    out.cbf = to_cone_problem(parse_cbf(text));
    out.problem = out.cbf->problem;
  } else {
    out.problem = read_instance(text).problem;
  }
  return out;
}

int exit_code(SolveStatus s)
{
  switch (s) {
    case SolveStatus::Optimal: return kExitOptimal;
    case SolveStatus::Infeasible: return kExitInfeasible;
    case SolveStatus::IterationLimit: return kExitLimit;
    case SolveStatus::SubproblemFailure: return kExitFailure;
  }
  return kExitFailure;
}

struct SolveArgs
{
  std::string file;
  double tol = 1e-7;
  int max_iters = 200;
  std::string warm_start;
  bool enable_soc = false;
  std::string trace;
  std::string solution;
};

int run_solve(const SolveArgs & a)
{
  const LoadedProblem lp = load_problem(a.file);
  SolverConfig cfg;
  cfg.tol = a.tol;
  cfg.max_iters = a.max_iters;
  cfg.enable_soc_step = a.enable_soc;

  std::optional<PrimalDualTriple> start;
  if (!a.warm_start.empty()) start = read_triple(read_text_file(a.warm_start), lp.problem);

  std::ofstream trace_out;
  TraceSink sink;
  if (!a.trace.empty()) {
    trace_out.open(a.trace, std::ios::trunc);
    if (!trace_out) throw FileError("cannot open " + a.trace + " for writing");
    sink = [&trace_out](const TraceRecord & r) { trace_out << trace_line(r) << '\n'; };
  }

  const SolveReport rep = solve(lp.problem, start, cfg, sink);
  if (trace_out.is_open()) {
    trace_out.flush();
    if (!trace_out) throw FileError("write failed: " + a.trace);
  }

  const Vector & x = rep.triple.x;
  const double objective = lp.cbf ? lp.cbf->original_objective(x) : lp.problem.objective.dot(x);
  std::printf("status      %s\n", to_string(rep.status));
  std::printf("objective   %.12e\n", objective);
  std::printf("kkt_error   %.6e\n", rep.kkt_error);
  std::printf("iterations  %d (fast %d, master %d)\n", rep.total_iters, rep.sqp_step_iters,
              rep.total_iters - rep.sqp_step_iters);
  std::printf("qp_solves   newton %d, master %d\n", rep.qp_newton_solves, rep.qp_master_solves);
  std::printf("penalty     %.6e\n", rep.final_rho);

  if (!a.solution.empty()) write_text_file(a.solution, write_triple(rep.triple));
  return exit_code(rep.status);
}

struct GenerateArgs
{
  GenParams params;
  std::string out;
  std::string planted;
};

int run_generate(const GenerateArgs & a)
{
  const GeneratedInstance inst = generate(a.params);
  InstanceFile file;
  file.problem = inst.problem;
  file.planted = inst.planted;
  for (Activity act : inst.activity) file.activity.emplace_back(to_string(act));
  write_text_file(a.out, write_instance(file));
  if (!a.planted.empty()) write_text_file(a.planted, write_triple(inst.planted));
  std::printf("wrote %s: %lld variables, %lld rows, %lld cones\n", a.out.c_str(),
              static_cast<long long>(inst.problem.num_vars), static_cast<long long>(inst.problem.num_rows()),
              static_cast<long long>(inst.problem.num_cones()));
  return 0;
}

struct BenchArgs
{
  std::string suite = "cold";
  double level = 1e-3;
  std::string sizes = "200:60:10";
  int repeats = 30;
  double density = 0.5;
  std::uint64_t seed = 1;
  double tol = 1e-7;
  bool tol_given = false;
  int max_iters = 200;
  std::string csv;
};

int run_bench(const BenchArgs & a)
{
  BenchConfig cfg;
  if (a.suite == "cold") cfg.suite = BenchSuite::ColdStart;
  else if (a.suite == "warm") cfg.suite = BenchSuite::WarmPerturb;
  else cfg.suite = BenchSuite::Refine;
  cfg.level = a.level;
  cfg.sizes = parse_sizes(a.sizes);
  cfg.repeats = a.repeats;
  cfg.density = a.density;
  cfg.seed = a.seed;
  cfg.solver.tol = (cfg.suite == BenchSuite::Refine && !a.tol_given) ? 1e-9 : a.tol;
  cfg.solver.max_iters = a.max_iters;
  const BenchTable table = run_benchmark(cfg);
  std::fputs(table.to_text().c_str(), stdout);
  if (!a.csv.empty()) write_text_file(a.csv, table.to_csv());
  return 0;
}

int run_check(const std::string & file, const std::string & triple_path)
{
  const LoadedProblem lp = load_problem(file);
  const PrimalDualTriple t = read_triple(read_text_file(triple_path), lp.problem);
  std::printf("kkt_error   %.6e\n", kkt_error(lp.problem, t.x, t.lambda, t.bound_duals));
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Second-order cone programming by sequential quadratic programming"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto * solve_cmd = app.add_subcommand("solve", "Solve an instance (.json or .cbf)");
  solve_cmd->add_option("file", sa.file, "Instance file")->required();
  solve_cmd->add_option("--tol", sa.tol, "KKT error tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  solve_cmd->add_option("--max-iters", sa.max_iters, "Outer iteration limit")
    ->capture_default_str()
    ->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--warm-start", sa.warm_start, "Start triple (JSON)");
  solve_cmd->add_flag("--enable-soc", sa.enable_soc, "Try second-order correction steps");
  solve_cmd->add_option("--trace", sa.trace, "Write per-iteration JSON lines here");
  solve_cmd->add_option("--solution", sa.solution, "Write the final triple here");

  GenerateArgs ga;
  ga.params.k0 = ga.params.ki = ga.params.kb = 10;
  auto * gen_cmd = app.add_subcommand("generate", "Generate a random instance with a planted optimum");
  gen_cmd->add_option("--n", ga.params.n, "Number of variables")->capture_default_str();
  gen_cmd->add_option("--m", ga.params.m, "Number of equality rows")->capture_default_str();
  gen_cmd->add_option("--k0", ga.params.k0, "Cones at the apex")->capture_default_str();
  gen_cmd->add_option("--ki", ga.params.ki, "Cones with interior solution")->capture_default_str();
  gen_cmd->add_option("--kb", ga.params.kb, "Cones with boundary solution")->capture_default_str();
  gen_cmd->add_option("--density", ga.params.density, "Row density")->capture_default_str();
  gen_cmd->add_option("--seed", ga.params.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--out", ga.out, "Instance file to write")->required();
  gen_cmd->add_option("--planted", ga.planted, "Also write the planted triple here");

  BenchArgs ba;
  auto * bench_cmd = app.add_subcommand("bench", "Run a benchmark suite on generated instances");
  bench_cmd->add_option("--suite", ba.suite, "cold, warm or refine")
    ->capture_default_str()
    ->check(CLI::IsMember({"cold", "warm", "refine"}));
  bench_cmd->add_option("--level", ba.level, "Perturbation level (warm) or start error (refine)")
    ->capture_default_str()
    ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--sizes", ba.sizes, "Size classes n:m:K[,n:m:K...]")->capture_default_str();
  bench_cmd->add_option("--repeats", ba.repeats, "Instances per size class")
    ->capture_default_str()
    ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--density", ba.density, "Row density")->capture_default_str();
  bench_cmd->add_option("--seed", ba.seed, "Base seed")->capture_default_str();
  auto * bench_tol = bench_cmd->add_option("--tol", ba.tol, "KKT error tolerance (refine defaults to 1e-9)")
                       ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--max-iters", ba.max_iters, "Outer iteration limit")->capture_default_str();
  bench_cmd->add_option("--csv", ba.csv, "Write the summary table as CSV here");

  std::string check_file;
  std::string check_triple;
  auto * check_cmd = app.add_subcommand("check", "Print the KKT error of a triple");
  check_cmd->add_option("file", check_file, "Instance file")->required();
  check_cmd->add_option("triple", check_triple, "Triple file (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*solve_cmd) return run_solve(sa);
    if (*gen_cmd) return run_generate(ga);
    if (*bench_cmd) {
      ba.tol_given = bench_tol->count() > 0;
      return run_bench(ba);
    }
    if (*check_cmd) return run_check(check_file, check_triple);
  } catch (const FileError & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const SchemaError & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const CbfSyntaxError & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const UnsupportedFeature & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const ModelError & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const DimensionError & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
