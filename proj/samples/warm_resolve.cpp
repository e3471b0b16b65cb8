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

// Generates a random instance with a known optimum, solves it from scratch,
// then nudges the cost vector and re-solves from the previous solution.

#include <socpsqp/driver.hpp>
#include <socpsqp/genbench.hpp>

#include <cstdio>

int main()
{
  using namespace socpsqp;

  GenParams params;  // 200 variables, 60 rows, 10 cones of each activity type
  params.seed = 42;
  const GeneratedInstance inst = generate(params);
  std::printf("planted optimum has kkt_error %.2e\n", kkt_error(inst.problem, inst.planted));

  const SolveReport cold = solve(inst.problem);
  std::printf("cold   %-10s %2d iterations (%d fast), objective %.10f\n", to_string(cold.status), cold.total_iters,
              cold.sqp_step_iters, inst.problem.objective.dot(cold.triple.x));
  std::printf("       planted objective          %.10f\n", inst.problem.objective.dot(inst.planted.x));

  const ConeProblem nudged = perturb_objective(inst.problem, 1e-3, 7);
  const SolveReport warm = solve(nudged, warm_start_from(cold, nudged));
  std::printf("warm   %-10s %2d iterations (%d fast), objective %.10f\n", to_string(warm.status), warm.total_iters,
              warm.sqp_step_iters, nudged.objective.dot(warm.triple.x));
  return cold.status == SolveStatus::Optimal && warm.status == SolveStatus::Optimal ? 0 : 1;
}
