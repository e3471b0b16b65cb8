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

// Reads a conic benchmark (.cbf) file, solves the continuous relaxation and
// writes the instance in the JSON format next to it.
//
//   cbf_solve model.cbf [model.json]

#include <socpsqp/cbf.hpp>
#include <socpsqp/driver.hpp>
#include <socpsqp/json_io.hpp>

#include <cstdio>

int main(int argc, char ** argv)
{
  using namespace socpsqp;
  if (argc < 2 || argc > 3) {
    std::fprintf(stderr, "usage: %s model.cbf [model.json]\n", argv[0]);
    return 64;
  }
  try {
    const CbfConversion conv = to_cone_problem(parse_cbf(read_text_file(argv[1])));
    if (!conv.relaxed_integers.empty())
      std::printf("note: %zu integer markers relaxed\n", conv.relaxed_integers.size());
    std::printf("%ld variables, %ld rows, %ld cones\n", long(conv.problem.num_vars), long(conv.problem.num_rows()),
                long(conv.problem.num_cones()));

    SolverConfig cfg;
    cfg.tol = 1e-5;
    const SolveReport report = solve(conv.problem, std::nullopt, cfg);
    std::printf("status     %s\n", to_string(report.status));
    std::printf("objective  %.10f\n", conv.original_objective(report.triple.x));
    if (argc == 3) write_text_file(argv[2], write_instance(conv.problem));
    return report.status == SolveStatus::Optimal ? 0 : 1;
  } catch (const Error & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 66;
  }
}
