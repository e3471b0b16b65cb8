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

// Distance from the point (3, 4) to the line x0 + x1 = 1, written as
//
//   minimize t  subject to  y0 + y1 = -6,  (t, y0, y1) in the Lorentz cone
//
// where y = x - (3, 4). The answer is 6 / sqrt(2) at x = (0, 1).

#include <socpsqp/driver.hpp>

#include <cstdio>

int main()
{
  using namespace socpsqp;

  ConeProblem problem(3);  // t, y0, y1
  problem.objective << 1.0, 0.0, 0.0;
  problem.rows.push_back({SparseRow{{1, 1.0}, {2, 1.0}}, -6.0, Sense::EQ});
  problem.cones.push_back(ConeSpec{{0, 1, 2}});

  const SolveReport report = solve(problem);
  if (report.status != SolveStatus::Optimal) {
    std::printf("solve failed: %s\n", to_string(report.status));
    return 1;
  }
  const Vector & v = report.triple.x;
  std::printf("distance   %.10f\n", v[0]);
  std::printf("closest    (%.10f, %.10f)\n", 3.0 + v[1], 4.0 + v[2]);
  std::printf("iterations %d, kkt_error %.2e\n", report.total_iters, report.kkt_error);
  return 0;
}
