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

#ifndef SOCPSQP_MERIT_HPP_
#define SOCPSQP_MERIT_HPP_

/// @file
/// @brief Exact l1-type penalty function and step acceptance.

#include "socpsqp/model.hpp"

#include <limits>
#include <utility>
#include <vector>

namespace socpsqp {

inline constexpr double kDecreaseFraction = 1e-6;
inline constexpr double kPenaltyGrowth = 2.0;
inline constexpr double kInitialPenalty = 50.0;

/// c^T x + rho * sum_j [r_j(x_j)]^+.
inline double penalty_value(const ConeProblem & problem, const Vector & x, double rho)
{
  double violation = 0.0;
  for (Index j = 0; j < problem.num_cones(); ++j) violation += positive_part(residual(problem.block(x, j)));
  return problem.objective.dot(x) + rho * violation;
}

/// Predicted change of the piecewise-linear model: c^T d - rho * sum_{j in D} [r_j(x_j)]^+.
inline double model_decrease(const ConeProblem & problem, const Vector & x, const Vector & d, double rho,
                             const std::vector<Index> & differentiable)
{
  double violation = 0.0;
  for (Index j : differentiable) violation += positive_part(residual(problem.block(x, j)));
  return problem.objective.dot(d) - rho * violation;
}

/// Sufficient decrease with a cancellation allowance of 10 machine epsilons of |phi(x)|.
inline bool accept_trial(double phi_current, double phi_trial, double model, double c_dec = kDecreaseFraction)
{
  const double slack = 10.0 * std::numeric_limits<double>::epsilon() * std::abs(phi_current);
  return phi_trial - phi_current - slack <= c_dec * model;
}

inline bool accept_step(const ConeProblem & problem, const Vector & x, const Vector & d, double rho,
                        const std::vector<Index> & differentiable, double c_dec = kDecreaseFraction)
{
  return accept_trial(penalty_value(problem, x, rho), penalty_value(problem, x + d, rho),
                      model_decrease(problem, x, d, rho, differentiable), c_dec);
}

/// Largest absolute head component of a cone-laid-out dual vector.
inline double max_dual_head(const ConeProblem & problem, const Vector & z)
{
  double m = 0.0;
  for (const auto & cone : problem.cones) m = std::max(m, std::abs(z[cone.indices[0]]));
  return m;
}

inline double rho_new(double rho_old, double head_norm, double c_inc = kPenaltyGrowth)
{
  return rho_old > head_norm ? rho_old : c_inc * head_norm;
}

inline double rho_new(const ConeProblem & problem, double rho_old, const Vector & z, double c_inc = kPenaltyGrowth)
{
  return rho_new(rho_old, max_dual_head(problem, z), c_inc);
}

class PenaltyState
{
public:
  explicit PenaltyState(double rho = kInitialPenalty) : rho_(rho)
  {
    if (!(rho > 0.0)) throw ModelError("penalty parameter must be positive");
  }

  [[nodiscard]] double rho() const { return rho_; }
  [[nodiscard]] const std::vector<std::pair<int, double>> & history() const { return history_; }

  /// Stores the value tied to the accepted step of `iteration`.
  void commit(int iteration, double rho)
  {
    if (rho < rho_) throw Error("penalty parameter must not decrease");
    rho_ = rho;
    history_.emplace_back(iteration, rho);
  }

private:
  double rho_;
  std::vector<std::pair<int, double>> history_;
};

}  // namespace socpsqp

#endif  // SOCPSQP_MERIT_HPP_
