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

#include <socpsqp/qp_core.hpp>

#include "qp_oracle.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

using socpsqp::ActiveSet;
using socpsqp::Index;
using socpsqp::Matrix;
using socpsqp::QpProblem;
using socpsqp::QpStatus;
using socpsqp::Sense;
using socpsqp::SparseRow;
using socpsqp::Vector;

TEST(QpCore, BoundActiveAtZero)
{
  QpProblem qp(1);
  qp.hessian = Matrix::Identity(1, 1);
  qp.linear << 1.0;
  qp.lower << 0.0;
  const auto sol = socpsqp::solve_qp(qp);
  ASSERT_EQ(sol.status, QpStatus::Optimal);
  EXPECT_NEAR(sol.d[0], 0.0, 1e-12);
  EXPECT_NEAR(sol.bound_duals[0], 1.0, 1e-12);
  EXPECT_LE(socpsqp::verify_qp_kkt(qp, sol), 1e-9);
}

TEST(QpCore, UnconstrainedIdentity)
{
  QpProblem qp(2);
  qp.hessian = Matrix::Identity(2, 2);
  qp.linear << 1.0, -2.0;
  const auto sol = socpsqp::solve_qp(qp);
  ASSERT_EQ(sol.status, QpStatus::Optimal);
  EXPECT_NEAR(sol.d[0], -1.0, 1e-12);
  EXPECT_NEAR(sol.d[1], 2.0, 1e-12);
}

TEST(QpCore, ConflictingRowsGiveFarkas)
{
  QpProblem qp(1);
  qp.rows.push_back({SparseRow{{0, 1.0}}, -1.0, Sense::LE});
  qp.rows.push_back({SparseRow{{0, -1.0}}, 0.0, Sense::LE});
  const auto sol = socpsqp::solve_qp(qp);
  ASSERT_EQ(sol.status, QpStatus::Infeasible);
  ASSERT_TRUE(sol.farkas.has_value());
  EXPECT_TRUE(socpsqp::verify_farkas(qp, *sol.farkas));
  const auto & y = sol.farkas->rows;
  EXPECT_NEAR(y[0] / y.maxCoeff(), 1.0, 1e-12);
  EXPECT_NEAR(y[1] / y.maxCoeff(), 1.0, 1e-12);
}

TEST(QpCore, InconsistentEqualities)
{
  QpProblem qp(2);
  qp.rows.push_back({SparseRow{{0, 1.0}, {1, 1.0}}, 1.0, Sense::EQ});
  qp.rows.push_back({SparseRow{{0, 2.0}, {1, 2.0}}, 3.0, Sense::EQ});
  const auto sol = socpsqp::solve_qp(qp);
  ASSERT_EQ(sol.status, QpStatus::Infeasible);
  EXPECT_TRUE(socpsqp::verify_farkas(qp, *sol.farkas));
}

TEST(QpCore, ZeroProblemResidual)
{
  QpProblem qp(3);
  socpsqp::QpSolution sol;
  sol.d = Vector::Zero(3);
  sol.row_duals = Vector::Zero(0);
  sol.bound_duals = Vector::Zero(3);
  EXPECT_EQ(socpsqp::verify_qp_kkt(qp, sol), 0.0);
}

TEST(QpCore, PerturbedSolutionResidual)
{
  QpProblem qp(2);
  qp.hessian = Matrix::Identity(2, 2);
  qp.linear << 1.0, -2.0;
  auto sol = socpsqp::solve_qp(qp);
  sol.d[0] += 1e-3;
  EXPECT_GE(socpsqp::verify_qp_kkt(qp, sol), 1e-4);
}

TEST(QpCore, LinearProgramUnboundedFails)
{
  QpProblem qp(2);
  qp.linear << -1.0, 0.0;
  qp.lower << 0.0, 0.0;
  const auto sol = socpsqp::solve_qp(qp);
  EXPECT_EQ(sol.status, QpStatus::Failed);
}

TEST(QpCore, NonSymmetricHessianRejected)
{
  QpProblem qp(2);
  qp.hessian = Matrix::Identity(2, 2);
  qp.hessian(0, 1) = 1.0;
  EXPECT_THROW(socpsqp::solve_qp(qp), socpsqp::ModelError);
}

TEST(QpCore, WarmStartReproducesSolution)
{
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Index n = 12;
  QpProblem qp(n);
  Matrix b(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) b(i, j) = u(rng);
  qp.hessian = b.transpose() * b;
  for (Index i = 0; i < n; ++i) qp.linear[i] = 3.0 * u(rng);
  for (int r = 0; r < 8; ++r) {
    SparseRow row;
    for (Index k = 0; k < n; ++k) row.push(k, u(rng));
    qp.rows.push_back({row, 0.5 + u(rng) * 0.25, Sense::LE});
  }
  qp.lower.setConstant(-1.0);
  qp.upper.setConstant(1.0);
  const auto cold = socpsqp::solve_qp(qp);
  ASSERT_EQ(cold.status, QpStatus::Optimal);
  const auto warm = socpsqp::solve_qp(qp, cold.active);
  ASSERT_EQ(warm.status, QpStatus::Optimal);
  EXPECT_LE((warm.d - cold.d).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LE(warm.iterations, cold.iterations);
}

TEST(QpCoreProperty, BruteForceEquivalence)
{
  std::mt19937_64 rng(20261016);
  int compared = 0;
  int infeasible = 0;
  for (int trial = 0; trial < 500; ++trial) {
    auto [qp, planted] = oracle::random_qp(rng, trial % 2);
    const auto sol = socpsqp::solve_qp(qp);
    const auto best = oracle::brute_force_optimum(qp);
    ASSERT_NE(sol.status, QpStatus::Failed) << "trial " << trial;
    if (sol.status == QpStatus::Infeasible) {
      ++infeasible;
      ASSERT_TRUE(sol.farkas.has_value());
      EXPECT_TRUE(socpsqp::verify_farkas(qp, *sol.farkas)) << "trial " << trial;
      EXPECT_FALSE(best.has_value()) << "trial " << trial;
      continue;
    }
    EXPECT_FALSE(planted) << "trial " << trial;
    EXPECT_LE(socpsqp::verify_qp_kkt(qp, sol), 1e-9) << "trial " << trial;
    ASSERT_TRUE(best.has_value()) << "trial " << trial;
    EXPECT_NEAR(oracle::objective(qp, sol.d), *best, 1e-7) << "trial " << trial;
    ++compared;
  }
  EXPECT_GT(compared, 300);
  EXPECT_GT(infeasible, 20);
}

}  // namespace
