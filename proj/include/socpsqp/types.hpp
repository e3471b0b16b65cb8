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

#ifndef SOCPSQP_TYPES_HPP_
#define SOCPSQP_TYPES_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace socpsqp {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Row sense: `LE` means a^T x <= b, `EQ` means a^T x = b.
enum class Sense : std::uint8_t { LE, EQ };

/// Sparse coefficient list. Indices need not be sorted but must be unique.
struct SparseRow
{
  std::vector<std::pair<Index, double>> terms;

  SparseRow() = default;
  SparseRow(std::initializer_list<std::pair<Index, double>> init) : terms(init) {}

  void push(Index i, double v) { terms.emplace_back(i, v); }

  [[nodiscard]] double dot(const Vector & x) const
  {
    double s = 0.0;
    for (const auto & [i, v] : terms) s += v * x[i];
    return s;
  }

  /// y += alpha * a
  void axpy(double alpha, Vector & y) const
  {
    for (const auto & [i, v] : terms) y[i] += alpha * v;
  }

  [[nodiscard]] double norm_inf() const
  {
    double m = 0.0;
    for (const auto & t : terms) m = std::max(m, std::abs(t.second));
    return m;
  }

  bool operator==(const SparseRow &) const = default;
};

/// Base class of all errors raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error
{
public:
  using Error::Error;
};

class ModelError : public Error
{
public:
  using Error::Error;
};

inline double positive_part(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace socpsqp

#endif  // SOCPSQP_TYPES_HPP_
