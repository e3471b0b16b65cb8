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

#ifndef SOCPSQP_CBF_HPP_
#define SOCPSQP_CBF_HPP_

#include "socpsqp/model.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace socpsqp {

/// Malformed CBF text. `line()` is 1-based, 0 when the error has no location.
class CbfSyntaxError : public Error
{
public:
  CbfSyntaxError(int line, const std::string & msg)
  : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line)
  {}

  [[nodiscard]] int line() const { return line_; }

private:
  int line_;
};

/// Valid CBF content outside the supported subset (PSD, exponential, power).
class UnsupportedFeature : public Error
{
public:
  using Error::Error;
};

enum class CbfCone : std::uint8_t { Free, NonNeg, NonPos, Zero, Quad, RotQuad };

inline const char * to_string(CbfCone c)
{
  switch (c) {
    case CbfCone::Free: return "F";
    case CbfCone::NonNeg: return "L+";
    case CbfCone::NonPos: return "L-";
    case CbfCone::Zero: return "L=";
    case CbfCone::Quad: return "Q";
    case CbfCone::RotQuad: return "QR";
  }
  return "?";
}

struct CbfGroup
{
  CbfCone cone = CbfCone::Free;
  Index size = 0;
};

struct CbfModel
{
  int version = 0;
  bool maximize = false;
  Index num_vars = 0;
  std::vector<CbfGroup> var_groups;
  Index num_cons = 0;
  std::vector<CbfGroup> con_groups;
  std::vector<Index> integers;
  std::vector<std::pair<Index, double>> obj_coeffs;
  double obj_constant = 0.0;
  std::vector<std::tuple<Index, Index, double>> matrix;
  std::vector<std::pair<Index, double>> rhs;
};

namespace detail {

class CbfReader
{
public:
  explicit CbfReader(std::string_view text)
  {
    int no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(pos, end - pos);
      ++no;
      pos = end + 1;
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
      while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
      if (line.empty() || line.front() == '#') {
        if (end == text.size()) break;
        continue;
      }
      lines_.emplace_back(no, line);
      if (end == text.size()) break;
    }
  }

  [[nodiscard]] bool done() const { return next_ >= lines_.size(); }
  [[nodiscard]] int last_line() const { return lines_.empty() ? 0 : lines_.back().first; }

  std::pair<int, std::string_view> take(const char * what)
  {
    if (done()) throw CbfSyntaxError(last_line(), std::string("unexpected end of file, expected ") + what);
    return lines_[next_++];
  }

  /// Splits the next line into exactly `count` whitespace separated fields.
  std::pair<int, std::vector<std::string_view>> fields(std::size_t count, const char * what)
  {
    auto [no, line] = take(what);
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
      if (j > i) out.push_back(line.substr(i, j - i));
      i = j;
    }
    if (out.size() != count)
      throw CbfSyntaxError(no, std::string("expected ") + std::to_string(count) + " fields for " + what + ", got " +
                                 std::to_string(out.size()));
    return {no, std::move(out)};
  }

private:
  std::vector<std::pair<int, std::string_view>> lines_;
  std::size_t next_ = 0;
};

inline Index parse_index(std::string_view s, int line, const char * what)
{
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw CbfSyntaxError(line, std::string("bad integer for ") + what);
  if (v < 0) throw CbfSyntaxError(line, std::string("negative value for ") + what);
  return static_cast<Index>(v);
}

inline double parse_real(std::string_view s, int line, const char * what)
{
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    throw CbfSyntaxError(line, std::string("bad number for ") + what);
  return v;
}

inline CbfCone parse_cone(std::string_view s, int line)
{
  if (s == "F") return CbfCone::Free;
  if (s == "L+") return CbfCone::NonNeg;
  if (s == "L-") return CbfCone::NonPos;
  if (s == "L=") return CbfCone::Zero;
  if (s == "Q") return CbfCone::Quad;
  if (s == "QR") return CbfCone::RotQuad;
  if (s == "EXP" || s == "EXP*" || s.starts_with("@"))
    throw UnsupportedFeature("line " + std::to_string(line) + ": cone type " + std::string(s) + " is not supported");
  throw CbfSyntaxError(line, "unknown cone type " + std::string(s));
}

inline std::vector<CbfGroup> parse_groups(CbfReader & in, Index & total, const char * what)
{
  auto [no, head] = in.fields(2, what);
  total = parse_index(head[0], no, what);
  const Index count = parse_index(head[1], no, what);
  std::vector<CbfGroup> groups;
  Index sum = 0;
  for (Index k = 0; k < count; ++k) {
    auto [gl, g] = in.fields(2, what);
    CbfGroup grp{parse_cone(g[0], gl), parse_index(g[1], gl, what)};
    if (grp.size < 1) throw CbfSyntaxError(gl, "cone group size must be at least 1");
    if (grp.cone == CbfCone::Quad && grp.size < 2) throw CbfSyntaxError(gl, "Q cone needs size at least 2");
    if (grp.cone == CbfCone::RotQuad && grp.size < 3) throw CbfSyntaxError(gl, "QR cone needs size at least 3");
    sum += grp.size;
    if (sum > total) throw CbfSyntaxError(gl, std::string("cone sizes exceed the declared ") + what + " count");
    groups.push_back(grp);
  }
  if (sum != total) throw CbfSyntaxError(no, std::string("cone sizes do not add up to the declared ") + what + " count");
  return groups;
}

}  // namespace detail

/// Reads the supported CBF subset. Sections may appear in any order after VER,
/// provided VAR precedes INT/OBJACOORD/ACOORD and CON precedes ACOORD/BCOORD.
inline CbfModel parse_cbf(std::string_view text)
{
  using detail::parse_index;
  using detail::parse_real;
  detail::CbfReader in(text);
  CbfModel m;
  bool have_ver = false, have_var = false, have_con = false;
  std::map<std::string, int> seen;

  while (!in.done()) {
    auto [no, kw] = in.take("keyword");
    const std::string key(kw);
    if (!have_ver && key != "VER") throw CbfSyntaxError(no, "file must start with VER");
    if (seen[key]++ > 0) throw CbfSyntaxError(no, "duplicate section " + key);

    if (key == "VER") {
      auto [vl, v] = in.fields(1, "VER");
      m.version = static_cast<int>(parse_index(v[0], vl, "VER"));
      if (m.version < 1 || m.version > 3) throw CbfSyntaxError(vl, "unsupported version " + std::to_string(m.version));
      have_ver = true;
    } else if (key == "OBJSENSE") {
      auto [sl, s] = in.fields(1, "OBJSENSE");
      if (s[0] == "MIN") m.maximize = false;
      else if (s[0] == "MAX") m.maximize = true;
      else throw CbfSyntaxError(sl, "OBJSENSE must be MIN or MAX");
    } else if (key == "VAR") {
      m.var_groups = detail::parse_groups(in, m.num_vars, "VAR");
      have_var = true;
    } else if (key == "CON") {
      m.con_groups = detail::parse_groups(in, m.num_cons, "CON");
      have_con = true;
    } else if (key == "INT") {
      if (!have_var) throw CbfSyntaxError(no, "INT must follow VAR");
      auto [cl, c] = in.fields(1, "INT");
      const Index count = parse_index(c[0], cl, "INT");
      for (Index k = 0; k < count; ++k) {
        auto [il, f] = in.fields(1, "INT");
        const Index j = parse_index(f[0], il, "INT");
        if (j >= m.num_vars) throw CbfSyntaxError(il, "integer marker out of range");
        m.integers.push_back(j);
      }
    } else if (key == "OBJACOORD") {
      if (!have_var) throw CbfSyntaxError(no, "OBJACOORD must follow VAR");
      auto [cl, c] = in.fields(1, "OBJACOORD");
      const Index count = parse_index(c[0], cl, "OBJACOORD");
      for (Index k = 0; k < count; ++k) {
        auto [el, f] = in.fields(2, "OBJACOORD");
        const Index j = parse_index(f[0], el, "OBJACOORD");
        if (j >= m.num_vars) throw CbfSyntaxError(el, "objective index out of range");
        m.obj_coeffs.emplace_back(j, parse_real(f[1], el, "OBJACOORD"));
      }
    } else if (key == "OBJBCOORD") {
      auto [el, f] = in.fields(1, "OBJBCOORD");
      m.obj_constant = parse_real(f[0], el, "OBJBCOORD");
    } else if (key == "ACOORD") {
      if (!have_var || !have_con) throw CbfSyntaxError(no, "ACOORD must follow VAR and CON");
      auto [cl, c] = in.fields(1, "ACOORD");
      const Index count = parse_index(c[0], cl, "ACOORD");
      for (Index k = 0; k < count; ++k) {
        auto [el, f] = in.fields(3, "ACOORD");
        const Index i = parse_index(f[0], el, "ACOORD");
        const Index j = parse_index(f[1], el, "ACOORD");
        if (i >= m.num_cons) throw CbfSyntaxError(el, "constraint index out of range");
        if (j >= m.num_vars) throw CbfSyntaxError(el, "variable index out of range");
        m.matrix.emplace_back(i, j, parse_real(f[2], el, "ACOORD"));
      }
    } else if (key == "BCOORD") {
      if (!have_con) throw CbfSyntaxError(no, "BCOORD must follow CON");
      auto [cl, c] = in.fields(1, "BCOORD");
      const Index count = parse_index(c[0], cl, "BCOORD");
      for (Index k = 0; k < count; ++k) {
        auto [el, f] = in.fields(2, "BCOORD");
        const Index i = parse_index(f[0], el, "BCOORD");
        if (i >= m.num_cons) throw CbfSyntaxError(el, "constraint index out of range");
        m.rhs.emplace_back(i, parse_real(f[1], el, "BCOORD"));
      }
    } else if (key == "PSDVAR" || key == "PSDCON" || key == "OBJFCOORD" || key == "FCOORD" || key == "HCOORD" ||
               key == "DCOORD" || key == "POWCONES" || key == "POW*CONES" || key == "CHANGE") {
      throw UnsupportedFeature("line " + std::to_string(no) + ": section " + key + " is not supported");
    } else {
      throw CbfSyntaxError(no, "unknown keyword " + key);
    }
  }
  if (!have_ver) throw CbfSyntaxError(0, "missing VER section");
  if (!have_var) throw CbfSyntaxError(0, "missing VAR section");
  return m;
}

/**
 * Minimisation form of a CBF model. The first `original_vars` variables are
 * the model's own; the original objective value is
 * `sense * (problem.objective^T x + offset)`.
 */
struct CbfConversion
{
  ConeProblem problem;
  double offset = 0.0;
  double sense = 1.0;
  Index original_vars = 0;
  std::vector<Index> relaxed_integers;

  [[nodiscard]] double original_objective(const Vector & x) const { return sense * (problem.objective.dot(x) + offset); }
};

namespace detail {

class ProblemBuilder
{
public:
  explicit ProblemBuilder(Index n) : objective_(static_cast<std::size_t>(n), 0.0), lower_(n, -kInf), upper_(n, kInf) {}

  Index add_var()
  {
    objective_.push_back(0.0);
    lower_.push_back(-kInf);
    upper_.push_back(kInf);
    return static_cast<Index>(objective_.size()) - 1;
  }

  void set_lower(Index j, double v) { lower_[static_cast<std::size_t>(j)] = v; }
  void set_upper(Index j, double v) { upper_[static_cast<std::size_t>(j)] = v; }
  void set_cost(Index j, double v) { objective_[static_cast<std::size_t>(j)] += v; }
  void add_row(LinearRow row) { rows_.push_back(std::move(row)); }

  /// Places a (possibly rotated) cone on the given variables.
  void add_cone(CbfCone kind, const std::vector<Index> & vars)
  {
    if (kind == CbfCone::Quad) {
      cones_.push_back(ConeSpec{vars});
      return;
    }
    // u0 = (p+q)/sqrt2, u1 = (p-q)/sqrt2, then (u0, u1, rest) in the standard cone.
    const double s = 1.0 / std::sqrt(2.0);
    const Index u0 = add_var();
    const Index u1 = add_var();
    add_row(LinearRow{SparseRow{{u0, 1.0}, {vars[0], -s}, {vars[1], -s}}, 0.0, Sense::EQ});
    add_row(LinearRow{SparseRow{{u1, 1.0}, {vars[0], -s}, {vars[1], s}}, 0.0, Sense::EQ});
    ConeSpec spec{{u0, u1}};
    for (std::size_t k = 2; k < vars.size(); ++k) spec.indices.push_back(vars[k]);
    cones_.push_back(std::move(spec));
  }

  ConeProblem finish()
  {
    const Index n = static_cast<Index>(objective_.size());
    ConeProblem p(n);
    for (Index j = 0; j < n; ++j) {
      p.objective[j] = objective_[static_cast<std::size_t>(j)];
      p.lower[j] = lower_[static_cast<std::size_t>(j)];
      p.upper[j] = upper_[static_cast<std::size_t>(j)];
    }
    p.rows = std::move(rows_);
    p.cones = std::move(cones_);
    return p;
  }

private:
  std::vector<double> objective_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<LinearRow> rows_;
  std::vector<ConeSpec> cones_;
};

}  // namespace detail

/// Integer markers are dropped (continuous relaxation).
inline CbfConversion to_cone_problem(const CbfModel & model)
{
  CbfConversion out;
  out.sense = model.maximize ? -1.0 : 1.0;
  out.offset = out.sense * model.obj_constant;
  out.original_vars = model.num_vars;
  out.relaxed_integers = model.integers;

  detail::ProblemBuilder b(model.num_vars);
  for (const auto & [j, v] : model.obj_coeffs) b.set_cost(j, out.sense * v);

  Index first = 0;
  for (const auto & g : model.var_groups) {
    std::vector<Index> vars;
    for (Index k = 0; k < g.size; ++k) vars.push_back(first + k);
    for (Index j : vars) {
      if (g.cone == CbfCone::NonNeg || g.cone == CbfCone::Zero) b.set_lower(j, 0.0);
      if (g.cone == CbfCone::NonPos || g.cone == CbfCone::Zero) b.set_upper(j, 0.0);
    }
    if (g.cone == CbfCone::Quad || g.cone == CbfCone::RotQuad) b.add_cone(g.cone, vars);
    first += g.size;
  }

  // Row expressions a_i^T x + b_i, duplicates summed.
  std::vector<std::map<Index, double>> coeffs(static_cast<std::size_t>(model.num_cons));
  std::vector<double> rhs(static_cast<std::size_t>(model.num_cons), 0.0);
  for (const auto & [i, j, v] : model.matrix) coeffs[static_cast<std::size_t>(i)][j] += v;
  for (const auto & [i, v] : model.rhs) rhs[static_cast<std::size_t>(i)] += v;

  Index row = 0;
  for (const auto & g : model.con_groups) {
    std::vector<Index> slack;
    for (Index k = 0; k < g.size; ++k, ++row) {
      const auto & a = coeffs[static_cast<std::size_t>(row)];
      const double bi = rhs[static_cast<std::size_t>(row)];
      LinearRow lr;
      switch (g.cone) {
        case CbfCone::Free: continue;
        case CbfCone::NonNeg:  // a x + b >= 0
          for (const auto & [j, v] : a) lr.coeffs.push(j, -v);
          lr.rhs = bi;
          lr.sense = Sense::LE;
          break;
        case CbfCone::NonPos:
          for (const auto & [j, v] : a) lr.coeffs.push(j, v);
          lr.rhs = -bi;
          lr.sense = Sense::LE;
          break;
        case CbfCone::Zero:
          for (const auto & [j, v] : a) lr.coeffs.push(j, v);
          lr.rhs = -bi;
          lr.sense = Sense::EQ;
          break;
        case CbfCone::Quad:
        case CbfCone::RotQuad: {
          const Index w = b.add_var();  // w = a x + b
          lr.coeffs.push(w, 1.0);
          for (const auto & [j, v] : a) lr.coeffs.push(j, -v);
          lr.rhs = bi;
          lr.sense = Sense::EQ;
          slack.push_back(w);
          break;
        }
      }
      b.add_row(std::move(lr));
    }
    if (!slack.empty()) b.add_cone(g.cone, slack);
  }
  out.problem = b.finish();
  out.problem.validate();
  return out;
}

}  // namespace socpsqp

#endif  // SOCPSQP_CBF_HPP_
