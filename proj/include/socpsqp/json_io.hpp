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

#ifndef SOCPSQP_JSON_IO_HPP_
#define SOCPSQP_JSON_IO_HPP_

#include "socpsqp/driver.hpp"
#include "socpsqp/model.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace socpsqp {

/// File could not be opened, read or written.
class FileError : public Error
{
public:
  using Error::Error;
};

/// Well-formed text whose content does not match the expected layout.
class SchemaError : public Error
{
public:
  using Error::Error;
};

inline constexpr const char * kInstanceFormat = "socpsqp-instance";
inline constexpr int kInstanceVersion = 1;

struct InstanceFile
{
  ConeProblem problem;
  std::optional<PrimalDualTriple> planted;
  /// Per-cone labels carried through from the generator, empty otherwise.
  std::vector<std::string> activity;
};

inline std::string read_text_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw FileError("read failed: " + path);
  return ss.str();
}

inline void write_text_file(const std::string & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw FileError("write failed: " + path);
}

namespace detail {

using nlohmann::json;

inline json vector_json(const Vector & v)
{
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

/// Infinite entries become null.
inline json bound_json(const Vector & v)
{
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) a.push_back(v[i]);
    else a.push_back(nullptr);
  }
  return a;
}

inline const json & field(const json & obj, const char * name, const std::string & where)
{
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  auto it = obj.find(name);
  if (it == obj.end()) throw SchemaError(where + ": missing field '" + name + "'");
  return *it;
}

inline double number_of(const json & v, const std::string & where)
{
  if (!v.is_number()) throw SchemaError(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(where + ": non-finite number");
  return d;
}

inline Index index_of(const json & v, const std::string & where)
{
  if (!v.is_number_integer()) throw SchemaError(where + ": expected an integer");
  return static_cast<Index>(v.get<std::int64_t>());
}

inline Vector vector_of(const json & a, Index expected, const std::string & where)
{
  if (!a.is_array()) throw SchemaError(where + ": expected an array");
  if (expected >= 0 && static_cast<Index>(a.size()) != expected)
    throw SchemaError(where + ": expected " + std::to_string(expected) + " entries, got " + std::to_string(a.size()));
  Vector v(static_cast<Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Index>(i)] = number_of(a[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline Vector bounds_of(const json & a, Index expected, double missing, const std::string & where)
{
  if (!a.is_array()) throw SchemaError(where + ": expected an array");
  if (static_cast<Index>(a.size()) != expected)
    throw SchemaError(where + ": expected " + std::to_string(expected) + " entries, got " + std::to_string(a.size()));
  Vector v(expected);
  for (std::size_t i = 0; i < a.size(); ++i)
    v[static_cast<Index>(i)] = a[i].is_null() ? missing : number_of(a[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline json parse_json(const std::string & text)
{
  try {
    return json::parse(text);
  } catch (const json::parse_error & e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace detail

inline nlohmann::json triple_to_json(const PrimalDualTriple & t)
{
  nlohmann::json j;
  j["x"] = detail::vector_json(t.x);
  j["lambda"] = detail::vector_json(t.lambda);
  j["bound_duals"] = detail::vector_json(t.bound_duals);
  if (t.z.size() > 0) j["z"] = detail::vector_json(t.z);
  return j;
}

/// Missing `z` is left empty; `bound_duals` defaults to zero.
inline PrimalDualTriple triple_from_json(const nlohmann::json & j, Index num_vars, Index num_rows)
{
  PrimalDualTriple t;
  t.x = detail::vector_of(detail::field(j, "x", "triple"), num_vars, "triple.x");
  t.lambda = detail::vector_of(detail::field(j, "lambda", "triple"), num_rows, "triple.lambda");
  if (j.contains("bound_duals")) t.bound_duals = detail::vector_of(j["bound_duals"], num_vars, "triple.bound_duals");
  else t.bound_duals = Vector::Zero(num_vars);
  if (j.contains("z")) t.z = detail::vector_of(j["z"], num_vars, "triple.z");
  return t;
}

inline nlohmann::json instance_to_json(const InstanceFile & inst)
{
  using detail::json;
  const ConeProblem & p = inst.problem;
  json j;
  j["format"] = kInstanceFormat;
  j["version"] = kInstanceVersion;
  j["num_vars"] = p.num_vars;
  j["objective"] = detail::vector_json(p.objective);
  j["lower"] = detail::bound_json(p.lower);
  j["upper"] = detail::bound_json(p.upper);
  json rows = json::array();
  for (const auto & row : p.rows) {
    json idx = json::array();
    json val = json::array();
    for (const auto & [i, v] : row.coeffs.terms) {
      idx.push_back(i);
      val.push_back(v);
    }
    rows.push_back({{"sense", row.sense == Sense::EQ ? "eq" : "le"}, {"rhs", row.rhs}, {"index", idx}, {"value", val}});
  }
  j["rows"] = rows;
  json cones = json::array();
  for (const auto & c : p.cones) cones.push_back(c.indices);
  j["cones"] = cones;
  if (inst.planted) j["planted"] = triple_to_json(*inst.planted);
  if (!inst.activity.empty()) j["activity"] = inst.activity;
  return j;
}

inline InstanceFile instance_from_json(const nlohmann::json & j)
{
  using detail::field;
  if (!j.is_object()) throw SchemaError("instance: top level must be an object");
  if (j.contains("format") && j["format"] != kInstanceFormat) throw SchemaError("instance: unknown format tag");
  if (j.contains("version") && (!j["version"].is_number_integer() || j["version"].get<int>() != kInstanceVersion))
    throw SchemaError("instance: unsupported version");

  InstanceFile inst;
  ConeProblem & p = inst.problem;
  p.num_vars = detail::index_of(field(j, "num_vars", "instance"), "num_vars");
  if (p.num_vars < 0) throw SchemaError("num_vars: must be nonnegative");
  p.objective = detail::vector_of(field(j, "objective", "instance"), p.num_vars, "objective");
  p.lower = detail::bounds_of(field(j, "lower", "instance"), p.num_vars, -kInf, "lower");
  p.upper = detail::bounds_of(field(j, "upper", "instance"), p.num_vars, kInf, "upper");

  const auto & rows = field(j, "rows", "instance");
  if (!rows.is_array()) throw SchemaError("rows: expected an array");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string where = "rows[" + std::to_string(r) + "]";
    const auto & row = rows[r];
    LinearRow lr;
    const auto & sense = field(row, "sense", where);
    if (sense == "le") lr.sense = Sense::LE;
    else if (sense == "eq") lr.sense = Sense::EQ;
    else throw SchemaError(where + ".sense: expected \"le\" or \"eq\"");
    lr.rhs = detail::number_of(field(row, "rhs", where), where + ".rhs");
    const auto & idx = field(row, "index", where);
    const Vector val = detail::vector_of(field(row, "value", where), -1, where + ".value");
    if (!idx.is_array() || static_cast<Index>(idx.size()) != val.size())
      throw SchemaError(where + ": index and value must be arrays of equal length");
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const Index i = detail::index_of(idx[k], where + ".index");
      if (i < 0 || i >= p.num_vars) throw SchemaError(where + ".index: variable out of range");
      lr.coeffs.push(i, val[static_cast<Index>(k)]);
    }
    p.rows.push_back(std::move(lr));
  }

  const auto & cones = field(j, "cones", "instance");
  if (!cones.is_array()) throw SchemaError("cones: expected an array");
  for (std::size_t c = 0; c < cones.size(); ++c) {
    const std::string where = "cones[" + std::to_string(c) + "]";
    if (!cones[c].is_array()) throw SchemaError(where + ": expected an array of indices");
    ConeSpec spec;
    for (const auto & e : cones[c]) spec.indices.push_back(detail::index_of(e, where));
    p.cones.push_back(std::move(spec));
  }

  try {
    p.validate();
  } catch (const ModelError & e) {
    throw SchemaError(std::string("instance: ") + e.what());
  }

  if (j.contains("planted")) inst.planted = triple_from_json(j["planted"], p.num_vars, p.num_rows());
  if (j.contains("activity")) {
    const auto & a = j["activity"];
    if (!a.is_array() || static_cast<Index>(a.size()) != p.num_cones())
      throw SchemaError("activity: expected one label per cone");
    for (const auto & s : a) {
      if (!s.is_string()) throw SchemaError("activity: expected strings");
      inst.activity.push_back(s.get<std::string>());
    }
  }
  return inst;
}

inline std::string write_instance(const InstanceFile & inst) { return instance_to_json(inst).dump() + "\n"; }

inline std::string write_instance(const ConeProblem & problem) { return write_instance(InstanceFile{problem, std::nullopt, {}}); }

inline InstanceFile read_instance(const std::string & text) { return instance_from_json(detail::parse_json(text)); }

inline std::string write_triple(const PrimalDualTriple & t) { return triple_to_json(t).dump() + "\n"; }

inline PrimalDualTriple read_triple(const std::string & text, const ConeProblem & problem)
{
  return triple_from_json(detail::parse_json(text), problem.num_vars, problem.num_rows());
}

/// One line of the trace stream, without the trailing newline.
inline std::string trace_line(const TraceRecord & r)
{
  nlohmann::json j;
  j["iteration"] = r.iteration;
  j["step"] = to_string(r.step);
  j["inner_iters"] = r.inner_iters;
  j["extremal_growth"] = r.extremal_growth;
  j["qp_iters"] = r.qp_iters;
  j["rho"] = r.rho;
  j["phi"] = r.phi;
  j["kkt_error"] = r.kkt_error;
  j["linear_violation"] = r.linear_violation;
  j["min_head"] = r.min_head;
  return j.dump();
}

}  // namespace socpsqp

#endif  // SOCPSQP_JSON_IO_HPP_
