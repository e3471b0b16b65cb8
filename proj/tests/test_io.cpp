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

#include <socpsqp/cbf.hpp>
#include <socpsqp/driver.hpp>
#include <socpsqp/genbench.hpp>
#include <socpsqp/json_io.hpp>

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "sampling.hpp"

namespace {

using namespace socpsqp;

std::string fixture(const std::string & name) { return read_text_file(std::string(SOCPSQP_TEST_DATA) + "/cbf/" + name); }

bool same_bits(const Vector & a, const Vector & b)
{
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

void expect_identical(const ConeProblem & a, const ConeProblem & b)
{
  EXPECT_EQ(a.num_vars, b.num_vars);
  EXPECT_TRUE(same_bits(a.objective, b.objective));
  EXPECT_TRUE(same_bits(a.lower, b.lower));
  EXPECT_TRUE(same_bits(a.upper, b.upper));
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.cones, b.cones);
}

// ---------------------------------------------------------------------------
// JSON

TEST(JsonInstance, GeneratedRoundTripIsLossless)
{
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GenParams gp;
    gp.n = 60;
    gp.m = 20;
    gp.k0 = gp.ki = gp.kb = 3;
    gp.seed = seed;
    const GeneratedInstance inst = generate(gp);
    InstanceFile file{inst.problem, inst.planted, {"extremal"}};
    file.activity.clear();
    for (Activity a : inst.activity) file.activity.emplace_back(to_string(a));
    const std::string text = write_instance(file);
    const InstanceFile back = read_instance(text);
    expect_identical(inst.problem, back.problem);
    ASSERT_TRUE(back.planted.has_value());
    EXPECT_TRUE(same_bits(back.planted->x, inst.planted.x));
    EXPECT_TRUE(same_bits(back.planted->lambda, inst.planted.lambda));
    EXPECT_TRUE(same_bits(back.planted->bound_duals, inst.planted.bound_duals));
    EXPECT_TRUE(same_bits(back.planted->z, inst.planted.z));
    EXPECT_EQ(back.activity, file.activity);
    EXPECT_EQ(write_instance(back), text);
  }
}

TEST(JsonInstance, AwkwardNumbersSurvive)
{
  ConeProblem p(6);
  p.objective << 0.1, -0.0, 5e-324, 1.7976931348623157e308, 1.0 / 3.0, -2.2250738585072014e-308;
  p.lower << -kInf, 0.0, -1e-300, 3.0, -kInf, 0.0;
  p.upper << kInf, 1.0, kInf, 3.0, 1e300, kInf;
  p.rows.push_back({SparseRow{{5, 0.30000000000000004}, {0, -1e-17}}, 2.0 / 3.0, Sense::LE});
  p.rows.push_back({SparseRow{}, 0.0, Sense::EQ});
  p.cones.push_back(ConeSpec{{4, 0, 2}});
  const InstanceFile back = read_instance(write_instance(p));
  expect_identical(p, back.problem);
  EXPECT_TRUE(std::signbit(back.problem.objective[1]));
  EXPECT_FALSE(back.planted.has_value());
}

TEST(JsonTriple, FullPrecision)
{
  sampling::Source src(31);
  ConeProblem p(40);
  for (int i = 0; i < 7; ++i) p.rows.push_back({SparseRow{{i, 1.0}}, 0.0, Sense::LE});
  PrimalDualTriple t;
  t.x = src.gaussian(40) * 1e7;
  t.lambda = src.gaussian(7) * 1e-9;
  t.bound_duals = src.gaussian(40);
  t.z = src.gaussian(40);
  const PrimalDualTriple back = read_triple(write_triple(t), p);
  EXPECT_TRUE(same_bits(back.x, t.x));
  EXPECT_TRUE(same_bits(back.lambda, t.lambda));
  EXPECT_TRUE(same_bits(back.bound_duals, t.bound_duals));
  EXPECT_TRUE(same_bits(back.z, t.z));
}

TEST(JsonInstance, SchemaErrors)
{
  const std::string good = write_instance(ConeProblem(2));
  auto edited = [&](const std::function<void(nlohmann::json &)> & f) {
    nlohmann::json j = nlohmann::json::parse(good);
    f(j);
    return j.dump();
  };
  EXPECT_NO_THROW(read_instance(good));
  EXPECT_THROW(read_instance(edited([](auto & j) { j.erase("cones"); })), SchemaError);
  EXPECT_THROW(read_instance(edited([](auto & j) { j.erase("rows"); })), SchemaError);
  EXPECT_THROW(read_instance(edited([](auto & j) { j["objective"] = {1.0}; })), SchemaError);
  EXPECT_THROW(read_instance(edited([](auto & j) { j["lower"] = {"a", 0}; })), SchemaError);
  EXPECT_THROW(read_instance(edited([](auto & j) { j["num_vars"] = -1; })), SchemaError);
  EXPECT_THROW(read_instance(edited([](auto & j) { j["version"] = 9; })), SchemaError);
  EXPECT_THROW(read_instance(edited([](auto & j) {
                 j["rows"] = {{{"sense", "ge"}, {"rhs", 0}, {"index", {0}}, {"value", {1}}}};
               })),
               SchemaError);
  EXPECT_THROW(read_instance(edited([](auto & j) {
                 j["rows"] = {{{"sense", "le"}, {"rhs", 0}, {"index", {2}}, {"value", {1}}}};
               })),
               SchemaError);
  EXPECT_THROW(read_instance(edited([](auto & j) {
                 j["rows"] = {{{"sense", "le"}, {"rhs", 0}, {"index", {0, 1}}, {"value", {1}}}};
               })),
               SchemaError);
  EXPECT_THROW(read_instance(edited([](auto & j) { j["cones"] = {{0}}; })), SchemaError);
  EXPECT_THROW(read_instance(edited([](auto & j) { j["cones"] = {{0, 1}, {1, 0}}; })), SchemaError);
  EXPECT_THROW(read_instance(edited([](auto & j) { j["lower"] = {1.0, 0.0}; j["upper"] = {0.0, 1.0}; })),
               SchemaError);
  EXPECT_THROW(read_instance("{\"num_vars\": 2,"), SchemaError);
  EXPECT_THROW(read_instance("[]"), SchemaError);
  EXPECT_THROW(read_triple("{\"x\": [1]}", ConeProblem(2)), SchemaError);
}

TEST(TextFiles, MissingFileIsFileError)
{
  EXPECT_THROW(read_text_file("/nonexistent/dir/file.json"), FileError);
  EXPECT_THROW(write_text_file("/nonexistent/dir/file.json", "x"), FileError);
}

TEST(Trace, LineIsJsonObject)
{
  TraceRecord r{3, StepKind::Master, 2, 1, 40, 50.0, -1.5, 1e-4, 0.0, 0.25};
  const auto j = nlohmann::json::parse(trace_line(r));
  EXPECT_EQ(j["iteration"], 3);
  EXPECT_EQ(j["step"], "master");
  EXPECT_EQ(j["inner_iters"], 2);
  EXPECT_EQ(j["rho"], 50.0);
  EXPECT_EQ(j["kkt_error"], 1e-4);
  EXPECT_EQ(trace_line(r).find('\n'), std::string::npos);
}

// ---------------------------------------------------------------------------
// CBF

TEST(CbfParse, MinimalModel)
{
  const CbfModel m = parse_cbf("VER\n1\nOBJSENSE\nMIN\nVAR\n1 1\nF 1\nCON\n1 1\nL+ 1\n"
                               "OBJACOORD\n1\n0 1\nACOORD\n1\n0 0 1\nBCOORD\n1\n0 -1\n");
  EXPECT_EQ(m.num_vars, 1);
  EXPECT_EQ(m.num_cons, 1);
  const CbfConversion c = to_cone_problem(m);
  EXPECT_EQ(c.problem.num_vars, 1);
  ASSERT_EQ(c.problem.num_rows(), 1);
  EXPECT_TRUE(c.problem.cones.empty());
  // x - 1 >= 0 becomes -x <= -1.
  EXPECT_EQ(c.problem.rows[0].coeffs, (SparseRow{{0, -1.0}}));
  EXPECT_EQ(c.problem.rows[0].rhs, -1.0);
  const SolveReport rep = solve(c.problem);
  ASSERT_EQ(rep.status, SolveStatus::Optimal);
  EXPECT_NEAR(c.original_objective(rep.triple.x), 1.0, 1e-9);
}

TEST(CbfParse, QuadraticConeGroup)
{
  const CbfModel m = parse_cbf(fixture("quad_eq.cbf"));
  ASSERT_EQ(m.var_groups.size(), 1u);
  EXPECT_EQ(m.var_groups[0].cone, CbfCone::Quad);
  EXPECT_EQ(m.var_groups[0].size, 3);
  const CbfConversion c = to_cone_problem(m);
  ASSERT_EQ(c.problem.num_cones(), 1);
  EXPECT_EQ(c.problem.cones[0].indices, (std::vector<Index>{0, 1, 2}));
}

TEST(CbfParse, PsdIsUnsupported)
{
  EXPECT_THROW(parse_cbf(fixture("psd.cbf")), UnsupportedFeature);
  EXPECT_THROW(parse_cbf("VER\n3\nVAR\n1 1\nEXP 1\n"), UnsupportedFeature);
}

TEST(CbfParse, SyntaxErrorsCarryLineNumbers)
{
  auto line_of = [](const std::string & text) {
    try {
      parse_cbf(text);
    } catch (const CbfSyntaxError & e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("VER\n1\n\nVAR\n2 1\nF 2\n\nOBJACOORD\n1\n5 1.0\n"), 10);
  EXPECT_EQ(line_of("VER\n1\nVAR\n2 1\nF 3\n"), 5);
  EXPECT_EQ(line_of("VER\n1\nVAR\n2 1\nQ 1\nF 1\n"), 5);
  EXPECT_EQ(line_of("VER\n1\nVAR\n3 1\nQR 2\nF 1\n"), 5);
  EXPECT_EQ(line_of("VER\n1\nVAR\n1 1\nF 1\nFOO\n"), 6);
  EXPECT_EQ(line_of("VAR\n1 1\nF 1\n"), 1);
  EXPECT_EQ(line_of("VER\n1\nVAR\n1 1\nF 1\nOBJACOORD\n2\n0 1\n"), 8);
  EXPECT_EQ(line_of("VER\n1\nVAR\n1 1\nF 1\nOBJACOORD\n1\n0 abc\n"), 8);
  EXPECT_EQ(line_of("VER\n1\nVAR\n1 1\nF 1\nCON\n1 1\nL+ 1\nACOORD\n1\n1 0 1.0\n"), 11);
  EXPECT_EQ(line_of("VER\n7\n"), 2);
  EXPECT_EQ(line_of("VER\n1\nOBJSENSE\nMAXIMIZE\n"), 4);
}

TEST(CbfConvert, RotatedConeMembershipMatchesAlgebra)
{
  sampling::Source src(51);
  int inside = 0, outside = 0;
  for (int t = 0; t < 10000; ++t) {
    const auto size = static_cast<Index>(src.integer(3, 6));
    CbfModel m;
    m.version = 1;
    m.num_vars = size;
    m.var_groups.push_back({CbfCone::RotQuad, size});
    const CbfConversion c = to_cone_problem(m);
    ASSERT_EQ(c.problem.num_cones(), 1);

    // Sample around the boundary 2pq = ||x||^2, including negative p or q.
    Vector v(size);
    v[0] = src.uniform(-0.5, 2.0);
    v[1] = src.uniform(-0.5, 2.0);
    const Vector bar = src.gaussian(size - 2);
    const double edge = std::sqrt(std::max(2.0 * v[0] * v[1], 0.0));
    v.tail(size - 2) = bar / bar.norm() * edge * src.uniform(0.5, 1.5);
    const double gap = 2.0 * v[0] * v[1] - v.tail(size - 2).squaredNorm();
    if (std::abs(gap) < 1e-9) continue;
    const bool member = v[0] >= 0.0 && v[1] >= 0.0 && gap >= 0.0;

    // Fresh variables take the values forced by their equality rows.
    Vector full = Vector::Zero(c.problem.num_vars);
    full.head(size) = v;
    for (const auto & row : c.problem.rows) {
      ASSERT_EQ(row.sense, Sense::EQ);
      const Index fresh = row.coeffs.terms.front().first;
      ASSERT_GE(fresh, size);
      full[fresh] = row.rhs - (row.coeffs.dot(full) - full[fresh]);
    }
    for (const auto & row : c.problem.rows) EXPECT_NEAR(row.coeffs.dot(full), row.rhs, 1e-12);
    const double r = residual(c.problem.block(full, 0));
    EXPECT_EQ(r <= 0.0, member) << "p=" << v[0] << " q=" << v[1] << " gap=" << gap;
    (member ? inside : outside)++;
  }
  EXPECT_GT(inside, 2000);
  EXPECT_GT(outside, 2000);
}

TEST(CbfConvert, RotatedConeExamples)
{
  CbfModel m;
  m.version = 1;
  m.num_vars = 4;
  m.var_groups.push_back({CbfCone::RotQuad, 4});
  const CbfConversion c = to_cone_problem(m);
  auto mapped = [&](double p, double q, double x1, double x2) {
    const double s = std::sqrt(0.5);
    return residual(ConePoint((p + q) * s, (Vector(3) << (p - q) * s, x1, x2).finished()));
  };
  EXPECT_LE(mapped(1, 1, std::sqrt(2.0) * 0.99, 0), 0.0);
  EXPECT_GT(mapped(1, 1, 2, 0), 0.0);
  EXPECT_EQ(c.problem.cones[0].indices, (std::vector<Index>{4, 5, 2, 3}));
}

TEST(CbfConvert, SenseBoundsAndIntegers)
{
  const CbfConversion lp = to_cone_problem(parse_cbf(fixture("lp_eq.cbf")));
  EXPECT_TRUE(lp.problem.cones.empty());
  EXPECT_EQ(lp.problem.lower, Vector::Zero(2));
  EXPECT_EQ(lp.problem.rows[0].sense, Sense::EQ);

  const CbfModel im = parse_cbf(fixture("int_relaxed.cbf"));
  EXPECT_EQ(im.integers, (std::vector<Index>{1, 2}));
  EXPECT_EQ(to_cone_problem(im).relaxed_integers, im.integers);

  const CbfConversion mx = to_cone_problem(parse_cbf(fixture("affine_cone_max.cbf")));
  EXPECT_EQ(mx.sense, -1.0);
  EXPECT_EQ(mx.problem.objective[0], 1.0);

  const CbfConversion off = to_cone_problem(parse_cbf(fixture("rotated.cbf")));
  EXPECT_EQ(off.offset, 5.0);

  const CbfConversion np = to_cone_problem(parse_cbf("VER\n1\nVAR\n3 3\nL- 1\nL= 1\nF 1\n"));
  EXPECT_EQ(np.problem.upper[0], 0.0);
  EXPECT_EQ(np.problem.lower[1], 0.0);
  EXPECT_EQ(np.problem.upper[1], 0.0);
  EXPECT_EQ(np.problem.lower[2], -kInf);
}

struct FixtureCase
{
  const char * file;
  double objective;
};

TEST(CbfFixtures, SolveToReferenceObjective)
{
  const double r2 = std::sqrt(2.0);
  const FixtureCase cases[] = {{"lp_eq.cbf", 1.0},           {"quad_eq.cbf", r2},
                               {"rotated.cbf", 5.0 + r2},    {"int_relaxed.cbf", -r2},
                               {"affine_cone_max.cbf", -r2}, {"rotated_con.cbf", r2}};
  SolverConfig cfg;
  cfg.tol = 1e-5;
  for (const auto & fc : cases) {
    const CbfConversion c = to_cone_problem(parse_cbf(fixture(fc.file)));
    const SolveReport rep = solve(c.problem, std::nullopt, cfg);
    ASSERT_EQ(rep.status, SolveStatus::Optimal) << fc.file;
    EXPECT_LE(rep.kkt_error, 1e-5);
    EXPECT_NEAR(c.original_objective(rep.triple.x), fc.objective, 1e-4) << fc.file;
    const InstanceFile back = read_instance(write_instance(c.problem));
    expect_identical(c.problem, back.problem);
  }
}

TEST(CbfFuzz, DamagedFilesFailCleanly)
{
  sampling::Source src(61);
  int parsed = 0, rejected = 0;
  for (const auto & entry : std::filesystem::directory_iterator(std::string(SOCPSQP_TEST_DATA) + "/cbf")) {
    const std::string text = read_text_file(entry.path().string());
    std::vector<std::string> lines;
    std::stringstream ss(text);
    for (std::string l; std::getline(ss, l);) lines.push_back(l);
    auto attempt = [&](const std::string & damaged) {
      try {
        to_cone_problem(parse_cbf(damaged));
        ++parsed;
      } catch (const Error &) {
        ++rejected;
      }
    };
    for (std::size_t cut = 0; cut <= text.size(); ++cut) attempt(text.substr(0, cut));
    for (int t = 0; t < 300; ++t) {
      std::vector<std::string> shuffled = lines;
      const auto a = static_cast<std::size_t>(src.integer(0, static_cast<int>(lines.size()) - 1));
      const auto b = static_cast<std::size_t>(src.integer(0, static_cast<int>(lines.size()) - 1));
      std::swap(shuffled[a], shuffled[b]);
      if (t % 3 == 0) shuffled.erase(shuffled.begin() + static_cast<std::ptrdiff_t>(a));
      if (t % 5 == 0) shuffled[b] = std::to_string(src.integer(-3, 1000));
      std::string joined;
      for (const auto & l : shuffled) joined += l + "\n";
      attempt(joined);
    }
  }
  EXPECT_GT(rejected, 100);
  EXPECT_GT(parsed, 0);
}

}  // namespace
