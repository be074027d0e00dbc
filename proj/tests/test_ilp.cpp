// tests/test_ilp.cpp — ILP model container, LP text export, solution parsing.
#include <gtest/gtest.h>

#include "fuseplan/depgraph.hpp"
#include "fuseplan/fusion.hpp"
#include "fuseplan/ilp.hpp"
#include "fuseplan/parse.hpp"
#include "support/util.hpp"

namespace fuseplan {
namespace {

TEST(LinExpr, Algebra) {
  LinExpr e;
  e.add(0, 2).add(1, -1).add(0, 3);
  EXPECT_EQ(e.coeffs.at(0), 5);
  EXPECT_EQ(e.coeffs.at(1), -1);

  // Adding the negation cancels the term entirely.
  e.add(1, 1);
  EXPECT_EQ(e.coeffs.count(1), 0u);

  LinExpr f = LinExpr::term(2, 4);
  f.constant = 7;
  e += f;
  EXPECT_EQ(e.coeffs.at(2), 4);
  EXPECT_EQ(e.constant, 7);
  e -= f;
  EXPECT_EQ(e.coeffs.count(2), 0u);
  EXPECT_EQ(e.constant, 0);

  LinExpr c = 3;  // implicit constant expression
  EXPECT_TRUE(c.coeffs.empty());
  EXPECT_EQ(c.constant, 3);
}

TEST(IlpModel, AddVarValidation) {
  IlpModel m;
  EXPECT_EQ(m.add_var("x", 0, 1), 0);
  EXPECT_EQ(m.add_var("_y2", -3, 3), 1);
  EXPECT_THROW(m.add_var("x", 0, 1), std::invalid_argument);   // duplicate
  EXPECT_THROW(m.add_var("", 0, 1), std::invalid_argument);    // empty
  EXPECT_THROW(m.add_var("2x", 0, 1), std::invalid_argument);  // bad start
  EXPECT_THROW(m.add_var("a-b", 0, 1), std::invalid_argument); // bad char
  EXPECT_THROW(m.add_var("z", 2, 1), std::invalid_argument);   // empty domain
  EXPECT_EQ(m.var("x"), 0);
  EXPECT_TRUE(m.has_var("_y2"));
  EXPECT_FALSE(m.has_var("z"));
  EXPECT_THROW(m.var("z"), std::invalid_argument);
}

TEST(IlpModel, EvalAndFeasibility) {
  IlpModel m;
  int x = m.add_var("x", 0, 4);
  int y = m.add_var("y", -2, 2);
  LinExpr lhs;
  lhs.add(x, 1).add(y, 2);
  m.add_constraint(lhs, Cmp::Le, 5, "capacity");
  m.set_objective(LinExpr::term(x, 1) += LinExpr::term(y, 1));

  std::string why;
  EXPECT_TRUE(m.check_feasible({{"x", 1}, {"y", 2}}, &why)) << why;
  EXPECT_EQ(m.objective_value({{"x", 1}, {"y", 2}}), 3);

  // Missing variable.
  EXPECT_FALSE(m.check_feasible({{"x", 1}}, &why));
  EXPECT_NE(why.find("misses variable 'y'"), std::string::npos);
  // Out-of-bounds value names the variable and its range.
  EXPECT_FALSE(m.check_feasible({{"x", 5}, {"y", 0}}, &why));
  EXPECT_NE(why.find("'x' = 5 outside [0, 4]"), std::string::npos);
  // Violated constraint is reported by name.
  EXPECT_FALSE(m.check_feasible({{"x", 4}, {"y", 2}}, &why));
  EXPECT_NE(why.find("capacity"), std::string::npos);
  // Unknown extra entries are ignored; eval of a missing one throws.
  EXPECT_TRUE(m.check_feasible({{"x", 1}, {"y", 2}, {"zzz", 9}}, &why));
  EXPECT_THROW(m.eval(lhs, {{"x", 1}}), std::invalid_argument);
}

TEST(IlpModel, WriteLpFormat) {
  IlpModel m;
  int x = m.add_var("x", 0, 3);
  int y = m.add_var("y", -1, 1);
  LinExpr c1;
  c1.add(x, 1).add(y, -2);
  c1.constant = 1;  // folded into the right-hand side on export
  m.add_constraint(c1, Cmp::Ge, 0, "named");
  LinExpr c2;
  c2.add(y, 1);
  m.add_constraint(c2, Cmp::Eq, 1);
  LinExpr obj;
  obj.add(x, 1).add(y, -3);
  m.set_objective(obj, true);

  std::string lp = m.write_lp();
  EXPECT_NE(lp.find("Minimize\n obj: x - 3 y\n"), std::string::npos);
  EXPECT_NE(lp.find(" named: x - 2 y >= -1\n"), std::string::npos);
  EXPECT_NE(lp.find(" c1: y = 1\n"), std::string::npos);  // auto-named
  EXPECT_NE(lp.find("Bounds\n 0 <= x <= 3\n -1 <= y <= 1\n"),
            std::string::npos);
  EXPECT_NE(lp.find("General\n x\n y\nEnd\n"), std::string::npos);

  // Maximize and a constant objective term.
  IlpModel m2;
  int z = m2.add_var("z", 0, 2);
  LinExpr o2 = LinExpr::term(z, 2);
  o2.constant = -5;
  m2.set_objective(o2, false);
  std::string lp2 = m2.write_lp();
  EXPECT_NE(lp2.find("Maximize\n obj: 2 z - 5\n"), std::string::npos);
}

TEST(IlpModel, GoldenLpFile) {
  // The manifest-count model for the corpus scatter program, byte-exact.
  Program p = parse_program(testing::corpus_source("scatterExample"));
  DepGraph g = build_graph(p);
  IlpModel m = build_fusion_ilp(g, CostKind::Manifest);
  std::string golden =
      testing::read_file(testing::source_dir() + "/tests/golden/scatter.lp");
  EXPECT_EQ(m.write_lp(), golden);
}

TEST(ParseSolution, AcceptsCommentsAndFloats) {
  auto sol = parse_solution(
      "# a comment\n"
      "\n"
      "x 1\n"
      "y 2.0000003   # trailing comment\n"
      "z -1\n");
  EXPECT_EQ(sol.at("x"), 1);
  EXPECT_EQ(sol.at("y"), 2);
  EXPECT_EQ(sol.at("z"), -1);
  EXPECT_EQ(sol.size(), 3u);
}

TEST(ParseSolution, RejectsBadInput) {
  EXPECT_THROW(parse_solution("x\n"), std::runtime_error);        // no value
  EXPECT_THROW(parse_solution("x 1 2\n"), std::runtime_error);    // trailing
  EXPECT_THROW(parse_solution("x 0.5\n"), std::runtime_error);    // fractional
  EXPECT_THROW(parse_solution("x 1\nx 2\n"), std::runtime_error); // duplicate
  EXPECT_TRUE(parse_solution("").empty());
}

}  // namespace
}  // namespace fuseplan
