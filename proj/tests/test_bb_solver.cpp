// tests/test_bb_solver.cpp — branch-and-bound solver: exactness, determinism,
// budgets, randomized comparison against full enumeration.
#include <gtest/gtest.h>

#include <random>

#include "fuseplan/bb_solver.hpp"
#include "support/generator.hpp"

namespace fuseplan {
namespace {

TEST(BbSolver, SmallMinimize) {
  // min x + 2y  s.t.  x + y >= 3,  x in [0,4], y in [0,4]  ->  x=3, y=0.
  IlpModel m;
  int x = m.add_var("x", 0, 4);
  int y = m.add_var("y", 0, 4);
  LinExpr c;
  c.add(x, 1).add(y, 1);
  m.add_constraint(c, Cmp::Ge, 3);
  m.set_objective(LinExpr::term(x, 1) += LinExpr::term(y, 2));

  SolveResult r = solve(m);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_EQ(r.objective, 3);
  EXPECT_EQ(r.assignment.at("x"), 3);
  EXPECT_EQ(r.assignment.at("y"), 0);
  EXPECT_GT(r.nodes_explored, 0);
}

TEST(BbSolver, SmallMaximize) {
  // max 3x - y  s.t.  x - y <= 1,  x in [0,5], y in [0,5]  ->  x=5, y=4.
  IlpModel m;
  int x = m.add_var("x", 0, 5);
  int y = m.add_var("y", 0, 5);
  LinExpr c;
  c.add(x, 1).add(y, -1);
  m.add_constraint(c, Cmp::Le, 1);
  m.set_objective(LinExpr::term(x, 3) += LinExpr::term(y, -1), false);

  SolveResult r = solve(m);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_EQ(r.objective, 11);
  EXPECT_EQ(r.assignment.at("x"), 5);
  EXPECT_EQ(r.assignment.at("y"), 4);
}

TEST(BbSolver, EqualityAndNegativeDomains) {
  // min x + y  s.t.  2x + y = -1,  x,y in [-3,3]  ->  (x=-2,y=3):1, (x=-1,y=1):0,
  // (x=0,y=-1):-1, (x=1,y=-3):-2  ->  optimum -2.
  IlpModel m;
  int x = m.add_var("x", -3, 3);
  int y = m.add_var("y", -3, 3);
  LinExpr c;
  c.add(x, 2).add(y, 1);
  m.add_constraint(c, Cmp::Eq, -1);
  m.set_objective(LinExpr::term(x, 1) += LinExpr::term(y, 1));

  SolveResult r = solve(m);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_EQ(r.objective, -2);
  EXPECT_EQ(r.assignment.at("x"), 1);
  EXPECT_EQ(r.assignment.at("y"), -3);
}

TEST(BbSolver, InfeasibleModel) {
  IlpModel m;
  int x = m.add_var("x", 0, 2);
  m.add_constraint(LinExpr::term(x, 1), Cmp::Ge, 5);
  m.set_objective(LinExpr::term(x, 1));
  SolveResult r = solve(m);
  EXPECT_EQ(r.status, SolveStatus::Infeasible);
  EXPECT_FALSE(r.has_incumbent);
}

TEST(BbSolver, EmptyModelAndConstantObjective) {
  IlpModel m;  // no variables, no constraints
  m.set_objective(LinExpr(7));
  SolveResult r = solve(m);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_EQ(r.objective, 7);
  EXPECT_TRUE(r.assignment.empty());
}

TEST(BbSolver, TieBreaksDeterministically) {
  // A zero objective makes every feasible point optimal; the solver must
  // still return one deterministic assignment (all at the lower bounds).
  IlpModel m;
  m.add_var("a", -1, 2);
  m.add_var("b", 0, 3);
  m.set_objective(LinExpr());
  SolveResult r1 = solve(m);
  SolveResult r2 = solve(m);
  ASSERT_EQ(r1.status, SolveStatus::Optimal);
  EXPECT_EQ(r1.assignment.at("a"), -1);
  EXPECT_EQ(r1.assignment.at("b"), 0);
  EXPECT_EQ(r1.assignment, r2.assignment);
  EXPECT_EQ(r1.nodes_explored, r2.nodes_explored);
}

TEST(BbSolver, StopAtFirstAndFeasibleHelper) {
  IlpModel m;
  int x = m.add_var("x", 0, 6);
  m.add_constraint(LinExpr::term(x, 1), Cmp::Ge, 2);
  m.set_objective(LinExpr::term(x, 1));

  SolveOptions first;
  first.stop_at_first = true;
  SolveResult r = solve(m, first);
  EXPECT_TRUE(r.has_incumbent);  // some feasible point, not necessarily best

  SolveResult f = feasible(m);
  ASSERT_TRUE(f.has_incumbent);
  std::string why;
  EXPECT_TRUE(m.check_feasible(f.assignment, &why)) << why;
}

TEST(BbSolver, NodeBudgetAborts) {
  // Two sum constraints that conflict only once variables are pinned down:
  // interval pruning cannot refute the root, so the search must branch, and
  // a 5-node budget runs out before the proof completes.
  IlpModel m;
  LinExpr sum;
  for (int i = 0; i < 10; ++i)
    sum.add(m.add_var("v" + std::to_string(i), 0, 5), 1);
  m.add_constraint(sum, Cmp::Ge, 26);
  m.add_constraint(sum, Cmp::Le, 25);
  m.set_objective(sum);
  SolveOptions opt;
  opt.max_nodes = 5;
  SolveResult r = solve(m, opt);
  EXPECT_EQ(r.status, SolveStatus::Aborted);
  EXPECT_FALSE(r.has_incumbent);
}

TEST(BbSolver, MatchesBruteForceOnRandomModels) {
  std::mt19937 rng(101);
  int optimal = 0, infeasible = 0;
  for (int i = 0; i < 150; ++i) {
    testing::IlpGenOptions opt;
    IlpModel m = testing::random_ilp(rng, opt);
    testing::BruteResult want = testing::brute_force_opt(m);
    SolveResult got = solve(m);
    if (want.feasible) {
      ASSERT_EQ(got.status, SolveStatus::Optimal) << m.write_lp();
      EXPECT_EQ(got.objective, want.objective) << m.write_lp();
      std::string why;
      EXPECT_TRUE(m.check_feasible(got.assignment, &why))
          << m.write_lp() << why;
      EXPECT_EQ(m.objective_value(got.assignment), got.objective);
      ++optimal;
    } else {
      ASSERT_EQ(got.status, SolveStatus::Infeasible) << m.write_lp();
      ++infeasible;
    }
  }
  // The generator must exercise both outcomes.
  EXPECT_GT(optimal, 20);
  EXPECT_GT(infeasible, 5);
}

}  // namespace
}  // namespace fuseplan
