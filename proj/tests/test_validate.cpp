// tests/test_validate.cpp — static program checks: one test per violation kind.
#include <gtest/gtest.h>

#include <random>

#include "fuseplan/parse.hpp"
#include "support/generator.hpp"
#include "support/util.hpp"

namespace fuseplan {
namespace {

using testing::corpus_names;
using testing::corpus_source;

std::vector<Violation> violations_of(const std::string& src) {
  return validate(parse_program(src));
}

bool has_kind(const std::vector<Violation>& vs, ViolationKind k) {
  for (const auto& v : vs)
    if (v.kind == k) return true;
  return false;
}

TEST(Validate, CorpusIsClean) {
  for (const auto& name : corpus_names()) {
    auto vs = violations_of(corpus_source(name));
    EXPECT_TRUE(vs.empty()) << name << ": "
                            << (vs.empty() ? "" : vs[0].message);
  }
}

TEST(Validate, DuplicateName) {
  auto vs = violations_of(
      "def t(xs: [i1]) {\n"
      "  a = map(\\x -> x, xs)\n"
      "  a = map(\\x -> x, xs)\n"
      "  return a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs, ViolationKind::DuplicateName));

  auto vs2 = violations_of(
      "def t(xs: [i1], xs: [i1]) {\n"
      "  a = map(\\x -> x, xs)\n"
      "  return a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs2, ViolationKind::DuplicateName));
}

TEST(Validate, UnknownIdentifier) {
  auto vs = violations_of(
      "def t(xs: [i1]) {\n"
      "  a = map(\\x -> x, nope)\n"
      "  return a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs, ViolationKind::UnknownIdentifier));

  // Returning a name that was never bound.
  auto vs2 = violations_of("def t(xs: [i1]) { return nothing }\n");
  EXPECT_TRUE(has_kind(vs2, ViolationKind::UnknownIdentifier));

  // Using a binding before its definition.
  auto vs3 = violations_of(
      "def t(xs: [i1]) {\n"
      "  a = map(\\x -> x, b)\n"
      "  b = map(\\x -> x, xs)\n"
      "  return a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs3, ViolationKind::UnknownIdentifier));
}

TEST(Validate, UnboundVariable) {
  auto vs = violations_of(
      "def t(xs: [i1]) {\n"
      "  a = map(\\x -> y, xs)\n"
      "  return a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs, ViolationKind::UnboundVariable));
}

TEST(Validate, ScatterDestReused) {
  // Reading the destination after the scatter.
  auto vs = violations_of(
      "def t(xs: [i1], ps: [(i,i)1]) {\n"
      "  r = scatter(\\d s -> d + s, xs, ps)\n"
      "  a = map(\\x -> x, xs)\n"
      "  return r, a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs, ViolationKind::ScatterDestReused));

  // Even a size()-only use after the scatter counts as a use.
  auto vs2 = violations_of(
      "def t(xs: [i1], ps: [(i,i)1]) {\n"
      "  r = scatter(\\d s -> d + s, xs, ps)\n"
      "  a = generate(size(xs), \\i -> i)\n"
      "  return r, a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs2, ViolationKind::ScatterDestReused));

  // dest and src must be different arrays.
  auto vs3 = violations_of(
      "def t(ps: [(i,i)1]) {\n"
      "  r = scatter(\\d s -> d + s.1, ps, ps)\n"
      "  return r\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs3, ViolationKind::ScatterDestReused));

  // The combiner must not index into the destination.
  auto vs4 = violations_of(
      "def t(xs: [i1], ps: [(i,i)1]) {\n"
      "  r = scatter(\\d s -> d + xs ! 0, xs, ps)\n"
      "  return r\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs4, ViolationKind::ScatterDestReused));

  // Returning the destination is also a use after the scatter.
  auto vs5 = violations_of(
      "def t(xs: [i1], ps: [(i,i)1]) {\n"
      "  r = scatter(\\d s -> d + s, xs, ps)\n"
      "  return r, xs\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs5, ViolationKind::ScatterDestReused));
}

TEST(Validate, ArityMismatch) {
  // map's lambda must take one parameter per array argument.
  auto vs = violations_of(
      "def t(xs: [i1], ys: [i1]) {\n"
      "  a = map(\\x -> x, xs, ys)\n"
      "  return a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs, ViolationKind::ArityMismatch));

  // fold's combiner takes exactly two.
  auto vs2 = violations_of(
      "def t(xs: [i1]) {\n"
      "  a = fold(\\x -> x, xs)\n"
      "  return a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs2, ViolationKind::ArityMismatch));
}

TEST(Validate, RankMismatch) {
  // map over arrays of different ranks.
  auto vs = violations_of(
      "def t(xs: [i1], ys: [i2]) {\n"
      "  a = map(\\x y -> x, xs, ys)\n"
      "  return a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs, ViolationKind::RankMismatch));

  // fold of a rank-1 array yields rank 0, which cannot be an array binding's
  // input again at rank >= 1 — folding it twice is a rank error.
  auto vs2 = violations_of(
      "def t(xs: [i1]) {\n"
      "  a = fold(\\x y -> x + y, xs)\n"
      "  b = fold(\\x y -> x + y, a)\n"
      "  return b\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs2, ViolationKind::RankMismatch));
}

TEST(Validate, TypeMismatch) {
  // Arithmetic on a bool element.
  auto vs = violations_of(
      "def t(xs: [b1]) {\n"
      "  a = map(\\x -> x + 1, xs)\n"
      "  return a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs, ViolationKind::TypeMismatch));

  // Projection out of range.
  auto vs2 = violations_of(
      "def t(xs: [(i,i)1]) {\n"
      "  a = map(\\x -> x . 5, xs)\n"
      "  return a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs2, ViolationKind::TypeMismatch));

  // Non-bool `if` condition.
  auto vs3 = violations_of(
      "def t(xs: [i1]) {\n"
      "  a = map(\\x -> if x then 1 else 2, xs)\n"
      "  return a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs3, ViolationKind::TypeMismatch));
}

TEST(Validate, ShapeNotStatic) {
  // A generate shape may not depend on a lambda variable or element read.
  auto vs = violations_of(
      "def t(xs: [i1]) {\n"
      "  a = generate(xs ! 0, \\i -> i)\n"
      "  return a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs, ViolationKind::ShapeNotStatic));

  auto vs2 = violations_of(
      "def t(xs: [i1]) {\n"
      "  a = generate(1.5, \\i -> i)\n"
      "  return a\n"
      "}\n");
  EXPECT_TRUE(has_kind(vs2, ViolationKind::ShapeNotStatic));
}

TEST(Validate, GeneratedProgramsValidateCleanly) {
  std::mt19937 rng(11);
  for (int i = 0; i < 400; ++i) {
    testing::ProgramGenOptions opt;
    opt.allow_opaque = (i % 4 == 0);
    testing::GeneratedProgram gp = testing::random_program(rng, opt);
    Program p = parse_program(gp.source);
    auto vs = validate(p);
    EXPECT_TRUE(vs.empty()) << gp.source << "\nfirst violation: "
                            << (vs.empty() ? "" : vs[0].message);
  }
}

}  // namespace
}  // namespace fuseplan
