#include <random>
#include <set>

#include "doctest.h"
#include "piq/vcgen.hpp"

using namespace piq;

namespace {

const char* kRuin = R"(#var x y z
#int x y
#pre x*y - x^2
#post z
#hint x <= 0 => x = 0
#hint y <= x => x = y
#terminates
z := 0;
while (0 < x < y) {
  {x := x + 1} [0.5] {x := x - 1};
  z := z + 1
}
)";

const char* kRuinPlain = R"(#var x y z
#int x y z
#pre x*y - x^2
#post z
z := 0;
while (0 < x < y) {
  {x := x + 1} [0.5] {x := x - 1};
  z := z + 1
}
)";

std::vector<ImplicationConstraint> normalize_text(const std::string& guard, const char* pragmas = "") {
  Program p = parse(std::string("#var x y\n") + pragmas + "#post x\nwhile (x < 0) { x := x + 1 }\n");
  RawConstraint raw{parse_guard(guard, p.vars), to_param(Polynomial::variable(2, 1)), "t", 1, 0, 0};
  return normalize(raw, NormalizeContext::from(p));
}

Polynomial poly(const std::string& text, const std::vector<std::string>& vars) {
  return to_polynomial(*parse_expr(text, vars), vars.size());
}

}  // namespace

TEST_CASE("normalization splits disjunctions and lowers strict comparisons") {
  std::vector<std::string> names{"x", "y"};
  auto a = normalize_text("x <= 0 || y <= x");
  REQUIRE(a.size() == 2);
  CHECK(to_string(a[0].antecedent[0], names) == "-x >= 0");
  CHECK(to_string(a[1].antecedent[0], names) == "x - y >= 0");

  auto b = normalize_text("0 < x < y");
  REQUIRE(b.size() == 1);
  REQUIRE(b[0].antecedent.size() == 2);
  CHECK(to_string(b[0].antecedent[0], names) == "x >= 0");
  CHECK(to_string(b[0].antecedent[1], names) == "-x + y >= 0");

  auto c = normalize_text("!(x < 0)");
  REQUIRE(c.size() == 1);
  CHECK(to_string(c[0].antecedent[0], names) == "x >= 0");

  auto d = normalize_text("2*x > 1", "#int x\n");
  REQUIRE(d.size() == 1);
  CHECK(to_string(d[0].antecedent[0], names) == "x - 3/4 >= 0");

  auto e = normalize_text("x != 0", "#int x\n");
  REQUIRE(e.size() == 2);
  CHECK(to_string(e[1].antecedent[0], names) == "-x - 1/2 >= 0");

  CHECK_THROWS_AS(normalize_text("x != y"), VcError);
}

TEST_CASE("normalization drops contradictions and merges opposite bounds") {
  std::vector<std::string> names{"x", "y"};
  CHECK(normalize_text("x >= 1 && x <= 0").empty());
  CHECK(normalize_text("x = 1 && x = 2").empty());
  CHECK(normalize_text("1 > 2").empty());
  auto m = normalize_text("x >= y && y >= x");
  REQUIRE(m.size() == 1);
  REQUIRE(m[0].antecedent.size() == 1);
  CHECK(m[0].antecedent[0].rel == VcAtom::Kind::Eq);
  auto r = normalize_text("x >= 0 && 2*x >= -1");
  REQUIRE(r.size() == 1);
  CHECK(r[0].antecedent.size() == 1);
  auto t = normalize_text("true");
  REQUIRE(t.size() == 1);
  CHECK(t[0].antecedent.empty());
}

TEST_CASE("hints replace matching atoms") {
  Program p = parse(kRuin);
  NormalizeContext ctx = NormalizeContext::from(p);
  RawConstraint raw{parse_guard("x <= 0 || y <= x", p.vars), to_param(Polynomial::variable(3, 2)), "exit", 1, 0, 0};
  auto cs = normalize(raw, ctx);
  REQUIRE(cs.size() == 2);
  CHECK(to_string(cs[0].antecedent[0], p.vars) == "x = 0");
  CHECK(to_string(cs[1].antecedent[0], p.vars) == "-x + y = 0");
}

TEST_CASE("pointwise comparison yields k*l + k + l implications") {
  const std::size_t n = 2;
  auto x = to_param(Polynomial::variable(n, 0));
  for (std::size_t k = 1; k <= 3; ++k)
    for (std::size_t l = 0; l <= 3; ++l) {
      GuardedExpectation f(n), g(n);
      for (std::size_t i = 0; i < k; ++i)
        f.branches.push_back({make_atom(Rel::Eq, make_var(1), make_const(Rational(int(i)))), x});
      for (std::size_t j = 0; j < l; ++j)
        g.branches.push_back({make_atom(Rel::Eq, make_var(0), make_const(Rational(int(j)))), x});
      CHECK(leq_to_implications(f, g, "t").size() == k * l + k + l);
    }
}

TEST_CASE("ruin: exact initialization and the known invariant satisfies every required constraint") {
  Program p = parse(kRuin);
  auto eqs = init_equalities(p);
  REQUIRE(eqs);
  REQUIRE(eqs->size() == 1);
  CHECK(to_string((*eqs)[0], p.vars) == "z = 0");

  VcSystem sys = generate_vcs(p, {});
  CHECK(sys.invariant.monomials.size() == 10);
  CHECK(sys.raw.size() == 9);
  std::size_t aux = 0;
  for (const auto& c : sys.constraints) aux += !c.required;
  CHECK(aux > 0);

  Polynomial inv = poly("z + x*y - x^2", p.vars);
  auto cs = candidate_vcs(p, inv, std::nullopt);
  Polynomial bad = poly("z + x*y - x^2 + 1", p.vars);
  auto bs = candidate_vcs(p, bad, std::nullopt);
  bool bad_fails = false;
  for (int x = -4; x <= 4; ++x)
    for (int y = -4; y <= 4; ++y)
      for (int z = -4; z <= 4; ++z) {
        std::vector<Rational> s{x, y, z};
        for (const auto& c : cs)
          if (c.required) CHECK_MESSAGE(holds(c, {}, s), c.tag);
        for (const auto& c : bs)
          if (c.required && !holds(c, {}, s)) bad_fails = true;
      }
  CHECK(bad_fails);
}

TEST_CASE("normalized constraints are pointwise at least as strong as the raw ones") {
  Program p = parse(kRuinPlain);
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> coeff(-3, 3), val(-4, 4);
  NormalizeContext ctx = NormalizeContext::from(p);
  auto mons = monomials_up_to(3, 2);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Polynomial inv(3);
    for (const auto& m : mons) inv.add_term(m, Rational(coeff(rng)));
    auto raw = boundary_invariant_constraints(p, to_param(inv));
    for (const auto& r : raw) {
      auto cs = normalize(r, ctx);
      for (int s = 0; s < 500; ++s) {
        std::vector<Rational> st{val(rng), val(rng), val(rng)};
        bool all = true;
        for (const auto& c : cs) all = all && holds(c, {}, st);
        bool raw_ok = !holds(*r.antecedent, st) || sgn(evaluate(to_constant(r.consequent), st)) >= 0;
        if (all) CHECK(raw_ok);
        ++checked;
      }
    }
  }
  CHECK(checked >= 10000);
}

TEST_CASE("loop-free template of degree 0") {
  Program p = parse("#var x\n#pre 1\n#post 1\nwhile (x < 0) { x := x + 1 }\n");
  VcOptions o;
  o.degree = 0;
  VcSystem sys = generate_vcs(p, o);
  CHECK(sys.invariant.monomials.size() == 1);
  CHECK(sys.raw.size() == 9);
  CHECK(dump(sys).find("c_0") != std::string::npos);
}

TEST_CASE("nested loops produce five clauses over two templates") {
  Program p = parse(R"(#var x y m n k
#pre k + 20*(m - x)
#post k
k := 0;
while (x <= m) {
  y := 0;
  while (y <= n) {
    y := y + unif(-0.1, 0.2)
  };
  x := x + unif(-0.1, 0.2);
  k := k + 1
}
)");
  VcSystem sys = generate_vcs(p, {});
  REQUIRE(sys.inner);
  CHECK(sys.params.size() == 2 * 21);
  std::set<std::string> clauses;
  for (const auto& c : sys.constraints) clauses.insert(c.clause);
  CHECK(clauses == std::set<std::string>{"pre", "exit", "step", "inner-exit", "inner-step"});
  CHECK_THROWS_AS(boundary_invariant_constraints(p, sys.invariant.poly), VcError);
}
