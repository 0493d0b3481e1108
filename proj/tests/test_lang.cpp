#include <random>

#include "doctest.h"
#include "piq/lang.hpp"

using namespace piq;

namespace {

const char* kRuin = R"(#var x y z
#int x y
#pre x*y - x^2 + z
#post z
z := 0;
while (0 < x < y) {
  {x := x + 1} [0.5] {x := x - 1};
  z := z + 1
}
)";

const char* kPerceptron = R"(#var x y w b n
#post n
n := 0;
while (y * (w * x + b) <= 0) {
  {w := w + y * x; b := b + y} [0.25] {skip};
  n := n + 1
}
)";

const char* kNested = R"(#var x y m n k
#pre k + 20*(m - x)
#post k
#terminates
k := 0;
while (x <= m) {
  y := 0;
  while (y <= n) {
    y := y + unif(-0.1, 0.2)
  };
  x := x + unif(-0.1, 0.2);
  k := k + 1
}
)";

}  // namespace

TEST_CASE("ruin program parses into a guarded probabilistic loop") {
  Program p = parse(kRuin);
  CHECK(p.vars == std::vector<std::string>{"x", "y", "z"});
  CHECK(p.is_int == std::vector<bool>{true, true, false});
  REQUIRE(p.loop->kind == Stmt::Kind::While);
  const Guard& g = *p.loop->guard;
  REQUIRE(g.kind == Guard::Kind::And);
  CHECK(g.a->rel == Rel::Lt);
  CHECK(g.b->rel == Rel::Lt);
  auto body = statements(p.loop->body[0]);
  REQUIRE(body.size() == 2);
  CHECK(body[0]->kind == Stmt::Kind::Prob);
  CHECK(body[0]->prob == Rational(1, 2));
  CHECK(p.init->kind == Stmt::Kind::Assign);
  CHECK_FALSE(has_errors(validate(p)));
}

TEST_CASE("perceptron guard is a product comparison with probability 1/4") {
  Program p = parse(kPerceptron);
  const Guard& g = *p.loop->guard;
  REQUIRE(g.kind == Guard::Kind::Atom);
  CHECK(g.rel == Rel::Le);
  CHECK(g.lhs->kind == Expr::Kind::Mul);
  auto body = statements(p.loop->body[0]);
  CHECK(body[0]->prob == Rational(1, 4));
}

TEST_CASE("syntax errors carry a position") {
  try {
    parse("#post x\nwhile(x<) { skip }");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.pos().line == 2);
    CHECK(e.pos().column == 9);
  }
  CHECK_THROWS_AS(parse("#var x\nwhile (x < 1) { {x := 1} [1.5] {skip} }"), ParseError);
  CHECK_THROWS_AS(parse("#var x\nwhile (x < 1) { q := 1 }"), ParseError);
  CHECK_THROWS_AS(parse("#var x\n#post q\nwhile (x < 1) { x := 1 }"), ParseError);
  CHECK_THROWS_AS(parse("#var x y\nwhile (x < 1) { while (y < 1) {y := 1}; while (y < 2) {y := 2} }"),
                  ParseError);
  CHECK_THROWS_AS(parse("#var x\nx := 1"), ParseError);
}

TEST_CASE("decimals are parsed exactly") {
  Program p = parse("#var h\n#post h\nwhile (h < 1) { {h := h + 1} [0.683] {skip} }");
  auto body = statements(p.loop->body[0]);
  CHECK(body[0]->prob == Rational(683, 1000));
  ExprPtr e = parse_expr("1.5e-3 + 2", {});
  CHECK(e->value == Rational(4003, 2000));
}

TEST_CASE("chained comparisons desugar pointwise") {
  std::vector<std::string> vars{"x", "y"};
  GuardPtr chain = parse_guard("0 < x < y", vars);
  GuardPtr split = parse_guard("0 < x && x < y", vars);
  GuardPtr prim = to_primitive(parse_guard("x <= y || !(x != 0)", vars));
  GuardPtr orig = parse_guard("x <= y || !(x != 0)", vars);
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> d(-4, 4);
  for (int i = 0; i < 300; ++i) {
    std::vector<Rational> s{Rational(d(rng)), Rational(d(rng))};
    CHECK(holds(*chain, s) == holds(*split, s));
    CHECK(holds(*prim, s) == holds(*orig, s));
  }
}

TEST_CASE("validation of disequality guards") {
  auto geo2 = R"(#var x y z
#hint z != 0 => z >= 0.5
#post x
z := 1;
while (z != 0) { y := y + 1; {z := 0} [0.25] {x := x + 5/2} }
)";
  CHECK_FALSE(has_errors(validate(parse(geo2))));

  auto unhinted = "#var x\n#post x\nwhile (x != 0) { x := x - 1 }";
  CHECK(has_errors(validate(parse(unhinted))));

  auto as_int = "#var x\n#int x\n#post x\nwhile (x != 0) { x := x - 1 }";
  CHECK_FALSE(has_errors(validate(parse(as_int))));

  auto stray = "#var x\n#hint x <= 7 => x = 7\n#post x\nwhile (x < 0) { x := x + 1 }";
  CHECK(has_errors(validate(parse(stray))));
}

TEST_CASE("nested program is accepted and flagged") {
  Program p = parse(kNested);
  CHECK(p.nested());
  auto diags = validate(p);
  CHECK_FALSE(has_errors(diags));
  bool flagged = false;
  for (const auto& d : diags) flagged |= d.message.find("nested") != std::string::npos;
  CHECK(flagged);
}

TEST_CASE("missing termination attestation is a warning") {
  auto diags = validate(parse(kRuin));
  bool warned = false;
  for (const auto& d : diags) warned |= d.severity == Diagnostic::Severity::Warning;
  CHECK(warned);
}

TEST_CASE("symbolic standard deviation") {
  Program p = parse("#var h n x\n#post h\nwhile (n <= x) { h := h + 135 + norm(21, sigma); n := n + 1 }");
  CHECK(p.symbols == std::vector<std::string>{"sigma"});
  CHECK(p.vars.size() == 3);
}

namespace {

struct Gen {
  std::mt19937 rng;
  std::size_t nvars;
  std::size_t next_id = 0;

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

  ExprPtr expr(int depth) {
    int k = depth <= 0 ? pick(0, 1) : pick(0, 5);
    switch (k) {
      case 0: return make_const(ratio(pick(-9, 9), pick(1, 4)));
      case 1: return make_var(static_cast<std::size_t>(pick(0, int(nvars) - 1)));
      case 2: {
        Distribution d;
        d.kind = Distribution::Kind::Uniform;
        d.a = pick(-3, 0);
        d.b = pick(1, 3);
        return make_random(d, next_id++);
      }
      case 3: return make_add(expr(depth - 1), expr(depth - 1));
      case 4: return make_mul(expr(depth - 1), expr(depth - 1));
      default: return make_pow(expr(depth - 1), static_cast<unsigned>(pick(0, 3)));
    }
  }

  ExprPtr det_expr(int depth) {
    ExprPtr e;
    do e = expr(depth);
    while (has_random(*e));
    return e;
  }

  GuardPtr guard(int depth) {
    int k = depth <= 0 ? 0 : pick(0, 3);
    switch (k) {
      case 0: return make_atom(static_cast<Rel>(pick(0, 5)), det_expr(1), det_expr(1));
      case 1: return make_and(guard(depth - 1), guard(depth - 1));
      case 2: return make_or(guard(depth - 1), guard(depth - 1));
      default: return make_not(guard(depth - 1));
    }
  }

  StmtPtr stmt(int depth) {
    int k = depth <= 0 ? pick(0, 2) : pick(0, 5);
    switch (k) {
      case 0: return make_skip();
      case 1: return make_abort();
      case 2: return make_assign(static_cast<std::size_t>(pick(0, int(nvars) - 1)), expr(2));
      case 3: return make_seq({stmt(depth - 1), stmt(depth - 1)});
      case 4: return make_prob(ratio(pick(0, 8), 8), stmt(depth - 1), stmt(depth - 1));
      default: return make_ite(guard(1), stmt(depth - 1), stmt(depth - 1));
    }
  }
};

}  // namespace

TEST_CASE("parse after print is the identity on random programs") {
  Gen gen{std::mt19937(42), 3};
  for (int trial = 0; trial < 200; ++trial) {
    Program p;
    p.vars = {"a", "b", "c"};
    p.is_int = {gen.pick(0, 1) == 1, false, gen.pick(0, 1) == 1};
    p.init = gen.pick(0, 1) ? make_skip() : gen.stmt(1);
    p.loop = make_while(gen.guard(2), gen.stmt(3));
    Expectation post;
    post.terms.push_back({gen.pick(0, 1) ? gen.guard(1) : nullptr, gen.det_expr(2)});
    p.post = post;
    p.terminates = gen.pick(0, 1) == 1;
    std::string text = to_string(p);
    Program q = parse(text);
    INFO(text);
    CHECK(equal(p, q));
    CHECK(to_string(q) == text);
  }
}
