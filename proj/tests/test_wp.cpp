#include <cmath>
#include <random>

#include "doctest.h"
#include "piq/wp.hpp"
#include "support.hpp"

using namespace piq;
using namespace piq::testing;

namespace {

std::vector<std::string> xyz{"x", "y", "z"};

Rational value_at(const GuardedExpectation& e, const std::vector<Rational>& s) {
  return e.evaluate(s).constant();
}

GuardedExpectation post_of(const std::string& text, std::size_t n = 3) {
  return to_guarded(parse_expectation(text, std::vector<std::string>(xyz.begin(), xyz.begin() + n)), n);
}

}  // namespace

TEST_CASE("uniform moments on [0,1]") {
  Distribution u{Distribution::Kind::Uniform, 0, 1};
  for (unsigned k = 0; k <= 8; ++k) CHECK(moment(u, k) == Rational(1, k + 1));
}

TEST_CASE("normal moments match the closed forms") {
  Distribution d;
  d.kind = Distribution::Kind::Normal;
  d.mean = 3;
  d.sigma = Rational(1, 2);
  Rational m = 3, s2 = Rational(1, 4);
  CHECK(moment(d, 2) == m * m + s2);
  CHECK(moment(d, 3) == m * m * m + 3 * m * s2);
  CHECK(moment(d, 4) == m * m * m * m + 6 * m * m * s2 + 3 * s2 * s2);
  d.sigma.reset();
  d.sigma_symbol = "sigma";
  CHECK(moment(d, 1) == 3);
  CHECK_THROWS_AS(moment(d, 2), Error);
}

TEST_CASE("skip and abort") {
  auto post = post_of("z");
  auto w = wp(*make_skip(), post);
  CHECK(w.branches.size() == 1);
  CHECK(to_string(w, xyz, ParamTable()) == "(z)");
  CHECK(wp(*make_abort(), post).branches.empty());
}

TEST_CASE("uniform assignment against a squared post") {
  Program p = parse("#var x\n#post x\nwhile (x < 0) { x := unif(0, 2) }");
  auto body = p.loop->body[0];
  auto post = GuardedExpectation::unguarded(to_param(pow(Polynomial::variable(1, 0), 2)));
  auto w = wp(*body, post);
  REQUIRE(w.branches.size() == 1);
  CHECK(to_constant(w.branches[0].value) == Polynomial::constant(1, Rational(4, 3)));

  std::mt19937_64 rng(5);
  const int N = 1000000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < N; ++i) {
    std::vector<double> s{0};
    run(*body, s, rng);
    sum += s[0] * s[0];
    sum2 += std::pow(s[0], 4);
  }
  double mean = sum / N, se = std::sqrt((sum2 / N - mean * mean) / N);
  CHECK(se < 0.01);
  CHECK(std::abs(mean - 4.0 / 3.0) < 4 * se);

  WpOptions literal;
  literal.paper_literal = true;
  CHECK(to_constant(wp(*body, post, literal).branches[0].value) == Polynomial::constant(1, Rational(1)));
}

TEST_CASE("ruin body equals the averaged shifted template") {
  Program p = parse("#var x y z\n#int x y\n#post z\nwhile (0 < x < y) { {x := x + 1} [0.5] {x := x - 1}; z := z + 1 }");
  ParamTable table;
  auto t = make_template(3, 2, table);
  auto w = wp(*p.loop->body[0], GuardedExpectation::unguarded(t.poly));
  REQUIRE(w.branches.size() == 1);
  auto X = Polynomial::variable(3, 0), Y = Polynomial::variable(3, 1), Z = Polynomial::variable(3, 2);
  auto one = Polynomial::constant(3, Rational(1));
  std::vector<Polynomial> up{X + one, Y, Z + one}, down{X - one, Y, Z + one};
  auto expected = compose(t.poly, std::span<const Polynomial>(up)) * Rational(1, 2) +
                  compose(t.poly, std::span<const Polynomial>(down)) * Rational(1, 2);
  CHECK(w.branches[0].value == expected);
}

TEST_CASE("airplane step adds 0.683 * 156 to h") {
  Program p = parse("#var h n x\n#post h\nwhile (n <= x) { {h := h + 135 + norm(21, sigma)} [0.683] {skip}; n := n + 1 }");
  auto choice = statements(p.loop->body[0])[0];
  auto w = wp(*choice, to_guarded(parse_expectation("h", p.vars), 3));
  REQUIRE(w.branches.size() == 1);
  auto h = Polynomial::variable(3, 0);
  CHECK(to_constant(w.branches[0].value) == h + Polynomial::constant(3, ratio(106548, 1000)));
}

TEST_CASE("dnf normalization splits overlapping branches") {
  std::vector<std::string> v{"x"};
  GuardedExpectation e(1);
  auto f = Polynomial::variable(1, 0), g = pow(Polynomial::variable(1, 0), 2);
  e.branches.push_back({parse_guard("x > 0", v), to_param(f)});
  e.branches.push_back({parse_guard("x > 1", v), to_param(g)});
  auto d = dnf_normalize(e);
  std::mt19937 rng(9);
  std::uniform_int_distribution<int> num(-400, 400);
  for (int i = 0; i < 10000; ++i) {
    std::vector<Rational> s{ratio(num(rng), 100)};
    Rational expect = 0;
    if (s[0] > 0) expect += s[0];
    if (s[0] > 1) expect += s[0] * s[0];
    CHECK(d.active(s) <= 1);
    CHECK(value_at(d, s) == expect);
  }

  GuardedExpectation single(1);
  single.branches.push_back({parse_guard("x > 0", v), to_param(f)});
  CHECK(dnf_normalize(single).branches.size() == 1);
}

TEST_CASE("wp agrees with simulation on random loop-free programs") {
  ProgGen gen{std::mt19937(17)};
  std::mt19937_64 rng(23);
  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 15; ++trial) {
    StmtPtr prog = gen.stmt(3);
    auto post = post_of("x*y + z - [x >= 0] * (x * z)");
    GuardedExpectation w;
    try {
      w = wp(*prog, post);
    } catch (const Error&) {
      continue;  // random assignment into a guarded variable
    }
    ++checked;
    std::vector<Rational> start{Rational(gen.pick(-2, 2)), Rational(gen.pick(-2, 2)), Rational(gen.pick(-2, 2))};
    std::vector<double> s0{start[0].get_d(), start[1].get_d(), start[2].get_d()};
    const int N = 100000;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < N; ++i) {
      auto s = s0;
      double v = 0;
      if (run(*prog, s, rng)) v = s[0] * s[1] + s[2] - (s[0] >= 0 ? s[0] * s[2] : 0);
      sum += v;
      sum2 += v * v;
    }
    double mean = sum / N, se = std::sqrt(std::max(sum2 / N - mean * mean, 0.0) / N);
    double exact = value_at(w, start).get_d();
    INFO(to_string(*prog, xyz));
    CHECK(std::abs(mean - exact) <= 4 * se + 1e-9);
    for (int i = 0; i < 50; ++i) {
      std::vector<Rational> s{Rational(gen.pick(-3, 3)), Rational(gen.pick(-3, 3)), Rational(gen.pick(-3, 3))};
      CHECK(w.active(s) <= 1);
    }
  }
  CHECK(checked >= 10);
}

TEST_CASE("wp is linear in the post") {
  ProgGen gen{std::mt19937(99)};
  for (int trial = 0; trial < 30; ++trial) {
    StmtPtr prog = gen.stmt(3);
    auto f = post_of("x*x + y"), g = post_of("z - 2*x*y");
    Rational a(3, 2), b(1, 3);
    GuardedExpectation wf, wg, wsum;
    try {
      wf = wp(*prog, f);
      wg = wp(*prog, g);
      wsum = wp(*prog, a * f + b * g);
    } catch (const Error&) {
      continue;
    }
    for (int i = 0; i < 30; ++i) {
      std::vector<Rational> s{Rational(gen.pick(-3, 3)), Rational(gen.pick(-3, 3)), Rational(gen.pick(-3, 3))};
      CHECK(value_at(wsum, s) == a * value_at(wf, s) + b * value_at(wg, s));
    }
  }
}
