#include <random>

#include "doctest.h"
#include "piq/poly.hpp"

using namespace piq;

namespace {

Polynomial random_poly(std::mt19937& rng, std::size_t n, unsigned d) {
  std::uniform_int_distribution<int> coeff(-5, 5), keep(0, 2);
  Polynomial p(n);
  for (const auto& m : monomials_up_to(n, d))
    if (keep(rng) == 0) p.add_term(m, ratio(coeff(rng), 1 + keep(rng)));
  return p;
}

std::vector<Rational> random_point(std::mt19937& rng, std::size_t n) {
  std::uniform_int_distribution<int> v(-7, 7);
  std::vector<Rational> pt;
  for (std::size_t i = 0; i < n; ++i) pt.push_back(ratio(v(rng), 1 + std::abs(v(rng))));
  return pt;
}

std::vector<std::string> xyz{"x", "y", "z"};

}  // namespace

TEST_CASE("graded lex order on three variables") {
  auto ms = monomials_up_to(3, 2);
  std::vector<std::string> got;
  for (const auto& m : ms) got.push_back(to_string(m, xyz));
  CHECK(got == std::vector<std::string>{"1", "x", "y", "z", "x^2", "x*y", "x*z", "y^2", "y*z",
                                        "z^2"});
}

TEST_CASE("monomial count is n+d choose d") {
  auto binom = [](unsigned a, unsigned b) {
    unsigned long r = 1;
    for (unsigned i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  for (unsigned n : {1u, 2u, 4u, 15u})
    for (unsigned d : {0u, 1u, 2u, 3u}) CHECK(monomials_up_to(n, d).size() == binom(n + d, d));
}

TEST_CASE("ring axioms agree with pointwise evaluation") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    auto a = random_poly(rng, 3, 3), b = random_poly(rng, 3, 2), c = random_poly(rng, 3, 2);
    CHECK(a * b == b * a);
    CHECK((a + b) * c == a * c + b * c);
    CHECK((a * b) * c == a * (b * c));
    CHECK((a - a).is_zero());
    auto pt = random_point(rng, 3);
    CHECK(evaluate(a * b + c, pt) == evaluate(a, pt) * evaluate(b, pt) + evaluate(c, pt));
  }
}

TEST_CASE("substitution matches evaluation at the substituted point") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    auto p = random_poly(rng, 3, 3), r = random_poly(rng, 3, 2);
    auto pt = random_point(rng, 3);
    auto shifted = pt;
    shifted[1] = evaluate(r, pt);
    CHECK(evaluate(substitute(p, 1, r), pt) == evaluate(p, shifted));
  }
}

TEST_CASE("pow and degree") {
  auto x = Polynomial::variable(2, 0), y = Polynomial::variable(2, 1);
  auto p = pow(x + y, 3);
  CHECK(p.degree() == 3);
  CHECK(to_string(p, xyz) == "x^3 + 3*x^2*y + 3*x*y^2 + y^3");
  CHECK(Polynomial(2).degree() == -1);
}

TEST_CASE("rendering uses p/q coefficients and descending order") {
  auto x = Polynomial::variable(2, 0), y = Polynomial::variable(2, 1);
  auto p = x * Rational(1, 2) - y * y * Rational(3) + Polynomial::constant(2, Rational(-2, 3));
  CHECK(to_string(p, xyz) == "-3*y^2 + 1/2*x - 2/3");
  CHECK(to_string(Polynomial(2), xyz) == "0");
}

TEST_CASE("template naming and instantiation") {
  ParamTable table;
  auto t = make_template(3, 2, table);
  REQUIRE(t.coefficients.size() == 10);
  CHECK(table[t.coefficients[0]].name == "c_0");
  CHECK(table[t.coefficients[1]].name == "c_1");
  CHECK(table[t.coefficients[4]].name == "c_11");
  CHECK(table[t.coefficients[5]].name == "c_12");
  CHECK(table[t.coefficients[9]].name == "c_33");

  ParamTable wide;
  auto tw = make_template(12, 2, wide);
  CHECK(wide[tw.coefficients.back()].name == "c_12_12");

  Assignment values;
  for (std::size_t i = 0; i < t.coefficients.size(); ++i) values[t.coefficients[i]] = Rational(int(i));
  auto p = instantiate(t.poly, values);
  CHECK(p.coefficient(Monomial({0, 2, 0})) == 7);

  values.erase(t.coefficients[3]);
  try {
    instantiate(t.poly, values, &table);
    FAIL("expected a missing parameter");
  } catch (const MissingParameter& e) {
    CHECK(std::string(e.what()).find("c_3") != std::string::npos);
  }
}

TEST_CASE("parametric product stays affine") {
  ParamTable table;
  auto t = make_template(2, 1, table);
  auto x = Polynomial::variable(2, 0);
  auto q = t.poly * (x * x);
  CHECK(q.degree() == 3);
  CHECK(parameters_of(q).size() == 3);
  auto pt = std::vector<Rational>{Rational(2), Rational(5)};
  AffineForm at = evaluate(q, pt);
  CHECK(at.coefficient(t.coefficients[0]) == 4);
  CHECK(at.coefficient(t.coefficients[2]) == 20);
}
