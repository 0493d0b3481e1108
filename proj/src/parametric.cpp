#include "piq/parametric.hpp"

#include "piq/poly.hpp"

namespace piq {

namespace {

std::string xsum(ParametricKind kind, unsigned n) {
  std::string s;
  for (unsigned i = 1; i <= n; ++i) {
    if (i > 1) s += " + ";
    s += "x" + std::to_string(i);
    if (i == 1 && kind == ParametricKind::Quadratic) s += "^2";
  }
  return s;
}

std::string half(unsigned n) { return n % 2 ? std::to_string(n) + "/2" : std::to_string(n / 2); }

}  // namespace

ParametricKind parse_parametric_kind(const std::string& name) {
  if (name == "linear") return ParametricKind::Linear;
  if (name == "quadratic") return ParametricKind::Quadratic;
  if (name == "ruin-power") return ParametricKind::RuinPower;
  throw Error("unknown parametric family '" + name + "' (linear, quadratic, ruin-power)");
}

const char* to_string(ParametricKind k) {
  switch (k) {
    case ParametricKind::Linear: return "linear";
    case ParametricKind::Quadratic: return "quadratic";
    case ParametricKind::RuinPower: return "ruin-power";
  }
  return "?";
}

std::string gen_parametric(ParametricKind kind, unsigned n) {
  if (n < 1) throw Error("parametric size must be at least 1");
  if (kind == ParametricKind::RuinPower) {
    const std::string yn = n == 1 ? "y" : "y^" + std::to_string(n);
    return "#var x y z\n#int x y\n#pre x*" + yn + " - x^2\n#post z\n#hint x <= 0 => x = 0\n#hint " + yn +
           " <= x => x = " + yn + "\nz := 0;\nwhile (0 < x < " + yn +
           ") {\n  {x := x + 1} [0.5] {x := x - 1};\n  z := z + 1\n}\n";
  }
  std::string vars = "h t";
  for (unsigned i = 1; i <= n; ++i) vars += " x" + std::to_string(i);
  const std::string s = xsum(kind, n);
  return "#var " + vars + "\n#int t\n#pre (" + half(n) + " + " + s + ")*t\n#post h\n#hint t <= 0 => t = 0\n" +
         "h := 0;\nwhile (t > 0) {\n  {h := h + " + s + "} [0.5] {h := h + " + s + " + unif(0, " +
         std::to_string(2 * n) + ")};\n  t := t - 1\n}\n";
}

std::string expected_invariant(ParametricKind kind, unsigned n) {
  if (kind == ParametricKind::RuinPower)
    return "z + x*y" + (n == 1 ? std::string() : "^" + std::to_string(n)) + " - x^2";
  return "h + (" + half(n) + " + " + xsum(kind, n) + ")*t";
}

unsigned parametric_degree(ParametricKind kind, unsigned n) {
  switch (kind) {
    case ParametricKind::Linear: return 2;
    case ParametricKind::Quadratic: return 4;
    case ParametricKind::RuinPower: return n + 1 + (n + 1) % 2;
  }
  return 2;
}

std::size_t linear_coefficients_full(unsigned n) { return monomials_up_to(n + 2, 2).size(); }
std::size_t linear_coefficients_restricted(unsigned n) { return monomials_up_to(n, 2).size(); }

}  // namespace piq
