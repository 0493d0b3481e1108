// Acceptance runner: one PASS/FAIL line per criterion, exit status 0 iff all pass.
// Usage: piq_acceptance [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "piq/cli.hpp"
#include "piq/parametric.hpp"
#include "piq/refine.hpp"
#include "piq/report.hpp"
#include "support.hpp"

using namespace piq;

namespace {

const std::string kDir = PIQ_BENCHMARK_DIR;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void fail(const std::string& why) {
    pass = false;
    notes.push_back(why);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Polynomial poly(const std::string& text, const Program& p) {
  return to_polynomial(*parse_expr(text, p.vars), p.num_vars());
}

std::string secs(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3fs", s);
  return buf;
}

// 1. Clean rows reproduce the listed invariants exactly, each under 10 s.
Outcome clean_rows() {
  const std::vector<std::pair<std::string, std::string>> rows{
      {"ruin", "z + x*y - x^2"},
      {"bin1", "x + 1/4*n*y"},
      {"bin2", "x + 1/8*n^2 - 1/8*n + 3/4*n*y"},
      {"geo", "x + 3*z*y"},
      {"sum", "x + 1/4*n^2 + 1/4*n"},
      {"prod", "-1/4*n + x*y + 1/2*x*n + 1/2*y*n + 1/4*n^2"},
      {"perceptron", "n - 2*b"},
      {"airplane", "106.548*x - 106.548*n + h"},
      {"airplane2", "282.507*(x - n) + h"},
      {"nested", "k + 20*(m - x)"},
  };
  Outcome o;
  for (const auto& [name, expected] : rows) {
    Program p = parse(slurp(kDir + "/" + name + ".pp"));
    InvariantResult r = synthesize(p);
    std::string got = r.invariant ? to_string(*r.invariant, p.vars) : "-";
    if (r.status != Verdict::Verified)
      o.fail(name + ": " + to_string(r.status));
    else if (*r.invariant != poly(expected, p))
      o.fail(name + ": got " + got + ", expected " + expected);
    else if (r.total_seconds >= 10)
      o.fail(name + ": " + secs(r.total_seconds));
    else
      o.note(name + " " + secs(r.total_seconds));
  }
  return o;
}

// 2. Noisy rows: a candidate that passes sampling and carries certificates, under 60 s.
Outcome noisy_rows() {
  Outcome o;
  for (std::string name : {"bin3", "geo2", "fair_coin1", "fair_coin2", "fair_coin3"}) {
    Program p = parse(slurp(kDir + "/" + name + ".pp"));
    InvariantResult r = synthesize(p);
    if (r.status == Verdict::Failed || !r.invariant) {
      o.fail(name + ": no candidate");
      continue;
    }
    std::string bad;
    for (const auto& c : r.report.constraints) {
      if (!c.counterexamples.empty()) bad += " counterexample in " + c.tag + ";";
      if (!c.exact_certificate && !(c.numeric_certificate && c.margin >= 1e-8))
        bad += " no certificate for " + c.tag + ";";
      if (c.samples_accepted < 100000 && !c.vacuous_by_sampling && c.grid_points == 0)
        bad += " too few samples for " + c.tag + ";";
    }
    if (!bad.empty())
      o.fail(name + ":" + bad);
    else if (r.total_seconds >= 60)
      o.fail(name + ": " + secs(r.total_seconds));
    else
      o.note(name + " " + to_string(r.status) + " " + secs(r.total_seconds));
  }
  return o;
}

// 3. The running example: golden constraint dump, the clause structure, and
// the multiplier structure of the relaxed residuals.
Outcome running_example() {
  Outcome o;
  std::ostringstream out, err;
  const int code = run_cli({"vc", kDir + "/ruin.pp"}, out, err);
  if (code != 0) o.fail("vc exited " + std::to_string(code));
  if (out.str() != slurp(kDir + "/ruin.vc")) o.fail("vc output differs from ruin.vc");

  Program p = parse(slurp(kDir + "/ruin.pp"));
  VcSystem sys = generate_vcs(p, {});
  const ParamPolynomial& I = sys.invariant.poly;
  const std::size_t x = 0, y = 1, z = 2;
  auto var = [&](std::size_t i) { return Polynomial::variable(3, i); };
  auto one = Polynomial::constant(3, 1);
  std::vector<Polynomial> up{var(x) + one, var(y), var(z) + one}, down{var(x) - one, var(y), var(z) + one};
  const ParamPolynomial avg = compose(I, std::span<const Polynomial>(up)) * ratio(1, 2) +
                              compose(I, std::span<const Polynomial>(down)) * ratio(1, 2);
  using K = VcAtom::Kind;
  // Atoms as sorted strings; an equality and its negation are the same atom.
  auto same_atoms = [&](const std::vector<VcAtom>& a, const std::vector<VcAtom>& b) {
    auto keys = [&](const std::vector<VcAtom>& v) {
      std::vector<std::string> k;
      for (const auto& t : v) {
        std::string s = to_string(t, p.vars);
        if (t.rel == K::Eq) s = std::min(s, to_string(VcAtom{-t.p, K::Eq}, p.vars));
        k.push_back(s);
      }
      std::sort(k.begin(), k.end());
      return k;
    };
    return keys(a) == keys(b);
  };
  const std::vector<VcAtom> in_loop{{var(x) - one * ratio(1, 2), K::Ge}, {var(y) - var(x) - one * ratio(1, 2), K::Ge}};
  struct Expect {
    std::string label;
    std::vector<VcAtom> ante;
    ParamPolynomial g;
  };
  // Hints turn x <= 0 into x = 0 and y <= x into x = y; integer strictness
  // turns 0 < x < y into x >= 1/2, y - x >= 1/2.
  const std::vector<Expect> expect{
      {"(3)", {{var(z), K::Eq}}, I - to_param(poly("x*y - x^2", p))},
      {"(4a)", {{var(x), K::Eq}}, to_param(var(z)) - I},
      {"(4b)", {{var(x) - var(y), K::Eq}}, to_param(var(z)) - I},
      {"(5)", in_loop, to_param(var(z))},
      {"(6)", in_loop, avg - I},
      {"(7a)", {{var(x), K::Eq}}, avg},
      {"(7b)", {{var(x) - var(y), K::Eq}}, avg},
  };
  std::vector<bool> used(sys.constraints.size(), false);
  for (const auto& e : expect) {
    bool found = false;
    for (std::size_t i = 0; i < sys.constraints.size() && !found; ++i) {
      const auto& c = sys.constraints[i];
      if (!used[i] && same_atoms(c.antecedent, e.ante) && c.consequent == e.g) used[i] = found = true;
    }
    if (!found) o.fail("no constraint matches " + e.label);
  }
  if (sys.constraints.size() != expect.size())
    o.fail(std::to_string(sys.constraints.size()) + " constraints instead of 7");

  // Relaxation of (3), (4), (6) exactly as stated: reals, no hints, constant multipliers.
  Program plain = parse(R"(#var x y z
#pre x*y - x^2
#post z
z := 0;
while (0 < x < y) {
  {x := x + 1} [0.5] {x := x - 1};
  z := z + 1
}
)");
  VcSystem ps = generate_vcs(plain, {});
  RelaxOptions literal;
  literal.eq_polynomial = false;
  literal.eliminate_equalities = false;
  ParamTable table = ps.params;
  std::size_t free_count = 0, nonneg = 0, matched = 0;
  const ParamPolynomial& J = ps.invariant.poly;
  for (const auto& c : ps.constraints) {
    if (c.clause != "pre" && !(c.required && (c.clause == "exit" || c.clause == "step"))) continue;
    SosConstraint s = relax_simple(c, table, literal);
    Assignment a;
    std::vector<Rational> u;
    for (std::size_t k = 0; k < s.multipliers.size(); ++k) {
      const auto kind = table[s.multipliers[k]].kind;
      free_count += kind == ParamKind::FreeMultiplier;
      nonneg += kind == ParamKind::NonnegMultiplier;
      a[s.multipliers[k]] = Rational(2 + static_cast<long>(k));
      u.push_back(Rational(2 + static_cast<long>(k)));
    }
    for (auto id : ps.invariant.coefficients) a[id] = Rational(static_cast<long>(id.value % 5) - 2);
    const Polynomial Ia = instantiate(J, a);
    Polynomial want(3);
    std::vector<Polynomial> upp{var(x) + one, var(y), var(z) + one}, dn{var(x) - one, var(y), var(z) + one};
    const Polynomial avga = compose(Ia, std::span<const Polynomial>(upp)) * ratio(1, 2) +
                            compose(Ia, std::span<const Polynomial>(dn)) * ratio(1, 2);
    if (c.clause == "pre" && u.size() == 1)
      want = Ia - poly("x*y - x^2", plain) - u[0] * var(z);  // (3')
    else if (c.clause == "exit" && u.size() == 1 && c.antecedent[0].p == -var(x))
      want = var(z) - Ia + u[0] * var(x);  // (4') first
    else if (c.clause == "exit" && u.size() == 1)
      want = var(z) - Ia - u[0] * (var(x) - var(y));  // (4') second
    else if (c.clause == "step" && u.size() == 2)
      want = avga - Ia - u[0] * var(x) - u[1] * (var(y) - var(x));  // (6')
    else
      continue;
    if (instantiate(s.residual, a) == want) ++matched;
  }
  if (matched != 4) o.fail("relaxed residuals matching (3'),(4'),(6'): " + std::to_string(matched) + " of 4");
  if (free_count != 1 || nonneg != 4)
    o.fail("multipliers: " + std::to_string(free_count) + " free, " + std::to_string(nonneg) + " nonneg");
  o.note("golden dump, 7 clauses, (3'),(4'),(6') with 1 free v and 4 nonneg u");
  return o;
}

std::size_t choose(std::size_t n, std::size_t k) {
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// 4. Parametric linear scheme.
Outcome parametric() {
  Outcome o;
  std::vector<double> times;
  for (unsigned n : {5u, 10u, 15u}) {
    Program p = parse(gen_parametric(ParametricKind::Linear, n));
    // h + (n/2 + sum x_i) t built directly.
    const std::size_t h = 0, t = 1;
    Polynomial want = Polynomial::variable(n + 2, h) + Polynomial::variable(n + 2, t) * ratio(n, 2);
    for (unsigned i = 0; i < n; ++i)
      want += Polynomial::variable(n + 2, 2 + i) * Polynomial::variable(n + 2, t);
    std::vector<double> solver;
    InvariantResult r;
    for (int rep = 0; rep < 5; ++rep) {
      r = synthesize(p);
      solver.push_back(r.solver_seconds);
    }
    std::nth_element(solver.begin(), solver.begin() + 2, solver.end());
    times.push_back(solver[2]);
    if (r.status != Verdict::Verified || *r.invariant != want)
      o.fail("n=" + std::to_string(n) + ": " + to_string(r.status) +
             (r.invariant ? " " + to_string(*r.invariant, p.vars) : ""));
    if (r.template_coefficients != choose(n + 4, 2))
      o.fail("n=" + std::to_string(n) + ": " + std::to_string(r.template_coefficients) + " coefficients");
    o.note("n=" + std::to_string(n) + " coefficients " + std::to_string(r.template_coefficients) + ", solver " +
           secs(times.back()));
  }
  if (linear_coefficients_restricted(15) != 136 || choose(17, 2) != 136)
    o.fail("restricted count for n=15 is " + std::to_string(linear_coefficients_restricted(15)));
  if (!(times[0] < times[1] && times[1] < times[2])) o.fail("solver time not increasing in n");
  return o;
}

// 5. Property suite: wp against simulation, SDP status, relaxation soundness.
Outcome properties() {
  Outcome o;
  using namespace piq::testing;
  {
    ProgGen gen{std::mt19937(2024)};
    std::mt19937_64 rng(7);
    const std::vector<std::string> names{"x", "y", "z"};
    auto post = to_guarded(parse_expectation("x*y + z - [x >= 0] * (x * z)", names), 3);
    int checked = 0, bad = 0;
    while (checked < 200) {
      StmtPtr prog = gen.stmt(3);
      GuardedExpectation w;
      try {
        w = wp(*prog, post);
      } catch (const Error&) {
        continue;
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
      const double mean = sum / N, se = std::sqrt(std::max(sum2 / N - mean * mean, 0.0) / N);
      const double exact = w.evaluate(start).constant().get_d();
      if (std::abs(mean - exact) > 4 * se + 1e-9) ++bad;
    }
    if (bad) o.fail(std::to_string(bad) + " of 200 programs outside 4 sigma");
    o.note("wp: 200 programs");
  }
  {
    std::mt19937 rng(99);
    std::vector<Eigen::MatrixXd> x0;
    std::vector<double> w0;
    int wrong = 0;
    for (int t = 0; t < 100; ++t) {
      SdpProblem p = random_feasible(rng, x0, w0);
      bool feasible = t % 2 == 0;
      if (!feasible) {
        switch (t / 2 % 3) {
          case 0: p.rows.push_back({{}, {}, 1.0}); break;  // 0 = 1
          case 1: {
            SdpRow dup = p.rows[0];
            dup.rhs += 1;
            p.rows.push_back(dup);
            break;
          }
          default: {
            // trace of block 0 equal to -1
            SdpRow tr;
            for (std::uint32_t i = 0; i < p.block_sizes[0]; ++i) tr.entries.push_back({0, i, i, 1.0});
            tr.rhs = -1;
            p.rows.push_back(tr);
          }
        }
      }
      auto s = solve_feasibility(p);
      const auto want = feasible ? SdpStatus::Feasible : SdpStatus::Infeasible;
      if (s.status != want) ++wrong;
    }
    if (wrong) o.fail(std::to_string(wrong) + " of 100 SDPs with the wrong status");
    o.note("sdp: 100 problems");
  }
  {
    // Antecedents hold at an anchor point (slack 1 on inequalities, at most one
    // equality), so every instance has points; they are drawn exactly near the
    // anchor, on the equality line when there is one.
    std::mt19937 rng(31);
    std::uniform_int_distribution<int> d(-3, 3);
    std::uniform_int_distribution<int> grid(-1000, 1000);
    auto X = Polynomial::variable(2, 0), Y = Polynomial::variable(2, 1);
    int feasible = 0, unsound = 0, starved = 0;
    for (int t = 0; t < 200; ++t) {
      const std::vector<Rational> anchor{Rational(d(rng)), Rational(d(rng))};
      auto lin = [&](bool eq) {
        int a = d(rng), b = d(rng);
        if (a == 0 && b == 0) a = 1;
        Polynomial f = X * Rational(a) + Y * Rational(b);
        const Rational at = evaluate(f, anchor);
        return f - Polynomial::constant(2, eq ? at : at - Rational(1 + std::abs(d(rng))));
      };
      ImplicationConstraint c;
      c.tag = "r" + std::to_string(t);
      Polynomial g(2);
      std::optional<Polynomial> line;
      for (int i = 0, k = 1 + int(rng() % 2); i < k; ++i) {
        const bool eq = !line && rng() % 4 == 0;
        Polynomial f = lin(eq);
        if (eq) line = f;
        c.antecedent.push_back({f, eq ? VcAtom::Kind::Eq : VcAtom::Kind::Ge});
        g += f * Rational(eq ? d(rng) : std::abs(d(rng)));
      }
      Polynomial sq = lin(false);
      g += sq * sq;
      if (t % 3 == 0) g += Polynomial::constant(2, d(rng));
      c.consequent = to_param(g);
      SosProgram prog;
      prog.num_vars = 2;
      prog.constraints.push_back(relax_simple(c, prog.params));
      finalize(prog);
      if (prog.trivially_infeasible) continue;
      Assembled a = assemble(prog);
      if (solve_feasibility(a.problem).status != SdpStatus::Feasible) continue;
      ++feasible;
      // Direction along the equality line, if any.
      std::vector<Rational> dir{1, 0}, dir2{0, 1};
      if (line) {
        const Rational ca = line->coefficient(Monomial::variable(2, 0)), cb = line->coefficient(Monomial::variable(2, 1));
        dir = {-cb, ca};
      }
      int accepted = 0;
      for (long tries = 0; accepted < 10000 && tries < 2000000; ++tries) {
        const Rational s1(grid(rng), 500), s2(grid(rng), 500);
        std::vector<Rational> pt{anchor[0] + s1 * dir[0], anchor[1] + s1 * dir[1]};
        if (!line) {
          pt[0] += s2 * dir2[0];
          pt[1] += s2 * dir2[1];
        }
        if (!antecedent_holds(c.antecedent, pt)) continue;
        ++accepted;
        if (evaluate(g, pt) < 0) {
          ++unsound;
          break;
        }
      }
      if (accepted < 10000) ++starved;
    }
    if (unsound) o.fail(std::to_string(unsound) + " feasible relaxations violated at sampled points");
    if (starved) o.fail(std::to_string(starved) + " instances with fewer than 10^4 antecedent points");
    if (feasible < 50) o.fail("only " + std::to_string(feasible) + " feasible relaxation instances");
    o.note("relaxation: " + std::to_string(feasible) + " feasible instances, 10^4 exact points each");
  }
  return o;
}

// 6. Hand-checkable Stengle certificates expand to zero.
Outcome stengle() {
  Outcome o;
  auto x = Polynomial::variable(1, 0);
  auto one = Polynomial::constant(1, 1);
  auto zero_all = [](const SosConstraint& s, Assignment& a) {
    for (const auto& b : s.multiplier_blocks)
      for (auto id : b.entries) a[id] = 0;
    for (auto id : s.multipliers) a[id] = 0;
  };
  auto solved_exact = [&](ParamTable& t, const SosConstraint& s) {
    SosProgram prog;
    prog.num_vars = 1;
    prog.params = t;
    prog.constraints.push_back(s);
    finalize(prog);
    if (prog.trivially_infeasible) return false;
    Assembled a = assemble(prog);
    auto sol = solve_feasibility(a.problem);
    if (sol.status != SdpStatus::Feasible) return false;
    auto cert = exact_certificate(prog, parameter_values(a, sol), RoundOptions{});
    return cert && instantiate(s.residual, *cert).is_zero();
  };
  {
    // {x >= 0, -x - 1 >= 0}: 1*x + 1*(-x - 1) + 1 = 0.
    ParamTable t;
    StengleOptions so;
    so.degree = 0;
    so.power = 0;
    auto s = encode_emptiness({x, -x - one}, {}, std::nullopt, 1, t, so, "a");
    Assignment a;
    zero_all(s, a);
    if (s.multiplier_blocks.size() != 4) o.fail("first: unexpected cone size");
    a[s.multiplier_blocks[1].entries[0]] = 1;
    a[s.multiplier_blocks[2].entries[0]] = 1;
    if (!instantiate(s.residual, a).is_zero()) o.fail("first certificate does not expand to 0");
    if (!solved_exact(t, s)) o.fail("first: no exact certificate from the solver");
  }
  {
    // x = 0 against g = x^2: (x^2)^2 + (-x^3)*x = 0.
    ParamTable t;
    ImplicationConstraint c;
    c.antecedent = {{x, VcAtom::Kind::Eq}};
    c.consequent = to_param(x * x);
    StengleOptions so;
    so.degree = 1;
    so.power = 1;
    auto s = encode_stengle(c, 1, t, so);
    Assignment a;
    zero_all(s, a);
    std::optional<ParamId> cube;
    for (auto id : s.multipliers) {
      Assignment probe = a;
      probe[id] = 1;
      if (instantiate(s.residual, probe) - x * x * x * x == x * x * x * x) cube = id;
    }
    if (!cube) {
      o.fail("second: no ideal multiplier coefficient for x^3");
    } else {
      a[*cube] = -1;
      if (!instantiate(s.residual, a).is_zero()) o.fail("second certificate does not expand to 0");
    }
    if (!solved_exact(t, s)) o.fail("second: no exact certificate from the solver");
  }
  o.note("x + (-x-1) + 1 = 0 and (x^2)^2 - x^3*x = 0");
  return o;
}

// 7. check ruin.pp --invariant z exits non-zero and reports (1, 3, 0).
Outcome negative_control() {
  Outcome o;
  const std::string json = "piq_acceptance_check.json";
  std::ostringstream out, err;
  const int code = run_cli({"check", kDir + "/ruin.pp", "--invariant", "z", "--json", json}, out, err);
  if (code == 0) o.fail("exit status 0");
  Report r = report_from_json(slurp(json));
  std::remove(json.c_str());
  bool seen = false;
  for (const auto& c : r.constraints)
    for (const auto& p : c.counterexamples) seen = seen || p == std::vector<std::string>{"1", "3", "0"};
  if (!seen) o.fail("(1, 3, 0) not among the counterexamples");
  if (out.str().find("x = 1, y = 3, z = 0") == std::string::npos) o.fail("(1, 3, 0) not printed");
  o.note("exit " + std::to_string(code) + ", " + std::to_string(r.falsified) + " falsified constraint(s)");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"clean table rows reproduce their invariants exactly", clean_rows},
      {"noisy table rows give certified, unfalsified candidates within 60 s", noisy_rows},
      {"running example constraints, golden dump and relaxed residuals", running_example},
      {"parametric linear scheme: counts, invariant, increasing solver time", parametric},
      {"soundness properties (wp, SDP status, relaxation)", properties},
      {"Stengle certificates expand to zero", stengle},
      {"negative control on ruin with I = z", negative_control},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int k = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(k)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k << ": " << criteria[i].first << " (" << secs(s)
              << ")";
    for (const auto& n : o.notes) std::cout << "; " << n;
    std::cout << std::endl;
  }
  return all ? 0 : 1;
}
