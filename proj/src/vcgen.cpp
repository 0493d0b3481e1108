#include "piq/vcgen.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace piq {

namespace {

GuardPtr any_of(const std::vector<GuardedExpectation::Branch>& bs) {
  if (bs.empty()) return make_false();
  GuardPtr g = bs.front().guard;
  for (std::size_t i = 1; i < bs.size(); ++i) g = make_or(g, bs[i].guard);
  return g;
}

GuardPtr negated(const GuardPtr& g) {
  if (g->kind == Guard::Kind::True) return make_false();
  if (g->kind == Guard::Kind::False) return make_true();
  return make_not(g);
}

}  // namespace

std::vector<RawConstraint> leq_to_implications(const GuardedExpectation& f,
                                               const GuardedExpectation& g,
                                               const std::string& clause) {
  std::vector<RawConstraint> out;
  const auto& fb = f.branches;
  const auto& gb = g.branches;
  for (std::size_t i = 0; i < fb.size(); ++i)
    for (std::size_t j = 0; j < gb.size(); ++j)
      out.push_back({conj(fb[i].guard, gb[j].guard), gb[j].value - fb[i].value, clause, 1, int(i), int(j)});
  GuardPtr not_g = negated(any_of(gb)), not_f = negated(any_of(fb));
  for (std::size_t i = 0; i < fb.size(); ++i)
    out.push_back({conj(fb[i].guard, not_g), -fb[i].value, clause, 2, int(i), -1});
  for (std::size_t j = 0; j < gb.size(); ++j)
    out.push_back({conj(not_f, gb[j].guard), gb[j].value, clause, 3, -1, int(j)});
  return out;
}

NormalizeContext NormalizeContext::from(const Program& prog) {
  NormalizeContext ctx;
  ctx.num_vars = prog.num_vars();
  ctx.is_int = prog.is_int;
  for (const auto& h : prog.hints) {
    if (h.from->kind != Guard::Kind::Atom) throw VcError("hint source must be a single comparison");
    ctx.hints.emplace_back(canonical_atom(*h.from, ctx.num_vars), h.to);
  }
  return ctx;
}

namespace {

using Conj = std::vector<Atom>;

std::vector<Conj> cross(const std::vector<Conj>& a, const std::vector<Conj>& b) {
  std::vector<Conj> out;
  for (const auto& x : a)
    for (const auto& y : b) {
      Conj c = x;
      c.insert(c.end(), y.begin(), y.end());
      out.push_back(std::move(c));
    }
  return out;
}

std::vector<Conj> dnf(const Guard& g, bool positive, std::size_t n) {
  switch (g.kind) {
    case Guard::Kind::True: return positive ? std::vector<Conj>{{}} : std::vector<Conj>{};
    case Guard::Kind::False: return positive ? std::vector<Conj>{} : std::vector<Conj>{{}};
    case Guard::Kind::Atom: {
      Atom a = canonical_atom(g, n);
      return {{positive ? a : negate(a)}};
    }
    case Guard::Kind::Not: return dnf(*g.a, !positive, n);
    case Guard::Kind::And:
    case Guard::Kind::Or: {
      auto a = dnf(*g.a, positive, n), b = dnf(*g.b, positive, n);
      if ((g.kind == Guard::Kind::And) == positive) return cross(a, b);
      a.insert(a.end(), b.begin(), b.end());
      return a;
    }
  }
  return {};
}

VcAtom scaled(Polynomial p, VcAtom::Kind rel) {
  if (!p.is_zero()) {
    Rational lc = p.terms().rbegin()->second;
    if (rel == VcAtom::Kind::Ge) lc = abs(lc);
    p *= Rational(1) / lc;
  }
  return {std::move(p), rel};
}

// Positive multiple of p with coprime integer coefficients, if p only involves
// integer-typed variables.
std::optional<Polynomial> integer_form(const Polynomial& p, const std::vector<bool>& is_int) {
  mpz_class l = 1, g = 0;
  for (const auto& [m, c] : p.terms()) {
    for (std::size_t v = 0; v < m.num_vars(); ++v)
      if (m[v] && !is_int[v]) return std::nullopt;
    mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), c.get_den().get_mpz_t());
  }
  Polynomial q = p * Rational(l);
  for (const auto& [m, c] : q.terms()) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.get_num().get_mpz_t());
  if (g != 0) q *= Rational(1, 1) / Rational(g);
  return q;
}

// Alternatives (a disjunction) for one canonical atom.
std::vector<std::vector<VcAtom>> lower(const Atom& a, const NormalizeContext& ctx) {
  const std::size_t n = ctx.num_vars;
  auto half = Polynomial::constant(n, Rational(1, 2));
  switch (a.rel) {
    case Rel::Ge: return {{scaled(a.p, VcAtom::Kind::Ge)}};
    case Rel::Eq: return {{scaled(a.p, VcAtom::Kind::Eq)}};
    case Rel::Gt: {
      if (auto q = integer_form(a.p, ctx.is_int)) return {{scaled(*q - half, VcAtom::Kind::Ge)}};
      return {{scaled(a.p - Polynomial::constant(n, ctx.strict_margin), VcAtom::Kind::Ge)}};
    }
    case Rel::Ne: {
      if (auto q = integer_form(a.p, ctx.is_int))
        return {{scaled(*q - half, VcAtom::Kind::Ge)}, {scaled(-*q - half, VcAtom::Kind::Ge)}};
      throw VcError("disequality '" + to_string(a, default_names(n)) +
                    "' over real-valued variables needs a #hint relaxation (e.g. p != 0 => p >= 1/2), "
                    "integer-typed variables (#int), or an auxiliary variable w with p*w >= 1");
    }
    default: break;
  }
  throw VcError("unexpected relation in canonical atom");
}

// h = lambda * g + c ?
std::optional<std::pair<Rational, Rational>> affine_multiple(const Polynomial& h, const Polynomial& g) {
  const std::size_t n = g.num_vars();
  Monomial one(n);
  Polynomial gv = g, hv = h;
  gv.add_term(one, -g.coefficient(one));
  hv.add_term(one, -h.coefficient(one));
  if (gv.is_zero() || hv.is_zero()) return std::nullopt;
  const auto& [m, c] = *gv.terms().rbegin();
  Rational lambda = hv.coefficient(m) / c;
  if (sgn(lambda) == 0) return std::nullopt;
  if (!(hv - gv * lambda).is_zero()) return std::nullopt;
  return std::pair{lambda, h.coefficient(one) - lambda * g.coefficient(one)};
}

// Returns nullopt when the conjunction is unsatisfiable.
std::optional<std::vector<VcAtom>> simplify(std::vector<VcAtom> atoms) {
  std::vector<VcAtom> out;
  for (auto& a : atoms) {
    if (a.p.degree() <= 0) {
      Rational c = a.p.is_zero() ? Rational(0) : a.p.terms().begin()->second;
      bool ok = a.rel == VcAtom::Kind::Ge ? sgn(c) >= 0 : sgn(c) == 0;
      if (!ok) return std::nullopt;
      continue;
    }
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(std::move(a));
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < out.size() && !changed; ++i)
      for (std::size_t j = 0; j < out.size() && !changed; ++j) {
        if (i == j) continue;
        auto rel = affine_multiple(out[j].p, out[i].p);  // p_j = l * p_i + c
        if (!rel) continue;
        auto [l, c] = *rel;
        const bool ei = out[i].rel == VcAtom::Kind::Eq, ej = out[j].rel == VcAtom::Kind::Eq;
        if (ei) {
          // p_j is the constant c on the set.
          if (ej ? sgn(c) != 0 : sgn(c) < 0) return std::nullopt;
          out.erase(out.begin() + static_cast<long>(j));
          changed = true;
        } else if (!ej) {
          if (sgn(l) < 0) {
            // p_i >= 0 and l*p_i + c >= 0 bound p_i to [0, c/|l|].
            if (sgn(c) < 0) return std::nullopt;
            if (sgn(c) == 0) {
              VcAtom eq = scaled(out[i].p, VcAtom::Kind::Eq);
              out.erase(out.begin() + static_cast<long>(std::max(i, j)));
              out.erase(out.begin() + static_cast<long>(std::min(i, j)));
              out.push_back(std::move(eq));
              changed = true;
            }
          } else if (sgn(c) >= 0) {
            out.erase(out.begin() + static_cast<long>(j));  // implied by p_i >= 0
            changed = true;
          }
        }
      }
  }
  return out;
}

std::string tag_of(const RawConstraint& r) {
  std::string s = r.clause + ".f" + std::to_string(r.family);
  if (r.i >= 0 || r.j >= 0)
    s += "(" + (r.i >= 0 ? std::to_string(r.i) : std::string("-")) + "," +
         (r.j >= 0 ? std::to_string(r.j) : std::string("-")) + ")";
  return s;
}

}  // namespace

std::vector<ImplicationConstraint> normalize(const RawConstraint& raw, const NormalizeContext& ctx) {
  std::vector<ImplicationConstraint> out;
  std::size_t k = 0;
  for (const Conj& conj0 : dnf(*raw.antecedent, true, ctx.num_vars)) {
    // Hint rewriting, one pass.
    std::vector<Conj> expanded{{}};
    for (const Atom& a : conj0) {
      const GuardPtr* to = nullptr;
      for (const auto& [from, target] : ctx.hints)
        if (from == a) to = &target;
      expanded = cross(expanded, to ? dnf(**to, true, ctx.num_vars) : std::vector<Conj>{{a}});
    }
    for (const Conj& c : expanded) {
      std::vector<std::vector<VcAtom>> alts{{}};
      for (const Atom& a : c) {
        std::vector<std::vector<VcAtom>> next;
        for (const auto& prefix : alts)
          for (const auto& option : lower(a, ctx)) {
            auto v = prefix;
            v.insert(v.end(), option.begin(), option.end());
            next.push_back(std::move(v));
          }
        alts = std::move(next);
      }
      for (auto& atoms : alts) {
        auto simple = simplify(std::move(atoms));
        if (!simple) continue;
        ImplicationConstraint ic;
        ic.antecedent = std::move(*simple);
        ic.consequent = raw.consequent;
        ic.clause = raw.clause;
        ic.family = raw.family;
        ic.required = raw.required;
        ic.tag = tag_of(raw) + ".d" + std::to_string(k++);
        out.push_back(std::move(ic));
      }
    }
  }
  return out;
}

std::optional<std::vector<VcAtom>> init_equalities(const Program& prog) {
  const std::size_t n = prog.num_vars();
  std::vector<VcAtom> out;
  std::vector<bool> assigned(n, false);
  for (const auto& st : statements(prog.init)) {
    if (st->kind == Stmt::Kind::Skip) continue;
    if (st->kind != Stmt::Kind::Assign || has_random(*st->expr) || assigned[st->var]) return std::nullopt;
    Polynomial rhs = to_polynomial(*st->expr, n);
    for (std::size_t v : variables_of(rhs))
      if (v == st->var) return std::nullopt;
    assigned[st->var] = true;
    out.push_back(scaled(Polynomial::variable(n, st->var) - rhs, VcAtom::Kind::Eq));
  }
  // A later assignment must not change a variable an earlier right-hand side read.
  std::vector<bool> seen(n, false);
  for (const auto& st : statements(prog.init)) {
    if (st->kind != Stmt::Kind::Assign) continue;
    for (std::size_t v : variables_of(to_polynomial(*st->expr, n)))
      if (assigned[v] && !seen[v]) return std::nullopt;
    seen[st->var] = true;
  }
  return out;
}

namespace {

GuardPtr equality_guard(const Program& prog) {
  GuardPtr g = make_true();
  for (const auto& st : statements(prog.init))
    if (st->kind == Stmt::Kind::Assign) g = conj(g, make_atom(Rel::Eq, make_var(st->var), st->expr));
  return g;
}

void mark_aux(std::vector<RawConstraint>& rs) {
  for (auto& r : rs)
    if (r.family == 3 && r.clause != "pre") r.required = false;
}

void append(std::vector<RawConstraint>& out, std::vector<RawConstraint> more) {
  mark_aux(more);
  out.insert(out.end(), more.begin(), more.end());
}

std::vector<RawConstraint> pre_constraints(const Program& prog, const ParamPolynomial& inv,
                                           const WpOptions& wopts) {
  const std::size_t n = prog.num_vars();
  if (!prog.pre) return {};
  GuardedExpectation pre = to_guarded(*prog.pre, n);
  auto inv_e = GuardedExpectation::unguarded(inv);
  if (init_equalities(prog)) {
    auto rs = leq_to_implications(pre, inv_e, "pre");
    GuardPtr eqs = equality_guard(prog);
    for (auto& r : rs) r.antecedent = conj(eqs, r.antecedent);
    return rs;
  }
  return leq_to_implications(pre, wp(*prog.init, inv_e, wopts), "pre");
}

GuardedExpectation gated(const GuardPtr& g, const ParamPolynomial& v) {
  GuardedExpectation e(v.num_vars());
  if (!v.is_zero()) e.branches.push_back({g, v});
  return e;
}

}  // namespace

std::vector<RawConstraint> boundary_invariant_constraints(const Program& prog,
                                                          const ParamPolynomial& inv,
                                                          const WpOptions& wopts) {
  if (prog.nested()) throw VcError("nested loop: use the nested constraint system");
  if (!prog.post) throw VcError("missing #post expectation");
  const std::size_t n = prog.num_vars();
  const GuardPtr& g = prog.loop->guard;
  std::vector<RawConstraint> out = pre_constraints(prog, inv, wopts);
  append(out, leq_to_implications(gated(negated(g), inv), to_guarded(*prog.post, n), "exit"));
  append(out, leq_to_implications(gated(g, inv),
                                  wp(*prog.loop->body[0], GuardedExpectation::unguarded(inv), wopts),
                                  "step"));
  return out;
}

std::vector<RawConstraint> nested_constraints(const Program& prog, const ParamPolynomial& inv,
                                              const ParamPolynomial& inner,
                                              const WpOptions& wopts) {
  if (!prog.post) throw VcError("missing #post expectation");
  const std::size_t n = prog.num_vars();
  std::vector<StmtPtr> body1, body2;
  StmtPtr inner_loop;
  for (const auto& st : statements(prog.loop->body[0])) {
    if (st->kind == Stmt::Kind::While) {
      if (inner_loop) throw VcError("more than one inner loop");
      inner_loop = st;
    } else if (contains_loop(*st)) {
      throw VcError("inner loop must sit directly in the outer loop body");
    } else {
      (inner_loop ? body2 : body1).push_back(st);
    }
  }
  if (!inner_loop) throw VcError("no inner loop");
  StmtPtr b1 = make_seq(body1), b2 = make_seq(body2);
  const GuardPtr& g = prog.loop->guard;
  const GuardPtr& gi = inner_loop->guard;

  std::vector<RawConstraint> out = pre_constraints(prog, inv, wopts);
  append(out, leq_to_implications(gated(negated(g), inv), to_guarded(*prog.post, n), "exit"));
  append(out, leq_to_implications(gated(g, inv), wp(*b1, GuardedExpectation::unguarded(inner), wopts), "step"));
  append(out, leq_to_implications(gated(negated(gi), inner),
                                  wp(*b2, GuardedExpectation::unguarded(inv), wopts), "inner-exit"));
  append(out, leq_to_implications(gated(gi, inner),
                                  wp(*inner_loop->body[0], GuardedExpectation::unguarded(inner), wopts),
                                  "inner-step"));
  return out;
}

VcSystem generate_vcs(const Program& prog, const VcOptions& opts) {
  VcSystem sys;
  sys.num_vars = prog.num_vars();
  sys.names = prog.vars;
  sys.invariant = make_template(sys.num_vars, opts.degree, sys.params, "c");
  if (prog.nested()) {
    sys.inner = make_template(sys.num_vars, opts.degree, sys.params, "e");
    sys.raw = nested_constraints(prog, sys.invariant.poly, sys.inner->poly, opts.wp);
  } else {
    sys.raw = boundary_invariant_constraints(prog, sys.invariant.poly, opts.wp);
  }
  if (!prog.pre) sys.notes.push_back("no #pre given; the pre clause is omitted");
  else if (init_equalities(prog) && prog.init->kind != Stmt::Kind::Skip)
    sys.notes.push_back("initialization encoded as antecedent equalities");
  NormalizeContext ctx = NormalizeContext::from(prog);
  ctx.strict_margin = opts.strict_margin;
  for (const auto& r : sys.raw) {
    auto cs = normalize(r, ctx);
    sys.constraints.insert(sys.constraints.end(), cs.begin(), cs.end());
  }
  return sys;
}

std::vector<ImplicationConstraint> candidate_vcs(const Program& prog, const Polynomial& inv,
                                                 const std::optional<Polynomial>& inner,
                                                 const WpOptions& wopts,
                                                 const Rational& strict_margin) {
  std::vector<RawConstraint> raw;
  if (prog.nested()) {
    if (!inner) throw VcError("nested program needs an inner invariant");
    raw = nested_constraints(prog, to_param(inv), to_param(*inner), wopts);
  } else {
    raw = boundary_invariant_constraints(prog, to_param(inv), wopts);
  }
  NormalizeContext ctx = NormalizeContext::from(prog);
  ctx.strict_margin = strict_margin;
  std::vector<ImplicationConstraint> out;
  for (const auto& r : raw) {
    auto cs = normalize(r, ctx);
    out.insert(out.end(), cs.begin(), cs.end());
  }
  return out;
}

bool antecedent_holds(const std::vector<VcAtom>& atoms, std::span<const Rational> state) {
  for (const auto& a : atoms) {
    Rational v = evaluate(a.p, state);
    if (a.rel == VcAtom::Kind::Ge ? sgn(v) < 0 : sgn(v) != 0) return false;
  }
  return true;
}

bool holds(const ImplicationConstraint& c, const Assignment& values, std::span<const Rational> state,
           const ParamTable* names) {
  if (!antecedent_holds(c.antecedent, state)) return true;
  return sgn(evaluate(instantiate(c.consequent, values, names), state)) >= 0;
}

std::string to_string(const VcAtom& a, std::span<const std::string> names) {
  return to_string(a.p, names) + (a.rel == VcAtom::Kind::Ge ? " >= 0" : " = 0");
}

std::string to_string(const ImplicationConstraint& c, std::span<const std::string> names,
                      const ParamTable& table) {
  std::string lhs;
  for (const auto& a : c.antecedent) lhs += (lhs.empty() ? "" : " && ") + to_string(a, names);
  if (lhs.empty()) lhs = "true";
  return lhs + " => " + to_string(c.consequent, names, table) + " >= 0";
}

std::string dump(const VcSystem& sys) {
  std::ostringstream out;
  out << "# variables:";
  for (const auto& v : sys.names) out << ' ' << v;
  out << "\n# template I = " << to_string(sys.invariant.poly, sys.names, sys.params) << '\n';
  if (sys.inner) out << "# template I_inn = " << to_string(sys.inner->poly, sys.names, sys.params) << '\n';
  for (const auto& note : sys.notes) out << "# " << note << '\n';
  out << "# raw implications: " << sys.raw.size() << ", normalized: " << sys.constraints.size() << '\n';
  for (std::size_t i = 0; i < sys.constraints.size(); ++i) {
    const auto& c = sys.constraints[i];
    out << "vc" << i << " [" << c.tag << (c.required ? "" : ",aux") << "] "
        << to_string(c, sys.names, sys.params) << '\n';
  }
  return out.str();
}

}  // namespace piq
