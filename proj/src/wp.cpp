#include "piq/wp.hpp"

#include <map>

namespace piq {

GuardedExpectation GuardedExpectation::unguarded(ParamPolynomial value) {
  GuardedExpectation e(value.num_vars());
  if (!value.is_zero()) e.branches.push_back({make_true(), std::move(value)});
  return e;
}

AffineForm GuardedExpectation::evaluate(std::span<const Rational> state) const {
  for (const auto& b : branches)
    if (holds(*b.guard, state)) return piq::evaluate(b.value, state);
  return AffineForm();
}

std::size_t GuardedExpectation::active(std::span<const Rational> state) const {
  std::size_t n = 0;
  for (const auto& b : branches) n += holds(*b.guard, state) ? 1 : 0;
  return n;
}

Rational moment(const Distribution& d, unsigned k) {
  if (k == 0) return 1;
  switch (d.kind) {
    case Distribution::Kind::Uniform: {
      Rational hi = 1, lo = 1;
      for (unsigned i = 0; i <= k; ++i) {
        hi *= d.b;
        lo *= d.a;
      }
      Rational r = (hi - lo) / (Rational(k + 1) * (d.b - d.a));
      r.canonicalize();
      return r;
    }
    case Distribution::Kind::Normal: {
      if (k == 1) return d.mean;
      if (d.sigma_var) throw Error("moment of order " + std::to_string(k) + " depends on the variable " + d.sigma_symbol);
      if (!d.sigma)
        throw Error("moment of order " + std::to_string(k) + " of norm(..., " + d.sigma_symbol +
                    ") needs a numeric standard deviation");
      Rational var = *d.sigma * *d.sigma;
      Rational m2 = 1, m1 = d.mean;
      for (unsigned j = 2; j <= k; ++j) {
        Rational m = d.mean * m1 + Rational(j - 1) * var * m2;
        m2 = m1;
        m1 = m;
      }
      return m1;
    }
    case Distribution::Kind::Discrete: {
      Rational s = 0;
      for (const auto& [v, p] : d.points) {
        Rational t = p;
        for (unsigned i = 0; i < k; ++i) t *= v;
        s += t;
      }
      return s;
    }
  }
  throw Error("unknown distribution kind");
}

Rational mean(const Distribution& d) { return moment(d, 1); }

Polynomial moment_polynomial(const Distribution& d, unsigned k, std::size_t n) {
  if (d.kind != Distribution::Kind::Normal || !d.sigma_var || k <= 1)
    return Polynomial::constant(n, moment(d, k));
  if (*d.sigma_var >= n) throw Error("standard deviation variable out of range");
  Polynomial s = Polynomial::variable(n, *d.sigma_var);
  Polynomial var = s * s;
  Polynomial m2 = Polynomial::constant(n, 1), m1 = Polynomial::constant(n, d.mean);
  for (unsigned j = 2; j <= k; ++j) {
    Polynomial m = m1 * d.mean + var * m2 * Rational(j - 1);
    m2 = m1;
    m1 = m;
  }
  return m1;
}

namespace {

GuardPtr negation(const GuardPtr& g) {
  if (g->kind == Guard::Kind::True) return make_false();
  if (g->kind == Guard::Kind::False) return make_true();
  if (g->kind == Guard::Kind::Not) return g->a;
  return make_not(g);
}

void conjuncts(const GuardPtr& g, std::vector<GuardPtr>& out) {
  if (g->kind == Guard::Kind::And) {
    conjuncts(g->a, out);
    conjuncts(g->b, out);
  } else if (g->kind != Guard::Kind::True) {
    out.push_back(g);
  }
}

bool complementary(const Guard& a, const Guard& b) {
  return (a.kind == Guard::Kind::Not && equal(*a.a, b)) ||
         (b.kind == Guard::Kind::Not && equal(*b.a, a));
}

GuardPtr build(const std::vector<GuardPtr>& lits) {
  if (lits.empty()) return make_true();
  GuardPtr g = lits.front();
  for (std::size_t i = 1; i < lits.size(); ++i) g = make_and(g, lits[i]);
  return g;
}

// Pieces partitioning a && !b.
std::vector<GuardPtr> minus(const GuardPtr& a, const GuardPtr& b) {
  std::vector<GuardPtr> lits;
  conjuncts(b, lits);
  if (lits.empty()) return {};
  std::vector<GuardPtr> out;
  GuardPtr prefix = a;
  for (const auto& l : lits) {
    GuardPtr piece = conj(prefix, negation(l));
    if (piece->kind != Guard::Kind::False) out.push_back(piece);
    prefix = conj(prefix, l);
    if (prefix->kind == Guard::Kind::False) break;
  }
  return out;
}

}  // namespace

GuardPtr conj(const GuardPtr& a, const GuardPtr& b) {
  if (a->kind == Guard::Kind::False) return a;
  if (b->kind == Guard::Kind::False) return b;
  std::vector<GuardPtr> lits;
  conjuncts(a, lits);
  std::vector<GuardPtr> more;
  conjuncts(b, more);
  for (const auto& l : more) {
    if (l->kind == Guard::Kind::False) return l;
    bool dup = false;
    for (const auto& k : lits) {
      if (complementary(*k, *l)) return make_false();
      if (equal(*k, *l)) dup = true;
    }
    if (!dup) lits.push_back(l);
  }
  return build(lits);
}

ExprPtr substitute(const ExprPtr& e, std::size_t var, const ExprPtr& r) {
  switch (e->kind) {
    case Expr::Kind::Var: return e->var == var ? r : e;
    case Expr::Kind::Add: return make_add(substitute(e->lhs, var, r), substitute(e->rhs, var, r));
    case Expr::Kind::Mul: return make_mul(substitute(e->lhs, var, r), substitute(e->rhs, var, r));
    case Expr::Kind::Pow: return make_pow(substitute(e->lhs, var, r), e->exponent);
    default: return e;
  }
}

GuardPtr substitute(const GuardPtr& g, std::size_t var, const ExprPtr& r) {
  switch (g->kind) {
    case Guard::Kind::Atom:
      return make_atom(g->rel, substitute(g->lhs, var, r), substitute(g->rhs, var, r));
    case Guard::Kind::And: return make_and(substitute(g->a, var, r), substitute(g->b, var, r));
    case Guard::Kind::Or: return make_or(substitute(g->a, var, r), substitute(g->b, var, r));
    case Guard::Kind::Not: return make_not(substitute(g->a, var, r));
    default: return g;
  }
}

namespace {

bool expr_mentions(const Expr& e, std::size_t var) {
  switch (e.kind) {
    case Expr::Kind::Var: return e.var == var;
    case Expr::Kind::Add:
    case Expr::Kind::Mul: return expr_mentions(*e.lhs, var) || expr_mentions(*e.rhs, var);
    case Expr::Kind::Pow: return expr_mentions(*e.lhs, var);
    default: return false;
  }
}

// Polynomial over the state variables followed by one variable per random
// occurrence.
struct RandomPoly {
  Polynomial poly;
  std::vector<const Distribution*> dists;
};

Polynomial lift(const Expr& e, std::size_t n, std::map<std::size_t, std::size_t>& slot,
                std::vector<const Distribution*>& dists, std::size_t total) {
  switch (e.kind) {
    case Expr::Kind::Const: return Polynomial::constant(total, e.value);
    case Expr::Kind::Var: return Polynomial::variable(total, e.var);
    case Expr::Kind::Random: return Polynomial::variable(total, n + slot.at(e.random_id));
    case Expr::Kind::Add: return lift(*e.lhs, n, slot, dists, total) + lift(*e.rhs, n, slot, dists, total);
    case Expr::Kind::Mul: return lift(*e.lhs, n, slot, dists, total) * lift(*e.rhs, n, slot, dists, total);
    case Expr::Kind::Pow: return pow(lift(*e.lhs, n, slot, dists, total), e.exponent);
  }
  return Polynomial(total);
}

void collect_randoms(const Expr& e, std::map<std::size_t, std::size_t>& slot,
                     std::vector<const Distribution*>& dists) {
  if (e.kind == Expr::Kind::Random) {
    if (slot.emplace(e.random_id, dists.size()).second) dists.push_back(e.dist.get());
    return;
  }
  if (e.lhs) collect_randoms(*e.lhs, slot, dists);
  if (e.rhs) collect_randoms(*e.rhs, slot, dists);
}

RandomPoly to_random_poly(const Expr& e, std::size_t n) {
  std::map<std::size_t, std::size_t> slot;
  RandomPoly rp;
  collect_randoms(e, slot, rp.dists);
  rp.poly = lift(e, n, slot, rp.dists, n + rp.dists.size());
  return rp;
}

}  // namespace

bool mentions(const Guard& g, std::size_t var) {
  if (g.kind == Guard::Kind::Atom) return expr_mentions(*g.lhs, var) || expr_mentions(*g.rhs, var);
  return (g.a && mentions(*g.a, var)) || (g.b && mentions(*g.b, var));
}

GuardedExpectation wp_assign(std::size_t var, const ExprPtr& ep, const GuardedExpectation& post,
                             const WpOptions& opts) {
  const Expr& e = *ep;
  const std::size_t n = post.num_vars;
  GuardedExpectation out(n);
  if (!has_random(e)) {
    Polynomial r = to_polynomial(e, n);
    for (const auto& b : post.branches) {
      GuardPtr g = mentions(*b.guard, var) ? substitute(b.guard, var, ep) : b.guard;
      out.branches.push_back({g, substitute(b.value, var, r)});
    }
    return out;
  }

  RandomPoly rp = to_random_poly(e, n);
  const std::size_t total = rp.poly.num_vars();
  if (opts.paper_literal) {
    // Replace every random symbol by its mean before substituting.
    std::vector<Polynomial> reps;
    for (std::size_t v = 0; v < total; ++v)
      reps.push_back(v < n ? Polynomial::variable(n, v)
                           : Polynomial::constant(n, mean(*rp.dists[v - n])));
    Polynomial r = compose(rp.poly, std::span<const Polynomial>(reps));
    for (const auto& b : post.branches) {
      if (mentions(*b.guard, var))
        throw Error("random assignment to a variable that occurs in a branch guard");
      out.branches.push_back({b.guard, substitute(b.value, var, r)});
    }
    return out;
  }

  std::vector<Polynomial> reps;
  for (std::size_t v = 0; v < n; ++v)
    reps.push_back(v == var ? rp.poly : Polynomial::variable(total, v));
  for (const auto& b : post.branches) {
    if (mentions(*b.guard, var))
      throw Error("random assignment to a variable that occurs in a branch guard");
    ParamPolynomial lifted = compose(b.value, std::span<const Polynomial>(reps));
    ParamPolynomial expected(n);
    for (const auto& [m, c] : lifted.terms()) {
      Polynomial factor = Polynomial::constant(n, 1);
      std::vector<std::uint16_t> exps(n);
      for (std::size_t v = 0; v < total; ++v) {
        if (v < n)
          exps[v] = static_cast<std::uint16_t>(m[v]);
        else if (m[v])
          factor = factor * moment_polynomial(*rp.dists[v - n], m[v], n);
      }
      expected += ParamPolynomial::term(Monomial(std::move(exps)), c) * factor;
    }
    out.branches.push_back({b.guard, std::move(expected)});
  }
  return out;
}

GuardedExpectation operator*(const Rational& s, const GuardedExpectation& e) {
  GuardedExpectation out(e.num_vars);
  if (sgn(s) == 0) return out;
  for (const auto& b : e.branches) out.branches.push_back({b.guard, b.value * s});
  return out;
}

GuardedExpectation dnf_normalize(const GuardedExpectation& e) {
  std::vector<GuardedExpectation::Branch> acc;
  for (const auto& nb : e.branches) {
    bool merged = false;
    for (auto& b : acc)
      if (equal(*b.guard, *nb.guard)) {
        b.value += nb.value;
        merged = true;
        break;
      }
    if (merged) continue;
    std::vector<GuardedExpectation::Branch> next;
    std::vector<GuardPtr> rest{nb.guard};
    for (const auto& b : acc) {
      GuardPtr both = conj(b.guard, nb.guard);
      if (both->kind != Guard::Kind::False) next.push_back({both, b.value + nb.value});
      for (auto& piece : minus(b.guard, nb.guard)) next.push_back({piece, b.value});
      std::vector<GuardPtr> still;
      for (const auto& r : rest)
        for (auto& piece : minus(r, b.guard)) still.push_back(piece);
      rest = std::move(still);
    }
    for (auto& r : rest) next.push_back({r, nb.value});
    acc = std::move(next);
  }
  GuardedExpectation out(e.num_vars);
  for (auto& b : acc)
    if (!b.value.is_zero()) out.branches.push_back(std::move(b));
  return out;
}

GuardedExpectation operator+(const GuardedExpectation& a, const GuardedExpectation& b) {
  if (a.num_vars != b.num_vars) throw Error("expectation arity mismatch");
  if (a.branches.empty()) return b;
  if (b.branches.empty()) return a;
  bool aligned = a.branches.size() == b.branches.size();
  for (std::size_t i = 0; aligned && i < a.branches.size(); ++i)
    aligned = equal(*a.branches[i].guard, *b.branches[i].guard);
  if (aligned) {
    GuardedExpectation out(a.num_vars);
    for (std::size_t i = 0; i < a.branches.size(); ++i) {
      ParamPolynomial v = a.branches[i].value + b.branches[i].value;
      if (!v.is_zero()) out.branches.push_back({a.branches[i].guard, std::move(v)});
    }
    return out;
  }
  GuardedExpectation both(a.num_vars);
  both.branches = a.branches;
  both.branches.insert(both.branches.end(), b.branches.begin(), b.branches.end());
  return dnf_normalize(both);
}

GuardedExpectation wp(const Stmt& s, const GuardedExpectation& post, const WpOptions& opts) {
  switch (s.kind) {
    case Stmt::Kind::Skip: return post;
    case Stmt::Kind::Abort: return GuardedExpectation(post.num_vars);
    case Stmt::Kind::Assign: return wp_assign(s.var, s.expr, post, opts);
    case Stmt::Kind::Seq: {
      GuardedExpectation cur = post;
      for (auto it = s.body.rbegin(); it != s.body.rend(); ++it) cur = wp(**it, cur, opts);
      return cur;
    }
    case Stmt::Kind::Prob:
      return s.prob * wp(*s.body[0], post, opts) + (Rational(1) - s.prob) * wp(*s.body[1], post, opts);
    case Stmt::Kind::Ite: {
      GuardedExpectation out(post.num_vars);
      GuardPtr g = s.guard, ng = negation(s.guard);
      for (const auto& b : wp(*s.body[0], post, opts).branches)
        out.branches.push_back({conj(g, b.guard), b.value});
      for (const auto& b : wp(*s.body[1], post, opts).branches)
        out.branches.push_back({conj(ng, b.guard), b.value});
      return out;
    }
    case Stmt::Kind::While: throw Error("wp of a loop is not computed directly");
  }
  return post;
}

GuardedExpectation to_guarded(const Expectation& e, std::size_t num_vars) {
  GuardedExpectation out(num_vars);
  for (const auto& t : e.terms) {
    ParamPolynomial v = to_param(to_polynomial(*t.expr, num_vars));
    if (v.is_zero()) continue;
    out.branches.push_back({t.guard ? t.guard : make_true(), std::move(v)});
  }
  return dnf_normalize(out);
}

std::string to_string(const GuardedExpectation& e, std::span<const std::string> names,
                      const ParamTable& table) {
  if (e.branches.empty()) return "0";
  std::string out;
  for (const auto& b : e.branches) {
    if (!out.empty()) out += " + ";
    std::string v = "(" + to_string(b.value, names, table) + ")";
    out += b.guard->kind == Guard::Kind::True ? v : "[" + to_string(*b.guard, names) + "] * " + v;
  }
  return out;
}

}  // namespace piq
