#include "piq/sos.hpp"

#include "piq/exact.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <set>
#include <tuple>

namespace piq {

ParamId GramBlock::at(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  const std::size_t n = basis.size();
  return entries.at(i * n - i * (i - 1) / 2 + (j - i));
}

ParamPolynomial GramBlock::expand(std::size_t num_vars) const {
  ParamPolynomial out(num_vars);
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = i; j < basis.size(); ++j)
      out.add_term(basis[i] * basis[j], AffineForm::parameter(at(i, j), Rational(i == j ? 1 : 2)));
  return out;
}

GramBlock make_gram_block(std::vector<Monomial> basis, ParamTable& table, const std::string& tag) {
  GramBlock b;
  b.basis = std::move(basis);
  b.tag = tag;
  for (std::size_t i = 0; i < b.basis.size(); ++i)
    for (std::size_t j = i; j < b.basis.size(); ++j)
      b.entries.push_back(table.add("A" + std::to_string(table.size()), ParamKind::GramEntry));
  return b;
}

namespace {

ParamPolynomial scalar(std::size_t n, ParamId id) {
  return ParamPolynomial::constant(n, AffineForm::parameter(id));
}

ParamPolynomial free_poly(std::size_t n, unsigned degree, ParamTable& table, std::vector<ParamId>& out) {
  ParamPolynomial p(n);
  for (const auto& m : monomials_up_to(n, degree)) {
    ParamId id = table.add("v" + std::to_string(table.size()), ParamKind::FreeMultiplier);
    out.push_back(id);
    p.add_term(m, AffineForm::parameter(id));
  }
  return p;
}

// Nonnegative multiplier of the given even degree: a scalar or an SOS block.
ParamPolynomial nonneg_multiplier(std::size_t n, unsigned degree, ParamTable& table, SosConstraint& s,
                                  const std::string& tag) {
  if (degree == 0) {
    ParamId id = table.add("u" + std::to_string(table.size()), ParamKind::NonnegMultiplier);
    s.multipliers.push_back(id);
    return scalar(n, id);
  }
  s.multiplier_blocks.push_back(make_gram_block(monomials_up_to(n, degree / 2), table, tag));
  return s.multiplier_blocks.back().expand(n);
}

}  // namespace

std::optional<ImplicationConstraint> eliminate_equalities(const ImplicationConstraint& c) {
  const std::size_t n = c.consequent.num_vars();
  std::vector<Polynomial> eqs;
  for (const auto& a : c.antecedent)
    if (a.rel == VcAtom::Kind::Eq && a.p.degree() <= 1) eqs.push_back(a.p);
  if (eqs.empty()) return c;
  LinearElimination e = solve_linear(eqs, n);
  if (!e.consistent) return std::nullopt;
  std::vector<Polynomial> repl;
  for (std::size_t v = 0; v < n; ++v) repl.push_back(Polynomial::variable(n, v));
  for (std::size_t i = 0; i < e.pivot_var.size(); ++i) {
    Polynomial r = Polynomial::constant(n, e.constant[i]);
    for (const auto& [j, k] : e.terms[i]) r += Polynomial::variable(n, j) * k;
    repl[e.pivot_var[i]] = std::move(r);
  }
  ImplicationConstraint out = c;
  out.antecedent.clear();
  out.consequent = compose(c.consequent, std::span<const Polynomial>(repl));
  for (const auto& a : c.antecedent) {
    if (a.rel == VcAtom::Kind::Eq && a.p.degree() <= 1) continue;
    Polynomial p = compose(a.p, std::span<const Polynomial>(repl));
    if (p.degree() <= 0) {
      const int s = sgn(p.coefficient(Monomial(n)));
      if (a.rel == VcAtom::Kind::Eq ? s != 0 : s < 0) return std::nullopt;
      continue;
    }
    out.antecedent.push_back({std::move(p), a.rel});
  }
  return out;
}

SosConstraint relax_simple(const ImplicationConstraint& c0, ParamTable& table, const RelaxOptions& opts) {
  const std::size_t n = c0.consequent.num_vars();
  SosConstraint s;
  s.tag = c0.tag;
  s.required = c0.required;
  std::optional<ImplicationConstraint> reduced;
  if (opts.eliminate_equalities) {
    reduced = eliminate_equalities(c0);
    if (!reduced) {
      // No real point satisfies the antecedent.
      s.identity = true;
      s.residual = ParamPolynomial(n);
      return s;
    }
  }
  const ImplicationConstraint& c = reduced ? *reduced : c0;
  s.residual = c.consequent;
  std::vector<Polynomial> ge;
  for (const auto& a : c.antecedent) {
    if (a.rel == VcAtom::Kind::Ge) {
      ge.push_back(a.p);
    } else {
      int d = static_cast<int>(opts.mult_degree);
      if (opts.eq_polynomial) d = std::max(d, c.consequent.degree() - a.p.degree());
      s.residual = s.residual - free_poly(n, static_cast<unsigned>(std::max(d, 0)), table, s.multipliers) * a.p;
    }
  }
  std::vector<Polynomial> products = ge;
  if (opts.all_products) {
    const std::size_t k = ge.size();
    if (k > 10) throw Error("too many antecedent atoms for the product relaxation");
    for (std::size_t mask = 1; mask < (std::size_t{1} << k); ++mask) {
      if (std::popcount(mask) < 2) continue;
      Polynomial p = Polynomial::constant(n, 1);
      for (std::size_t i = 0; i < k; ++i)
        if (mask >> i & 1) p = p * ge[i];
      products.push_back(p);
    }
  } else if (opts.products) {
    for (std::size_t i = 0; i < ge.size(); ++i)
      for (std::size_t j = i; j < ge.size(); ++j) products.push_back(ge[i] * ge[j]);
  }
  for (std::size_t i = 0; i < products.size(); ++i) {
    auto r = nonneg_multiplier(n, opts.mult_degree, table, s, c.tag + ".r" + std::to_string(i));
    s.residual = s.residual - r * products[i];
  }
  return s;
}

SosConstraint encode_emptiness(const std::vector<Polynomial>& ge, const std::vector<Polynomial>& eq,
                               const std::optional<Polynomial>& m, std::size_t n, ParamTable& table,
                               const StengleOptions& opts, const std::string& tag) {
  if (ge.size() > opts.max_atoms) throw Error("too many atoms for a Stengle certificate");
  SosConstraint s;
  s.tag = tag;
  s.identity = true;
  Polynomial monoid = m ? pow(*m, 2 * opts.power) : Polynomial::constant(n, 1);
  const int target = std::max<int>(static_cast<int>(opts.degree), monoid.degree());
  s.residual = to_param(monoid);
  std::size_t total = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << ge.size()); ++mask) {
    Polynomial prod = Polynomial::constant(n, 1);
    for (std::size_t i = 0; i < ge.size(); ++i)
      if (mask >> i & 1) prod = prod * ge[i];
    if (prod.is_zero()) continue;
    int e = std::max(0, (target - prod.degree()) / 2);
    auto basis = monomials_up_to(n, static_cast<unsigned>(e));
    total += basis.size();
    if (total > opts.basis_cap) throw Error("Stengle certificate basis exceeds the configured cap");
    s.multiplier_blocks.push_back(make_gram_block(std::move(basis), table, tag + ".u" + std::to_string(mask)));
    s.residual = s.residual + s.multiplier_blocks.back().expand(n) * prod;
  }
  for (const auto& h : eq) {
    unsigned d = static_cast<unsigned>(std::max(0, target - h.degree()));
    s.residual = s.residual + free_poly(n, d, table, s.multipliers) * h;
  }
  return s;
}

SosConstraint encode_stengle(const ImplicationConstraint& c, std::size_t n, ParamTable& table,
                             const StengleOptions& opts) {
  if (!is_parameter_free(c.consequent)) throw Error("Stengle encoding needs a fixed candidate");
  Polynomial g = to_constant(c.consequent);
  std::vector<Polynomial> ge, eq;
  for (const auto& a : c.antecedent) (a.rel == VcAtom::Kind::Ge ? ge : eq).push_back(a.p);
  ge.push_back(-g);
  SosConstraint s = encode_emptiness(ge, eq, g, n, table, opts, c.tag);
  s.required = c.required;
  return s;
}

namespace {

std::vector<Monomial> newton_filter(const std::vector<Monomial>& basis,
                                    const std::vector<Monomial>& support, std::size_t n) {
  if (support.empty()) return {};
  std::vector<unsigned> lo(n, ~0u), hi(n, 0);
  unsigned dlo = ~0u, dhi = 0;
  for (const auto& m : support) {
    for (std::size_t v = 0; v < n; ++v) {
      lo[v] = std::min(lo[v], m[v]);
      hi[v] = std::max(hi[v], m[v]);
    }
    dlo = std::min(dlo, m.degree());
    dhi = std::max(dhi, m.degree());
  }
  std::vector<Monomial> out;
  for (const auto& m : basis) {
    bool keep = 2 * m.degree() >= dlo && 2 * m.degree() <= dhi;
    for (std::size_t v = 0; v < n && keep; ++v) keep = 2 * m[v] >= lo[v] && 2 * m[v] <= hi[v];
    if (keep) out.push_back(m);
  }
  return out;
}

}  // namespace

Gramified gramify(const SosConstraint& s, std::size_t n, ParamTable& table, const GramOptions& opts) {
  Gramified out;
  if (s.identity) {
    for (const auto& [m, c] : s.residual.terms()) out.rows.push_back(c);
    return out;
  }
  const int deg = s.residual.degree();
  if (deg < 0) return out;
  if (deg % 2 == 1 && is_parameter_free(s.residual))
    throw Error("residual of odd degree " + std::to_string(deg) + " cannot be a sum of squares");
  auto basis = monomials_up_to(n, static_cast<unsigned>(deg / 2));
  if (opts.newton) {
    std::vector<Monomial> support;
    for (const auto& [m, c] : s.residual.terms()) support.push_back(m);
    basis = newton_filter(basis, support, n);
  }
  if (basis.size() > opts.basis_cap) throw Error("Gram basis exceeds the configured cap");
  ParamPolynomial diff = s.residual;
  if (!basis.empty()) {
    out.block = make_gram_block(std::move(basis), table, s.tag);
    diff = diff - out.block->expand(n);
  }
  for (const auto& [m, c] : diff.terms()) out.rows.push_back(c);
  return out;
}

void finalize(SosProgram& prog, const GramOptions& opts) {
  prog.blocks.clear();
  prog.rows.clear();
  std::set<std::pair<std::vector<std::pair<ParamId, Rational>>, Rational>> seen;
  auto add_row = [&](AffineForm row) {
    if (row.is_zero()) return;
    if (row.is_constant()) {
      prog.trivially_infeasible = true;
      if (prog.infeasible_reason.empty())
        prog.infeasible_reason = "constant equality " + to_string(row.constant()) + " = 0";
      return;
    }
    row *= Rational(1) / row.linear().begin()->second;
    std::vector<std::pair<ParamId, Rational>> key(row.linear().begin(), row.linear().end());
    if (seen.emplace(std::move(key), row.constant()).second) prog.rows.push_back(std::move(row));
  };
  for (const auto& s : prog.constraints) {
    for (const auto& b : s.multiplier_blocks) prog.blocks.push_back(b);
    Gramified g = gramify(s, prog.num_vars, prog.params, opts);
    if (g.block) prog.blocks.push_back(std::move(*g.block));
    for (auto& r : g.rows) add_row(std::move(r));
  }
  prog.fixed.clear();
  if (opts.reduce && !prog.trivially_infeasible) reduce_faces(prog);
}

void reduce_faces(SosProgram& prog) {
  struct Pos {
    std::size_t block, index;
  };
  std::map<ParamId, Pos> diag;
  std::set<ParamId> in_block;
  for (std::size_t k = 0; k < prog.blocks.size(); ++k) {
    const auto& b = prog.blocks[k];
    for (std::size_t i = 0; i < b.size(); ++i) {
      diag[b.at(i, i)] = {k, i};
      for (std::size_t j = 0; j < b.size(); ++j) in_block.insert(b.at(i, j));
    }
  }
  auto nonneg = [&](ParamId id) {
    return diag.count(id) || (!in_block.count(id) && prog.params[id].kind == ParamKind::NonnegMultiplier);
  };
  auto is_free = [&](ParamId id) {
    auto k = prog.params[id].kind;
    return k == ParamKind::TemplateCoefficient || k == ParamKind::FreeMultiplier;
  };
  std::vector<std::vector<bool>> dropped(prog.blocks.size());
  for (std::size_t k = 0; k < prog.blocks.size(); ++k) dropped[k].assign(prog.blocks[k].size(), false);

  bool changed = false;
  auto infeasible = [&](const std::string& why) {
    prog.trivially_infeasible = true;
    if (prog.infeasible_reason.empty()) prog.infeasible_reason = why;
  };
  std::function<void(ParamId, const Rational&)> fix = [&](ParamId id, const Rational& v) {
    if (auto it = prog.fixed.find(id); it != prog.fixed.end()) {
      if (it->second != v) infeasible("conflicting values for " + prog.params[id].name);
      return;
    }
    if (nonneg(id) && sgn(v) < 0) {
      infeasible(prog.params[id].name + " must be nonnegative but equals " + to_string(v));
      return;
    }
    prog.fixed.emplace(id, v);
    changed = true;
    if (auto d = diag.find(id); d != diag.end() && sgn(v) == 0) {
      const auto [k, i] = d->second;
      dropped[k][i] = true;
      for (std::size_t j = 0; j < prog.blocks[k].size(); ++j) fix(prog.blocks[k].at(i, j), 0);
    }
  };
  // Where each entry sits inside its block.
  std::map<ParamId, std::tuple<std::size_t, std::size_t, std::size_t>> where;
  for (std::size_t k = 0; k < prog.blocks.size(); ++k) {
    const auto& b = prog.blocks[k];
    for (std::size_t i = 0; i < b.size(); ++i)
      for (std::size_t j = i; j < b.size(); ++j) where[b.at(i, j)] = {k, i, j};
  }
  auto positive_definite = [](RationalMatrix m) {
    for (std::size_t c = 0; c < m.size(); ++c) {
      if (sgn(m[c][c]) <= 0) return false;
      for (std::size_t r = c + 1; r < m.size(); ++r) {
        Rational f = m[r][c] / m[c][c];
        for (std::size_t j = c; j < m.size(); ++j) m[r][j] -= f * m[c][j];
      }
    }
    return true;
  };
  // sum <S_k, X_k> + sum a_i u_i = -constant with every S_k definite on its
  // support and a_i of the same sign: the left side has a sign, and with
  // constant 0 every entry involved vanishes.
  auto cone_row = [&](const AffineForm& r) {
    struct Part {
      std::vector<std::size_t> support;
      std::vector<std::tuple<std::size_t, std::size_t, Rational>> entries;
    };
    std::map<std::size_t, Part> parts;
    std::vector<Rational> scalars;
    for (const auto& [id, c] : r.linear()) {
      if (auto w = where.find(id); w != where.end()) {
        auto [k, i, j] = w->second;
        auto& part = parts[k];
        part.support.push_back(i);
        part.support.push_back(j);
        part.entries.emplace_back(i, j, c);
      } else if (prog.params[id].kind == ParamKind::NonnegMultiplier) {
        scalars.push_back(c);
      } else {
        return;
      }
    }
    for (int s : {1, -1}) {
      bool ok = true;
      for (const auto& a : scalars) ok = ok && sgn(a) * s > 0;
      for (auto& [k, part] : parts) {
        if (!ok) break;
        auto& sup = part.support;
        std::sort(sup.begin(), sup.end());
        sup.erase(std::unique(sup.begin(), sup.end()), sup.end());
        RationalMatrix m(sup.size(), std::vector<Rational>(sup.size()));
        auto at = [&](std::size_t v) { return std::size_t(std::lower_bound(sup.begin(), sup.end(), v) - sup.begin()); };
        for (const auto& [i, j, c] : part.entries) {
          const std::size_t a = at(i), b = at(j);
          if (a == b) {
            m[a][a] += c * s;
          } else {
            m[a][b] += c * s / 2;
            m[b][a] += c * s / 2;
          }
        }
        ok = positive_definite(std::move(m));
      }
      if (!ok) continue;
      const int cs = sgn(r.constant()) * s;
      if (cs == 0) {
        for (const auto& [id, c] : r.linear()) {
          if (auto w = where.find(id); w != where.end()) {
            auto [k, i, j] = w->second;
            fix(prog.blocks[k].at(i, i), 0);
            fix(prog.blocks[k].at(j, j), 0);
          } else {
            fix(id, 0);
          }
        }
      } else if (cs > 0) {
        infeasible("a nonnegative combination of cone entries equals a negative constant");
      }
      return;
    }
  };
  auto deduce = [&](const AffineForm& r) {
    if (r.is_zero()) return;
    if (r.is_constant()) {
      infeasible("constant equality " + to_string(r.constant()) + " = 0");
    } else if (r.linear().size() == 1) {
      const auto& [id, c] = *r.linear().begin();
      fix(id, -r.constant() / c);
    } else {
      cone_row(r);
    }
  };
  auto substitute = [&](AffineForm& r) {
    AffineForm out(r.constant());
    for (const auto& [id, c] : r.linear()) {
      if (auto it = prog.fixed.find(id); it != prog.fixed.end()) out += AffineForm(c * it->second);
      else out += AffineForm::parameter(id, c);
    }
    r = std::move(out);
  };

  constexpr std::size_t kRowLimit = 256;
  do {
    changed = false;
    std::vector<AffineForm> kept;
    for (auto& r : prog.rows) {
      substitute(r);
      deduce(r);
      if (!r.is_zero()) kept.push_back(std::move(r));
    }
    prog.rows = std::move(kept);
    if (changed || prog.trivially_infeasible) continue;
    // Eliminate free columns; rows left without them speak about the cone only.
    std::vector<AffineForm> pivots;
    std::map<ParamId, std::size_t> pivot_of;
    std::vector<ParamId> pivot_var;
    for (const auto& row : prog.rows) {
      AffineForm r = row;
      substitute(r);
      bool blown = false;
      for (;;) {
        std::size_t best = pivots.size();
        for (const auto& [id, c] : r.linear())
          if (auto it = pivot_of.find(id); it != pivot_of.end()) best = std::min(best, it->second);
        if (best == pivots.size()) break;
        const AffineForm& p = pivots[best];
        const ParamId v = pivot_var[best];
        r -= p * (r.coefficient(v) / p.coefficient(v));
        if (r.linear().size() > kRowLimit) {
          blown = true;
          break;
        }
      }
      if (blown) continue;
      ParamId lead{};
      bool has_free = false;
      for (const auto& [id, c] : r.linear())
        if (is_free(id)) {
          lead = id;
          has_free = true;
          break;
        }
      if (!has_free || r.linear().size() == 1) {
        deduce(r);
        if (changed || prog.trivially_infeasible) break;
        if (!has_free) continue;
      }
      pivot_of.emplace(lead, pivots.size());
      pivot_var.push_back(lead);
      pivots.push_back(std::move(r));
    }
  } while (changed && !prog.trivially_infeasible);
  if (prog.trivially_infeasible) return;

  for (std::size_t k = 0; k < prog.blocks.size(); ++k) {
    GramBlock& b = prog.blocks[k];
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < b.size(); ++i)
      if (!dropped[k][i]) keep.push_back(i);
    if (keep.size() == b.size()) continue;
    GramBlock nb;
    nb.tag = b.tag;
    for (std::size_t a = 0; a < keep.size(); ++a) {
      nb.basis.push_back(b.basis[keep[a]]);
      for (std::size_t c = a; c < keep.size(); ++c) nb.entries.push_back(b.at(keep[a], keep[c]));
    }
    b = std::move(nb);
  }
  // Surviving cone entries keep their variable; pin them with a row.
  for (const auto& b : prog.blocks)
    for (ParamId id : b.entries)
      if (auto it = prog.fixed.find(id); it != prog.fixed.end()) {
        prog.rows.push_back(AffineForm::parameter(id) - AffineForm(it->second));
        prog.fixed.erase(it);
      }
}

bool gram_identity_holds(const SosConstraint& s, const GramBlock* block, const Assignment& values,
                         std::size_t n) {
  Polynomial lhs = instantiate(s.residual, values);
  if (s.identity) return lhs.is_zero();
  Polynomial rhs = block ? instantiate(block->expand(n), values) : Polynomial(n);
  return lhs == rhs;
}

}  // namespace piq

namespace piq {

Assembled assemble(const SosProgram& prog) {
  Assembled a;
  a.refs.resize(prog.params.size());
  std::vector<bool> placed(prog.params.size(), false);
  for (const auto& b : prog.blocks) {
    if (b.size() == 0) continue;
    const auto k = static_cast<std::uint32_t>(a.problem.block_sizes.size());
    a.problem.block_sizes.push_back(b.size());
    for (std::uint32_t i = 0; i < b.size(); ++i)
      for (std::uint32_t j = i; j < b.size(); ++j) {
        ParamId id = b.at(i, j);
        a.refs[id.value] = {false, 0, k, i, j};
        placed[id.value] = true;
      }
  }
  std::uint32_t nf = 0;
  for (std::uint32_t id = 0; id < prog.params.size(); ++id) {
    if (placed[id]) continue;
    if (auto it = prog.fixed.find(ParamId{id}); it != prog.fixed.end()) {
      a.refs[id].fixed = true;
      a.refs[id].value = it->second.get_d();
      continue;
    }
    switch (prog.params[ParamId{id}].kind) {
      case ParamKind::NonnegMultiplier:
        a.refs[id] = {false, 0, static_cast<std::uint32_t>(a.problem.block_sizes.size()), 0, 0};
        a.problem.block_sizes.push_back(1);
        break;
      case ParamKind::GramEntry:
        throw Error("Gram entry " + prog.params[ParamId{id}].name + " belongs to no block");
      default:
        a.refs[id] = {true, nf++, 0, 0, 0};
    }
  }
  a.problem.num_free = nf;
  for (const auto& row : prog.rows) {
    SdpRow r;
    r.rhs = -row.constant().get_d();
    for (const auto& [id, c] : row.linear()) {
      const auto& ref = a.refs[id.value];
      if (ref.free) r.free.emplace_back(ref.index, c.get_d());
      else r.entries.push_back({ref.block, ref.row, ref.col, c.get_d()});
    }
    a.problem.rows.push_back(std::move(r));
  }
  return a;
}

std::vector<double> parameter_values(const Assembled& a, const SdpSolution& s) {
  std::vector<double> out(a.refs.size(), 0.0);
  for (std::size_t id = 0; id < a.refs.size(); ++id) {
    const auto& ref = a.refs[id];
    if (ref.fixed) {
      out[id] = ref.value;
    } else if (ref.free) {
      if (ref.index < s.free.size()) out[id] = s.free[ref.index];
    } else if (ref.block < s.blocks.size()) {
      out[id] = s.blocks[ref.block](ref.row, ref.col);
    }
  }
  return out;
}

}  // namespace piq
