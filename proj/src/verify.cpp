#include "piq/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

namespace piq {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Verified: return "Verified";
    case Verdict::CandidateUnverified: return "CandidateUnverified";
    case Verdict::Failed: return "Failed";
  }
  return "?";
}

namespace {

// Rows G k = 0 for rational kernel vectors k read off the near-null
// eigenvectors of the solver's Gram blocks, and u = 0 for vanishing
// nonnegative multipliers.
std::vector<AffineForm> kernel_rows(const SosProgram& prog, const std::vector<double>& values, double tol) {
  std::vector<AffineForm> out;
  std::vector<bool> in_block(prog.params.size(), false);
  RoundOptions small;
  small.max_denominator = 1000;
  for (const auto& b : prog.blocks) {
    const std::size_t n = b.size();
    if (n == 0) continue;
    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        in_block[b.at(i, j).value] = true;
        m(i, j) = values.at(b.at(i, j).value);
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const auto& ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    std::vector<Eigen::VectorXd> null;
    for (std::size_t i = 0; i < n; ++i)
      if (ev(i) < tol * scale) null.push_back(es.eigenvectors().col(i));
    if (null.empty()) continue;
    // Reduced row echelon form of the null basis, then small rationals.
    Eigen::MatrixXd k(null.size(), n);
    for (std::size_t r = 0; r < null.size(); ++r) k.row(r) = null[r].transpose();
    std::size_t row = 0;
    for (std::size_t c = 0; c < n && row < null.size(); ++c) {
      Eigen::Index piv;
      const double mx = k.col(c).tail(null.size() - row).cwiseAbs().maxCoeff(&piv);
      if (mx < 1e-8) continue;
      k.row(row).swap(k.row(row + piv));
      k.row(row) /= k(row, c);
      for (std::size_t r = 0; r < null.size(); ++r)
        if (r != row) k.row(r) -= k(r, c) * k.row(row);
      ++row;
    }
    for (std::size_t r = 0; r < row; ++r) {
      std::vector<Rational> v(n);
      for (std::size_t j = 0; j < n; ++j) v[j] = round_value(k(r, j), small);
      for (std::size_t i = 0; i < n; ++i) {
        AffineForm f;
        for (std::size_t j = 0; j < n; ++j)
          if (sgn(v[j]) != 0) f += AffineForm::parameter(b.at(i, j), v[j]);
        if (!f.is_zero()) out.push_back(std::move(f));
      }
    }
  }
  for (std::size_t i = 0; i < prog.params.size(); ++i) {
    ParamId id{static_cast<std::uint32_t>(i)};
    if (!in_block[i] && prog.params[id].kind == ParamKind::NonnegMultiplier && !prog.fixed.count(id) &&
        i < values.size() && std::abs(values[i]) < tol)
      out.push_back(AffineForm::parameter(id));
  }
  return out;
}

}  // namespace

std::optional<Assignment> exact_certificate(const SosProgram& prog, const std::vector<double>& values,
                                            const RoundOptions& rounding) {
  if (prog.trivially_infeasible) return std::nullopt;
  std::vector<RoundOptions> tries{rounding};
  RoundOptions fine = rounding;
  fine.max_denominator = std::max(rounding.max_denominator, 1000000L);
  tries.push_back(fine);
  std::vector<std::vector<AffineForm>> systems{prog.rows};
  for (double tol : {1e-6, 1e-4}) {
    auto extra = kernel_rows(prog, values, tol);
    if (extra.empty()) continue;
    auto rows = prog.rows;
    rows.insert(rows.end(), extra.begin(), extra.end());
    if (rows != systems.back()) systems.push_back(std::move(rows));
  }
  for (const auto& rows : systems)
    for (const auto& r : tries) {
      Assignment start;
      for (std::size_t i = 0; i < prog.params.size(); ++i)
        start[ParamId{static_cast<std::uint32_t>(i)}] = i < values.size() ? round_value(values[i], r) : Rational(0);
      for (const auto& [id, v] : prog.fixed) start[id] = v;
      auto x = project_onto(rows, start);
      if (!x) continue;
      bool ok = true;
      for (const auto& row : prog.rows) ok = ok && sgn(row.evaluate(*x)) == 0;
      for (std::size_t i = 0; ok && i < prog.params.size(); ++i) {
        ParamId id{static_cast<std::uint32_t>(i)};
        if (prog.params[id].kind == ParamKind::NonnegMultiplier) ok = sgn((*x)[id]) >= 0;
      }
      for (const auto& b : prog.blocks) {
        if (!ok) break;
        RationalMatrix m(b.size(), std::vector<Rational>(b.size()));
        for (std::size_t i = 0; i < b.size(); ++i)
          for (std::size_t j = 0; j < b.size(); ++j) m[i][j] = (*x)[b.at(i, j)];
        ok = is_psd(std::move(m));
      }
      if (ok) return x;
    }
  return std::nullopt;
}

namespace {

using Clock = std::chrono::steady_clock;

// Independent re-check: residual minus every Gram expansion is zero.
bool identity_holds(const SosProgram& prog, const Assignment& x) {
  const auto& s = prog.constraints.front();
  const GramBlock* own = prog.blocks.size() > s.multiplier_blocks.size() ? &prog.blocks.back() : nullptr;
  return gram_identity_holds(s, own, x, prog.num_vars);
}

bool attempt(const SosConstraint& s, const ParamTable& table, std::size_t n, const VerifyConfig& cfg,
             const std::string& kind, ConstraintReport& out) {
  SosProgram prog;
  prog.num_vars = n;
  prog.params = table;
  prog.constraints = {s};
  GramOptions g;
  g.newton = true;
  g.basis_cap = cfg.stengle_opts.basis_cap;
  try {
    finalize(prog, g);
  } catch (const Error& e) {
    if (out.note.empty()) out.note = e.what();
    return false;
  }
  if (prog.trivially_infeasible) {
    out.sdp_status = SdpStatus::Infeasible;
    return false;
  }
  std::vector<double> vals(prog.params.size(), 0.0);
  if (!prog.rows.empty()) {
    Assembled a = assemble(prog);
    SdpSolution sol;
    try {
      sol = solve_feasibility(a.problem, cfg.solver);
    } catch (const Error& e) {
      if (out.note.empty()) out.note = e.what();
      return false;
    }
    if (out.sdp_status != SdpStatus::Feasible) {
      out.sdp_status = sol.status;
      out.margin = sol.margin;
    }
    if (sol.status != SdpStatus::Feasible) return false;
    out.margin = std::max(out.margin, sol.margin);
    if (sol.margin >= cfg.solver.psd_tol) out.numeric_certificate = true;
    vals = parameter_values(a, sol);
  } else {
    out.sdp_status = SdpStatus::Feasible;
  }
  auto x = exact_certificate(prog, vals, cfg.rounding);
  if (x && identity_holds(prog, *x)) {
    out.exact_certificate = true;
    out.certificate_kind = kind;
    out.gram_sizes.clear();
    for (const auto& b : prog.blocks) out.gram_sizes.push_back(b.size());
  }
  return out.certified();
}

std::uint64_t fnv(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

LinearElimination eliminate(const std::vector<VcAtom>& atoms, std::size_t n) {
  std::vector<Polynomial> eqs;
  for (const auto& at : atoms)
    if (at.rel == VcAtom::Kind::Eq && at.p.degree() <= 1) eqs.push_back(at.p);
  return solve_linear(eqs, n);
}

bool less_point(const Counterexample& a, const Counterexample& b) {
  auto norm = [](const Counterexample& c) {
    Rational s = 0;
    for (const auto& v : c.point) s += abs(v);
    return s;
  };
  Rational na = norm(a), nb = norm(b);
  if (na != nb) return na < nb;
  return std::lexicographical_compare(a.point.begin(), a.point.end(), b.point.begin(), b.point.end(),
                                      [](const Rational& x, const Rational& y) { return x < y; });
}

}  // namespace

void certify(const ImplicationConstraint& c, std::size_t n, const VerifyConfig& cfg, ConstraintReport& out) {
  if (!is_parameter_free(c.consequent)) throw Error("certify: constraint still has parameters");
  for (unsigned d : cfg.mult_degrees) {
    ParamTable table;
    RelaxOptions r;
    r.mult_degree = d;
    r.products = cfg.products;
    SosConstraint s = relax_simple(c, table, r);
    s.tag = c.tag;
    if (attempt(s, table, n, cfg, "simple/d" + std::to_string(d), out) && out.exact_certificate) return;
    if (out.certified()) return;
  }
  if (cfg.stengle) {
    ParamTable table;
    SosConstraint s;
    try {
      s = encode_stengle(c, n, table, cfg.stengle_opts);
    } catch (const Error& e) {
      if (out.note.empty()) out.note = e.what();
      return;
    }
    s.tag = c.tag;
    attempt(s, table, n, cfg, "stengle", out);
  }
}

void falsify(const ImplicationConstraint& c, std::size_t n, const VerifyConfig& cfg, ConstraintReport& out) {
  const Polynomial g = to_constant(c.consequent);
  std::vector<Counterexample> found;
  auto record = [&](std::vector<Rational> point) {
    if (!antecedent_holds(c.antecedent, point)) return;
    Rational v = evaluate(g, point);
    if (sgn(v) >= 0) return;
    found.push_back({std::move(point), v});
  };
  auto screen = [&](const std::vector<double>& x) {
    for (const auto& a : c.antecedent) {
      double v = evaluate(a.p, std::span<const double>(x));
      if (a.rel == VcAtom::Kind::Ge ? v < -cfg.tolerance : std::abs(v) > cfg.tolerance) return 0;
    }
    return evaluate(g, std::span<const double>(x)) < -cfg.tolerance ? 2 : 1;
  };

  // Integer grid.
  const int gb = cfg.grid_bound;
  if (gb >= 0 && n > 0) {
    const double side = 2.0 * gb + 1;
    const bool full = std::pow(side, double(n)) <= double(cfg.grid_cap);
    std::mt19937_64 rng(cfg.seed ^ fnv("grid:" + c.tag));
    std::uniform_int_distribution<int> pick(-gb, gb);
    std::vector<int> idx(n, -gb);
    const std::size_t total = full ? static_cast<std::size_t>(std::pow(side, double(n))) : cfg.grid_cap / 10;
    std::vector<double> x(n);
    for (std::size_t k = 0; k < total; ++k) {
      if (full) {
        for (std::size_t v = 0; v < n; ++v) x[v] = idx[v];
        for (std::size_t v = n; v-- > 0;) {
          if (++idx[v] <= gb) break;
          idx[v] = -gb;
        }
      } else {
        for (auto& v : x) v = pick(rng);
      }
      int s = screen(x);
      if (s == 0) continue;
      ++out.grid_points;
      if (s == 2) {
        std::vector<Rational> p(n);
        for (std::size_t v = 0; v < n; ++v) p[v] = Rational(x[v]);
        record(std::move(p));
      }
    }
  }

  auto tidy = [](std::vector<Counterexample>& v) {
    std::stable_sort(v.begin(), v.end(), less_point);
    v.erase(std::unique(v.begin(), v.end(),
                        [](const Counterexample& a, const Counterexample& b) { return a.point == b.point; }),
            v.end());
  };
  tidy(found);
  std::vector<Counterexample> grid_found = std::move(found);
  found.clear();

  // Box sampling with linear equalities solved exactly.
  LinearElimination e = eliminate(c.antecedent, n);
  if (e.consistent && cfg.samples > 0) {
    std::vector<double> cd;
    std::vector<std::vector<std::pair<std::size_t, double>>> td;
    for (std::size_t i = 0; i < e.pivot_var.size(); ++i) {
      cd.push_back(e.constant[i].get_d());
      std::vector<std::pair<std::size_t, double>> t;
      for (const auto& [j, v] : e.terms[i]) t.emplace_back(j, v.get_d());
      td.push_back(std::move(t));
    }
    std::mt19937_64 rng(cfg.seed ^ fnv("box:" + c.tag));
    std::uniform_real_distribution<double> u(-cfg.box_bound, cfg.box_bound);
    const std::size_t max_tries = 20 * cfg.samples;
    std::vector<double> x(n);
    while (out.samples_accepted < cfg.samples && out.samples_tried < max_tries) {
      ++out.samples_tried;
      for (std::size_t v = 0; v < n; ++v)
        if (!e.is_pivot[v]) x[v] = u(rng);
      e.apply(x, cd, td);
      bool inside = true;
      for (std::size_t v : e.pivot_var) inside = inside && std::abs(x[v]) <= cfg.box_bound;
      if (!inside) continue;
      int s = screen(x);
      if (s == 0) continue;
      ++out.samples_accepted;
      if (s == 2 && found.size() < 4 * cfg.max_counterexamples) {
        std::vector<Rational> p(n);
        for (std::size_t v = 0; v < n; ++v)
          if (!e.is_pivot[v]) p[v] = Rational(x[v]);
        e.apply(p);
        record(std::move(p));
      }
    }
  }
  if (!e.consistent && out.note.empty()) out.note = "antecedent equalities are inconsistent";
  out.vacuous_by_sampling = out.grid_points == 0 && out.samples_accepted == 0;
  // Integer grid points first.
  tidy(found);
  found.insert(found.begin(), grid_found.begin(), grid_found.end());
  if (found.size() > cfg.max_counterexamples) found.resize(cfg.max_counterexamples);
  out.counterexamples = std::move(found);
}

VerificationReport check_constraints(const std::vector<ImplicationConstraint>& constraints, std::size_t n,
                                     std::span<const std::string> names, const VerifyConfig& cfg) {
  const auto t0 = Clock::now();
  VerificationReport rep;
  ParamTable none;
  bool all_certified = true;
  for (const auto& c : constraints) {
    const auto t1 = Clock::now();
    ConstraintReport cr;
    cr.tag = c.tag;
    cr.required = c.required;
    cr.text = to_string(c, names, none);
    falsify(c, n, cfg, cr);
    certify(c, n, cfg, cr);
    cr.contradiction = cr.exact_certificate && cr.falsified();
    cr.seconds = std::chrono::duration<double>(Clock::now() - t1).count();
    if (cr.exact_certificate) ++rep.exact;
    else if (cr.numeric_certificate) ++rep.numeric;
    if (cr.falsified()) ++rep.falsified;
    all_certified = all_certified && cr.certified();
    rep.constraints.push_back(std::move(cr));
  }
  if (rep.falsified > 0) rep.verdict = Verdict::Failed;
  else if (!all_certified) rep.verdict = Verdict::CandidateUnverified;
  else rep.verdict = Verdict::Verified;
  rep.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return rep;
}

VerificationReport check_invariant(const Program& prog, const Polynomial& inv,
                                   const std::optional<Polynomial>& inner, const VerifyConfig& cfg,
                                   const WpOptions& wopts) {
  auto all = candidate_vcs(prog, inv, inner, wopts);
  std::vector<ImplicationConstraint> req;
  for (auto& c : all)
    if (c.required) req.push_back(std::move(c));
  return check_constraints(req, prog.num_vars(), prog.vars, cfg);
}

}  // namespace piq
