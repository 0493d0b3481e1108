#include "piq/refine.hpp"

#include <chrono>
#include <cmath>

namespace piq {

namespace {
using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }
}  // namespace

void SynthesisConfig::validate() const {
  if (d_start % 2 || d_step % 2 || d_max % 2) throw Error("template degrees must be even");
  if (d_step == 0) throw Error("degree step must be positive");
  if (d_max < d_start) throw Error("maximum degree is below the start degree");
  if (budget < 1) throw Error("refinement budget must be at least 1");
  if (mult_schedule.empty()) throw Error("empty multiplier-degree schedule");
  if (rounding.max_denominator < 1) throw Error("max denominator must be positive");
  if (!(rounding.truncate_eps >= 0)) throw Error("truncation threshold must be non-negative");
  if (sgn(margin_delta) <= 0) throw Error("margin must be positive");
}

Relaxed relax_system(const Program& prog, unsigned degree, const SynthesisConfig& cfg, const RefineState& state) {
  Relaxed r;
  VcOptions vo;
  vo.degree = degree;
  vo.wp = cfg.wp;
  vo.strict_margin = state.margin;
  r.sys = generate_vcs(prog, vo);
  const std::size_t n = r.sys.num_vars;
  r.sos.num_vars = n;
  r.sos.params = r.sys.params;
  RelaxOptions ro;
  ro.mult_degree = cfg.mult_schedule[std::min(state.mult_index, cfg.mult_schedule.size() - 1)];
  ro.products = cfg.products;
  ro.all_products = cfg.mode == RelaxMode::Stengle;
  for (const auto& c : r.sys.constraints) {
    if (!c.required) continue;
    SosConstraint s = relax_simple(c, r.sos.params, ro);
    s.tag = c.tag;
    r.sos.constraints.push_back(std::move(s));
  }
  for (std::size_t k = 0; k < state.cuts.size(); ++k) {
    const Cut& cut = state.cuts[k];
    ParamId slack = r.sos.params.add("s" + std::to_string(k), ParamKind::NonnegMultiplier);
    AffineForm f = AffineForm::parameter(slack, -1) - AffineForm(Rational(cut.rhs));
    for (const auto& [id, a] : cut.coeffs) f += AffineForm::parameter(id, Rational(a));
    SosConstraint s;
    s.identity = true;
    s.residual = ParamPolynomial::constant(n, f);
    s.multipliers = {slack};
    s.tag = "cut" + std::to_string(k);
    r.sos.constraints.push_back(std::move(s));
  }
  GramOptions g;
  g.newton = true;
  const auto t0 = Clock::now();
  finalize(r.sos, g);
  r.assembled = assemble(r.sos);
  r.presolve_seconds = since(t0);
  return r;
}

Polynomial round_template(const Template& t, const std::vector<double>& values, const RoundOptions& opts) {
  const std::size_t n = t.monomials.empty() ? 0 : t.monomials.front().num_vars();
  Polynomial p(n);
  for (std::size_t i = 0; i < t.monomials.size(); ++i)
    p.add_term(t.monomials[i], round_value(values.at(t.coefficients[i].value), opts));
  return p;
}

Polynomial instantiate_template(const Template& t, const Assignment& values) {
  const std::size_t n = t.monomials.empty() ? 0 : t.monomials.front().num_vars();
  Polynomial p(n);
  for (std::size_t i = 0; i < t.monomials.size(); ++i) p.add_term(t.monomials[i], values.at(t.coefficients[i]));
  return p;
}

bool refine_constraints(RefineState& state, const SynthesisConfig& cfg, bool margin_applicable,
                        const std::vector<ParamId>& ids, const std::vector<double>& rejected,
                        std::mt19937_64& rng, HistoryEntry& entry) {
  if (state.used >= cfg.budget) return false;
  ++state.used;
  if (margin_applicable && sgn(state.margin) == 0) {
    state.margin = cfg.margin_delta;
    entry.action = "margin";
    entry.detail = "strict comparisons p > 0 tightened to p >= " + to_string(cfg.margin_delta);
    return true;
  }
  if (state.mult_index + 1 < cfg.mult_schedule.size()) {
    ++state.mult_index;
    entry.action = "mult-degree";
    entry.detail = "multiplier degree " + std::to_string(cfg.mult_schedule[state.mult_index]);
    return true;
  }
  std::normal_distribution<double> g;
  std::vector<double> u(ids.size());
  double norm = 0;
  while (norm < 1e-12) {
    norm = 0;
    for (auto& v : u) {
      v = g(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (ids.empty()) break;
  }
  Cut cut;
  double at = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    cut.coeffs.emplace_back(ids[i], u[i] / norm);
    at += u[i] / norm * rejected[i];
  }
  cut.rhs = at + cfg.cut_radius;
  state.cuts.push_back(std::move(cut));
  entry.action = "cut";
  entry.detail = "parameter cut " + std::to_string(state.cuts.size()) + " (u.c >= u.c* + " +
                 std::to_string(cfg.cut_radius) + ")";
  return true;
}

InvariantResult synthesize(const Program& prog, const SynthesisConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  InvariantResult res;
  res.names = prog.vars;
  std::mt19937_64 rng(cfg.seed);
  struct Fallback {
    Polynomial inv;
    std::optional<Polynomial> inner;
    VerificationReport report;
    unsigned degree;
  };
  std::optional<Fallback> fallback;

  for (unsigned d = cfg.d_start; d <= cfg.d_max; d += cfg.d_step) {
    RefineState state;
    std::optional<bool> margin_applicable;
    HistoryEntry pending;
    pending.action = "solve";
    for (;;) {
      HistoryEntry h = pending;
      h.degree = d;
      const auto t1 = Clock::now();
      Relaxed r;
      try {
        r = relax_system(prog, d, cfg, state);
      } catch (const VcError&) {
        throw;
      } catch (const Error& e) {
        h.detail += (h.detail.empty() ? "" : "; ") + std::string(e.what());
        h.seconds = since(t1);
        res.history.push_back(h);
        break;
      }
      res.template_coefficients = r.sys.invariant.coefficients.size() +
                                  (r.sys.inner ? r.sys.inner->coefficients.size() : 0);
      res.solver_seconds += r.presolve_seconds;
      h.sdp_dimension = r.assembled.problem.psd_dimension();
      h.sdp_rows = r.assembled.problem.rows.size();
      if (r.sos.trivially_infeasible) {
        h.status = SdpStatus::Infeasible;
        h.detail += (h.detail.empty() ? "" : "; ") + r.sos.infeasible_reason;
        h.seconds = since(t1);
        res.history.push_back(h);
        break;
      }
      SdpSolution sol;
      const auto ts = Clock::now();
      try {
        sol = solve_feasibility(r.assembled.problem, cfg.solver);
      } catch (const Error& e) {
        res.solver_seconds += since(ts);
        h.detail += (h.detail.empty() ? "" : "; ") + std::string(e.what());
        h.seconds = since(t1);
        res.history.push_back(h);
        break;
      }
      res.solver_seconds += since(ts);
      h.status = sol.status;
      h.iterations = sol.iterations;
      bool usable = sol.status == SdpStatus::Feasible;
      if (sol.status == SdpStatus::Unknown && !sol.free.empty()) {
        usable = true;
        for (double v : sol.free) usable = usable && std::isfinite(v);
        if (usable) h.detail += (h.detail.empty() ? "" : "; ") + std::string("candidate from near-feasible iterate");
      }
      if (!usable) {
        h.seconds = since(t1);
        res.history.push_back(h);
        break;
      }
      auto vals = parameter_values(r.assembled, sol);
      Polynomial inv = round_template(r.sys.invariant, vals, cfg.rounding);
      std::optional<Polynomial> inner;
      if (r.sys.inner) inner = round_template(*r.sys.inner, vals, cfg.rounding);
      h.candidate = to_string(inv, prog.vars);
      if (inner) h.candidate += " ; inner " + to_string(*inner, prog.vars);
      const auto tv = Clock::now();
      VerificationReport rep = check_invariant(prog, inv, inner, cfg.verify, cfg.wp);
      if (rep.verdict != Verdict::Verified) {
        // Rounded coefficients may break exact relations the rows impose; an
        // exact certificate of the whole system carries consistent ones.
        if (auto x = exact_certificate(r.sos, vals, cfg.rounding)) {
          Polynomial pinv = instantiate_template(r.sys.invariant, *x);
          std::optional<Polynomial> pinner;
          if (r.sys.inner) pinner = instantiate_template(*r.sys.inner, *x);
          if (pinv != inv || pinner != inner) {
            VerificationReport prep = check_invariant(prog, pinv, pinner, cfg.verify, cfg.wp);
            if (prep.verdict == Verdict::Verified) {
              inv = std::move(pinv);
              inner = std::move(pinner);
              rep = std::move(prep);
              h.detail += (h.detail.empty() ? "" : "; ") + std::string("projected onto the exact rows");
              h.candidate = to_string(inv, prog.vars);
              if (inner) h.candidate += " ; inner " + to_string(*inner, prog.vars);
            }
          }
        }
      }
      res.verify_seconds += since(tv);
      h.verdict = rep.verdict;
      h.seconds = since(t1);
      res.history.push_back(h);
      res.invariant = inv;
      res.inner = inner;
      res.degree = d;
      res.report = rep;
      if (rep.verdict == Verdict::Verified) {
        res.status = Verdict::Verified;
        res.total_seconds = since(t0);
        return res;
      }
      if (rep.verdict == Verdict::CandidateUnverified && !fallback) fallback = Fallback{inv, inner, rep, d};

      if (!margin_applicable) {
        VcOptions a, b;
        a.degree = b.degree = d;
        a.wp = b.wp = cfg.wp;
        b.strict_margin = cfg.margin_delta;
        margin_applicable = dump(generate_vcs(prog, a)) != dump(generate_vcs(prog, b));
      }
      std::vector<ParamId> ids = r.sys.invariant.coefficients;
      if (r.sys.inner) ids.insert(ids.end(), r.sys.inner->coefficients.begin(), r.sys.inner->coefficients.end());
      std::vector<double> rejected;
      for (auto id : ids) rejected.push_back(vals[id.value]);
      pending = HistoryEntry{};
      if (!refine_constraints(state, cfg, *margin_applicable, ids, rejected, rng, pending)) break;
    }
  }
  if (fallback) {
    res.status = Verdict::CandidateUnverified;
    res.invariant = fallback->inv;
    res.inner = fallback->inner;
    res.report = fallback->report;
    res.degree = fallback->degree;
  } else {
    res.status = Verdict::Failed;
  }
  res.total_seconds = since(t0);
  return res;
}

}  // namespace piq
