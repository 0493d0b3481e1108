#include "piq/report.hpp"

#include "json.hpp"

namespace piq {

using nlohmann::json;

namespace {

void fill(Report& out, const VerificationReport& v) {
  out.exact = v.exact;
  out.numeric = v.numeric;
  out.falsified = v.falsified;
  for (const auto& c : v.constraints) {
    ConstraintSummary s;
    s.tag = c.tag;
    s.text = c.text;
    s.exact = c.exact_certificate;
    s.numeric = c.numeric_certificate;
    s.kind = c.certificate_kind;
    s.gram_sizes = c.gram_sizes;
    s.margin = c.margin;
    s.grid_points = c.grid_points;
    s.samples_accepted = c.samples_accepted;
    s.samples_tried = c.samples_tried;
    s.vacuous = c.vacuous_by_sampling;
    for (const auto& ce : c.counterexamples) {
      std::vector<std::string> pt;
      for (const auto& q : ce.point) pt.push_back(to_string(q));
      s.counterexamples.push_back(std::move(pt));
    }
    s.note = c.note;
    out.constraints.push_back(std::move(s));
  }
}

// Unguarded terms summed into one polynomial, guarded ones kept apart.
std::string render(const Expectation& e, const Program& prog) {
  Polynomial plain(prog.num_vars());
  std::string guarded;
  for (const auto& t : e.terms) {
    const Polynomial p = to_polynomial(*t.expr, prog.num_vars());
    if (!t.guard || t.guard->kind == Guard::Kind::True)
      plain += p;
    else
      guarded += " + [" + to_string(*t.guard, prog.vars) + "]*(" + to_string(p, prog.vars) + ")";
  }
  if (guarded.empty()) return to_string(plain, prog.vars);
  return plain.is_zero() ? guarded.substr(3) : to_string(plain, prog.vars) + guarded;
}

Report base(const Program& prog) {
  Report r;
  r.vars = prog.vars;
  if (prog.pre) r.pre = render(*prog.pre, prog);
  if (prog.post) r.post = render(*prog.post, prog);
  return r;
}

json to_j(const ConstraintSummary& c) {
  return {{"tag", c.tag},
          {"text", c.text},
          {"exact", c.exact},
          {"numeric", c.numeric},
          {"kind", c.kind},
          {"gram_sizes", c.gram_sizes},
          {"margin", c.margin},
          {"grid_points", c.grid_points},
          {"samples_accepted", c.samples_accepted},
          {"samples_tried", c.samples_tried},
          {"vacuous", c.vacuous},
          {"counterexamples", c.counterexamples},
          {"note", c.note}};
}

json to_j(const HistoryRecord& h) {
  return {{"degree", h.degree},
          {"action", h.action},
          {"detail", h.detail},
          {"status", h.status},
          {"iterations", h.iterations},
          {"sdp_dimension", h.sdp_dimension},
          {"sdp_rows", h.sdp_rows},
          {"candidate", h.candidate},
          {"verdict", h.verdict ? json(*h.verdict) : json(nullptr)},
          {"seconds", h.seconds}};
}

json to_j(const Report& r) {
  json cs = json::array(), hs = json::array();
  for (const auto& c : r.constraints) cs.push_back(to_j(c));
  for (const auto& h : r.history) hs.push_back(to_j(h));
  auto opt = [](const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); };
  return {{"schema", kReportSchema},
          {"command", r.command},
          {"input", {{"file", r.file}, {"vars", r.vars}, {"pre", r.pre}, {"post", r.post}, {"options", r.options}}},
          {"status", r.status},
          {"invariant", opt(r.invariant)},
          {"inner", opt(r.inner)},
          {"degree", r.degree},
          {"template_coefficients", r.template_coefficients},
          {"certificate",
           {{"exact", r.exact}, {"numeric", r.numeric}, {"falsified", r.falsified}, {"constraints", cs}}},
          {"timings", {{"total", r.total_seconds}, {"solver", r.solver_seconds}, {"verify", r.verify_seconds}}},
          {"history", hs}};
}

std::optional<std::string> opt_str(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

Report from_j(const json& j) {
  if (j.value("schema", "") != kReportSchema) throw Error("not a piq-report/1 document");
  Report r;
  r.command = j.at("command");
  const auto& in = j.at("input");
  r.file = in.at("file");
  r.vars = in.at("vars").get<std::vector<std::string>>();
  r.pre = in.at("pre");
  r.post = in.at("post");
  r.options = in.at("options").get<std::map<std::string, std::string>>();
  r.status = j.at("status");
  r.invariant = opt_str(j.at("invariant"));
  r.inner = opt_str(j.at("inner"));
  r.degree = j.at("degree");
  r.template_coefficients = j.at("template_coefficients");
  const auto& cert = j.at("certificate");
  r.exact = cert.at("exact");
  r.numeric = cert.at("numeric");
  r.falsified = cert.at("falsified");
  for (const auto& c : cert.at("constraints")) {
    ConstraintSummary s;
    s.tag = c.at("tag");
    s.text = c.at("text");
    s.exact = c.at("exact");
    s.numeric = c.at("numeric");
    s.kind = c.at("kind");
    s.gram_sizes = c.at("gram_sizes").get<std::vector<std::size_t>>();
    s.margin = c.at("margin");
    s.grid_points = c.at("grid_points");
    s.samples_accepted = c.at("samples_accepted");
    s.samples_tried = c.at("samples_tried");
    s.vacuous = c.at("vacuous");
    s.counterexamples = c.at("counterexamples").get<std::vector<std::vector<std::string>>>();
    s.note = c.at("note");
    r.constraints.push_back(std::move(s));
  }
  const auto& t = j.at("timings");
  r.total_seconds = t.at("total");
  r.solver_seconds = t.at("solver");
  r.verify_seconds = t.at("verify");
  for (const auto& h : j.at("history")) {
    HistoryRecord e;
    e.degree = h.at("degree");
    e.action = h.at("action");
    e.detail = h.at("detail");
    e.status = h.at("status");
    e.iterations = h.at("iterations");
    e.sdp_dimension = h.at("sdp_dimension");
    e.sdp_rows = h.at("sdp_rows");
    e.candidate = h.at("candidate");
    e.verdict = opt_str(h.at("verdict"));
    e.seconds = h.at("seconds");
    r.history.push_back(std::move(e));
  }
  return r;
}

}  // namespace

Report make_report(const Program& prog, const InvariantResult& res) {
  Report r = base(prog);
  r.command = "synth";
  r.status = to_string(res.status);
  if (res.invariant) r.invariant = to_string(*res.invariant, prog.vars);
  if (res.inner) r.inner = to_string(*res.inner, prog.vars);
  r.degree = res.degree;
  r.template_coefficients = res.template_coefficients;
  fill(r, res.report);
  r.total_seconds = res.total_seconds;
  r.solver_seconds = res.solver_seconds;
  r.verify_seconds = res.verify_seconds;
  for (const auto& h : res.history) {
    HistoryRecord e;
    e.degree = h.degree;
    e.action = h.action;
    e.detail = h.detail;
    e.status = to_string(h.status);
    e.iterations = h.iterations;
    e.sdp_dimension = h.sdp_dimension;
    e.sdp_rows = h.sdp_rows;
    e.candidate = h.candidate;
    if (h.verdict) e.verdict = to_string(*h.verdict);
    e.seconds = h.seconds;
    r.history.push_back(std::move(e));
  }
  return r;
}

Report make_report(const Program& prog, const VerificationReport& v, const Polynomial& inv,
                   const std::optional<Polynomial>& inner) {
  Report r = base(prog);
  r.command = "check";
  r.status = to_string(v.verdict);
  r.invariant = to_string(inv, prog.vars);
  if (inner) r.inner = to_string(*inner, prog.vars);
  r.degree = inv.degree();
  fill(r, v);
  r.total_seconds = r.verify_seconds = v.seconds;
  return r;
}

std::string to_json(const Report& r, int indent) { return to_j(r).dump(indent); }

Report report_from_json(const std::string& text) {
  try {
    return from_j(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(std::string("bad report: ") + e.what());
  }
}

std::string bench_json(const std::string& suite, const std::vector<Report>& cases, bool ok, int indent) {
  json cs = json::array();
  for (const auto& c : cases) cs.push_back(to_j(c));
  return json{{"schema", "piq-bench/1"}, {"suite", suite}, {"ok", ok}, {"cases", cs}}.dump(indent);
}

}  // namespace piq
