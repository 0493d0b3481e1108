#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "piq/cli.hpp"
#include "piq/parametric.hpp"
#include "piq/report.hpp"

namespace py = pybind11;
using namespace piq;

namespace {

struct Settings {
  unsigned degree = 2, max_degree = 8, mult_degree = 2;
  double truncate_eps = 1e-6;
  long max_denominator = 10000;
  std::uint64_t seed = 0;
  std::string mode = "simple";
  std::size_t verify_samples = 100000;
  double box_bound = 10;
  bool literal_wp = false;

  SynthesisConfig config() const {
    if (mult_degree % 2) throw Error("multiplier degree must be even");
    if (mode != "simple" && mode != "stengle") throw Error("mode must be simple or stengle");
    if (!(box_bound > 0)) throw Error("box bound must be positive");
    SynthesisConfig c;
    c.d_start = degree;
    c.d_max = std::max(degree, max_degree);
    c.rounding.truncate_eps = truncate_eps;
    c.rounding.max_denominator = max_denominator;
    c.mult_schedule.clear();
    for (unsigned d = 0; d <= mult_degree; d += 2) c.mult_schedule.push_back(d);
    c.mode = mode == "stengle" ? RelaxMode::Stengle : RelaxMode::Simple;
    c.wp.paper_literal = literal_wp;
    c.seed = seed;
    c.verify.mult_degrees = c.mult_schedule;
    c.verify.stengle = c.mode == RelaxMode::Stengle;
    c.verify.rounding = c.rounding;
    c.verify.samples = verify_samples;
    c.verify.box_bound = box_bound;
    c.verify.seed = seed;
    c.validate();
    return c;
  }
};

Program checked(const std::string& text) {
  Program p = parse(text);
  auto diags = validate(p);
  if (has_errors(diags)) {
    std::string msg;
    for (const auto& d : diags)
      if (d.severity == Diagnostic::Severity::Error) msg += (msg.empty() ? "" : "\n") + to_string(d);
    throw Error(msg);
  }
  return p;
}

Polynomial poly(const std::string& text, const Program& p) {
  return to_polynomial(*parse_expr(text, p.vars), p.num_vars());
}

std::string synth(const std::string& text, const Settings& s) {
  Program p = checked(text);
  Report r = make_report(p, synthesize(p, s.config()));
  r.command = "synth";
  return to_json(r);
}

std::string check(const std::string& text, const std::string& inv, const std::optional<std::string>& inner,
                  const Settings& s) {
  Program p = checked(text);
  SynthesisConfig c = s.config();
  Polynomial i = poly(inv, p);
  std::optional<Polynomial> j;
  if (inner) j = poly(*inner, p);
  Report r = make_report(p, check_invariant(p, i, j, c.verify, c.wp), i, j);
  r.command = "check";
  return to_json(r);
}

std::string vc(const std::string& text, unsigned degree, bool literal_wp) {
  Program p = checked(text);
  VcOptions o;
  o.degree = degree;
  o.wp.paper_literal = literal_wp;
  return dump(generate_vcs(p, o));
}

std::string sdp(const std::string& text, const Settings& s) {
  Program p = checked(text);
  SynthesisConfig c = s.config();
  return dump(relax_system(p, c.d_start, c).assembled.problem);
}

#define PIQ_SETTINGS_ARGS                                                                                         \
  py::kw_only(), py::arg("degree") = 2u, py::arg("max_degree") = 8u, py::arg("mult_degree") = 2u,               \
      py::arg("truncate_eps") = 1e-6, py::arg("max_denominator") = 10000L, py::arg("seed") = 0ull,              \
      py::arg("mode") = "simple", py::arg("verify_samples") = std::size_t(100000), py::arg("box_bound") = 10.0, \
      py::arg("literal_wp") = false

Settings settings(unsigned degree, unsigned max_degree, unsigned mult_degree, double truncate_eps, long max_den,
                  unsigned long long seed, std::string mode, std::size_t samples, double box, bool literal) {
  return {degree, max_degree, mult_degree, truncate_eps, max_den, seed, std::move(mode), samples, box, literal};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Polynomial invariant synthesis for probabilistic loops";
  auto base = py::register_exception<Error>(m, "Error", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  m.def("program_vars", [](const std::string& text) { return checked(text).vars; }, py::arg("source"),
        "Declared variables of a program, in order.");
  m.def(
      "synthesize_json",
      [](const std::string& text, unsigned d, unsigned md, unsigned mult, double eps, long den,
         unsigned long long seed, std::string mode, std::size_t samples, double box, bool literal) {
        auto s = settings(d, md, mult, eps, den, seed, std::move(mode), samples, box, literal);
        py::gil_scoped_release unlock;
        return synth(text, s);
      },
      py::arg("source"), PIQ_SETTINGS_ARGS);
  m.def(
      "check_json",
      [](const std::string& text, const std::string& inv, const std::optional<std::string>& inner, unsigned d,
         unsigned md, unsigned mult, double eps, long den, unsigned long long seed, std::string mode,
         std::size_t samples, double box, bool literal) {
        auto s = settings(d, md, mult, eps, den, seed, std::move(mode), samples, box, literal);
        py::gil_scoped_release unlock;
        return check(text, inv, inner, s);
      },
      py::arg("source"), py::arg("invariant"), py::arg("inner") = py::none(), PIQ_SETTINGS_ARGS);
  m.def("vc_dump", &vc, py::arg("source"), py::kw_only(), py::arg("degree") = 2u, py::arg("literal_wp") = false);
  m.def(
      "sdp_dump",
      [](const std::string& text, unsigned d, unsigned md, unsigned mult, double eps, long den,
         unsigned long long seed, std::string mode, std::size_t samples, double box, bool literal) {
        return sdp(text, settings(d, md, mult, eps, den, seed, std::move(mode), samples, box, literal));
      },
      py::arg("source"), PIQ_SETTINGS_ARGS);
  m.def(
      "gen_parametric",
      [](const std::string& kind, unsigned n) { return gen_parametric(parse_parametric_kind(kind), n); },
      py::arg("kind"), py::arg("n"));
  m.def(
      "expected_invariant",
      [](const std::string& kind, unsigned n) { return expected_invariant(parse_parametric_kind(kind), n); },
      py::arg("kind"), py::arg("n"));
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release unlock;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a piq subcommand; returns (exit code, stdout, stderr).");
  m.attr("REPORT_SCHEMA") = kReportSchema;
}
