#include "piq/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "piq/parametric.hpp"
#include "piq/report.hpp"

#ifndef PIQ_BENCHMARK_DIR
#define PIQ_BENCHMARK_DIR "benchmarks"
#endif

namespace piq {

namespace {

struct Options {
  unsigned degree = 2, max_degree = 8, mult_degree = 2;
  double truncate_eps = 1e-6;
  long max_denominator = 10000;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string mode = "simple";
  std::size_t verify_samples = 100000;
  double box_bound = 10;
  bool dump_vc = false, dump_sdp = false, literal_wp = false;
  std::string json;
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--degree", o.degree, "starting template degree (even)");
  app->add_option("--max-degree", o.max_degree, "largest template degree tried (even)");
  app->add_option("--mult-degree", o.mult_degree, "largest multiplier degree (even)");
  app->add_option("--truncate-eps", o.truncate_eps, "solver values below this round to 0");
  app->add_option("--max-denominator", o.max_denominator, "largest denominator when rounding");
  o.seed_opt = app->add_option("--seed", o.seed, "random seed (default $PIQ_SEED, else 0)");
  app->add_option("--mode", o.mode, "relaxation")->check(CLI::IsMember({"simple", "stengle"}));
  app->add_option("--verify-samples", o.verify_samples, "sampling points per constraint");
  app->add_option("--box-bound", o.box_bound, "sampling box [-B, B]^n");
  app->add_flag("--dump-vc", o.dump_vc, "print the implication constraints");
  app->add_flag("--dump-sdp", o.dump_sdp, "print the SDP in text form");
  app->add_option("--json", o.json, "write a JSON report to this path");
  app->add_flag("--paper-literal-wp", o.literal_wp, "substitute means for random terms in wp");
}

std::uint64_t seed_of(const Options& o) {
  if (o.seed_opt && o.seed_opt->count()) return o.seed;
  if (const char* s = std::getenv("PIQ_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw Error(std::string("PIQ_SEED is not an unsigned integer: ") + s);
    }
  }
  return 0;
}

std::vector<unsigned> schedule(unsigned k) {
  if (k % 2) throw Error("multiplier degree must be even");
  std::vector<unsigned> s;
  for (unsigned d = 0; d <= k; d += 2) s.push_back(d);
  return s;
}

SynthesisConfig config_of(const Options& o) {
  SynthesisConfig c;
  c.d_start = o.degree;
  c.d_max = std::max(o.degree, o.max_degree);
  c.rounding.truncate_eps = o.truncate_eps;
  c.rounding.max_denominator = o.max_denominator;
  c.mult_schedule = schedule(o.mult_degree);
  c.mode = o.mode == "stengle" ? RelaxMode::Stengle : RelaxMode::Simple;
  c.wp.paper_literal = o.literal_wp;
  c.seed = seed_of(o);
  c.verify.mult_degrees = c.mult_schedule;
  c.verify.stengle = c.mode == RelaxMode::Stengle;
  c.verify.rounding = c.rounding;
  c.verify.samples = o.verify_samples;
  c.verify.box_bound = o.box_bound;
  c.verify.seed = c.seed;
  if (!(o.box_bound > 0)) throw Error("box bound must be positive");
  c.validate();
  return c;
}

std::map<std::string, std::string> echo(const Options& o, const SynthesisConfig& c) {
  auto num = [](double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  };
  return {{"degree", std::to_string(c.d_start)},
          {"max_degree", std::to_string(c.d_max)},
          {"mult_degree", std::to_string(o.mult_degree)},
          {"truncate_eps", num(o.truncate_eps)},
          {"max_denominator", std::to_string(o.max_denominator)},
          {"seed", std::to_string(c.seed)},
          {"mode", o.mode},
          {"verify_samples", std::to_string(o.verify_samples)},
          {"box_bound", num(o.box_bound)},
          {"paper_literal_wp", o.literal_wp ? "true" : "false"}};
}

struct Failure {
  int code;
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Failure{kExitParse, "cannot read " + path};
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Program load_text(const std::string& text, const std::string& label, std::ostream& err) {
  Program p;
  try {
    p = parse(text);
  } catch (const ParseError& e) {
    throw Failure{kExitParse, label + ": " + e.what()};
  }
  auto diags = validate(p);
  for (const auto& d : diags)
    if (d.severity != Diagnostic::Severity::Error) err << label << ": " << to_string(d) << "\n";
  if (has_errors(diags)) {
    std::string msg;
    for (const auto& d : diags)
      if (d.severity == Diagnostic::Severity::Error) msg += (msg.empty() ? "" : "\n") + label + ": " + to_string(d);
    throw Failure{kExitValidation, msg};
  }
  return p;
}

Program load(const std::string& path, std::ostream& err) { return load_text(read_file(path), path, err); }

Polynomial parse_poly(const std::string& text, const Program& p) {
  try {
    return to_polynomial(*parse_expr(text, p.vars), p.num_vars());
  } catch (const ParseError& e) {
    throw Failure{kExitParse, "invariant: " + std::string(e.what())};
  }
}

void write_json(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw Failure{kExitValidation, "cannot write " + path};
  f << text << "\n";
}

std::string fmt_time(double total, double solver) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << total << "/" << solver;
  return s.str();
}

void print_constraints(const Report& r, std::ostream& out) {
  for (const auto& c : r.constraints) {
    out << "  [" << c.tag << "] " << c.text << "\n    ";
    if (c.exact)
      out << "exact " << c.kind;
    else if (c.numeric)
      out << "numeric margin " << c.margin;
    else
      out << "no certificate";
    out << "; grid " << c.grid_points << ", samples " << c.samples_accepted << "/" << c.samples_tried;
    if (c.vacuous) out << " (vacuous by sampling)";
    if (!c.note.empty()) out << "; " << c.note;
    out << "\n";
    const std::size_t shown = std::min<std::size_t>(c.counterexamples.size(), 5);
    for (std::size_t i = 0; i < shown; ++i) {
      out << "    counterexample (";
      for (std::size_t k = 0; k < c.counterexamples[i].size(); ++k)
        out << (k ? ", " : "") << r.vars[k] << " = " << c.counterexamples[i][k];
      out << ")\n";
    }
    if (c.counterexamples.size() > shown) out << "    ... " << c.counterexamples.size() - shown << " more\n";
  }
}

void print_synth(const Report& r, std::ostream& out) {
  out << r.file << ": " << r.status << "\n";
  if (r.invariant) out << "  invariant: " << *r.invariant << "\n";
  if (r.inner) out << "  inner invariant: " << *r.inner << "\n";
  out << "  degree " << r.degree << ", " << r.template_coefficients << " template coefficients\n";
  out << "  constraints " << r.constraints.size() << ": " << r.exact << " exact, " << r.numeric << " numeric, "
      << r.falsified << " falsified\n";
  for (const auto& h : r.history) {
    out << "  d=" << h.degree << " " << h.action << ": " << h.status << ", " << h.iterations << " it, dim "
        << h.sdp_dimension << ", rows " << h.sdp_rows;
    if (h.verdict) out << " -> " << *h.verdict;
    if (!h.detail.empty()) out << " (" << h.detail << ")";
    out << "\n";
  }
  out << "  time " << fmt_time(r.total_seconds, r.solver_seconds) << " s (total/solver)\n";
}

int exit_for(Verdict v) {
  switch (v) {
    case Verdict::Verified: return kExitOk;
    case Verdict::CandidateUnverified: return kExitVerification;
    case Verdict::Failed: return kExitSynthesis;
  }
  return kExitSynthesis;
}

void dumps(const Program& p, const Options& o, const SynthesisConfig& c, std::ostream& out) {
  if (o.dump_vc) {
    VcOptions vo;
    vo.degree = c.d_start;
    vo.wp = c.wp;
    out << dump(generate_vcs(p, vo));
  }
  if (o.dump_sdp) out << dump(relax_system(p, c.d_start, c).assembled.problem);
}

int cmd_synth(const std::string& file, const Options& o, std::ostream& out, std::ostream& err) {
  Program p = load(file, err);
  SynthesisConfig c = config_of(o);
  dumps(p, o, c, out);
  InvariantResult res = synthesize(p, c);
  Report r = make_report(p, res);
  r.file = file;
  r.options = echo(o, c);
  print_synth(r, out);
  write_json(o.json, to_json(r));
  return exit_for(res.status);
}

int cmd_vc(const std::string& file, const Options& o, std::ostream& out, std::ostream& err) {
  Program p = load(file, err);
  SynthesisConfig c = config_of(o);
  VcOptions vo;
  vo.degree = c.d_start;
  vo.wp = c.wp;
  out << dump(generate_vcs(p, vo));
  if (o.dump_sdp) out << dump(relax_system(p, c.d_start, c).assembled.problem);
  return kExitOk;
}

int cmd_sdp(const std::string& file, const Options& o, std::ostream& out, std::ostream& err) {
  const std::string text = read_file(file);
  if (text.rfind("piq-sdp", 0) == 0) {
    SdpProblem prob;
    try {
      prob = parse_sdp(text);
    } catch (const Error& e) {
      throw Failure{kExitParse, file + ": " + e.what()};
    }
    SolverConfig sc;
    sc.dim_cap = std::max<std::size_t>(sc.dim_cap, prob.psd_dimension());
    SdpSolution s = solve_feasibility(prob, sc);
    out << "status " << to_string(s.status) << "\niterations " << s.iterations << "\nmargin " << s.margin
        << "\nresidual " << s.eq_residual << "\n";
    if (!s.diagnostic.empty()) out << "diagnostic " << s.diagnostic << "\n";
    return s.status == SdpStatus::Feasible ? kExitOk : kExitSynthesis;
  }
  Program p = load_text(text, file, err);
  SynthesisConfig c = config_of(o);
  if (o.dump_vc) {
    VcOptions vo;
    vo.degree = c.d_start;
    vo.wp = c.wp;
    out << dump(generate_vcs(p, vo));
  }
  out << dump(relax_system(p, c.d_start, c).assembled.problem);
  return kExitOk;
}

int cmd_check(const std::string& file, const std::string& inv_text, const std::string& inner_text,
              const Options& o, std::ostream& out, std::ostream& err) {
  Program p = load(file, err);
  SynthesisConfig c = config_of(o);
  Polynomial inv = parse_poly(inv_text, p);
  std::optional<Polynomial> inner;
  if (!inner_text.empty()) inner = parse_poly(inner_text, p);
  if (p.nested() && !inner) throw Failure{kExitValidation, "nested loop: --inner is required"};
  if (o.dump_vc)
    for (const auto& v : candidate_vcs(p, inv, inner, c.wp)) out << to_string(v, p.vars, ParamTable{}) << "\n";
  VerificationReport v = check_invariant(p, inv, inner, c.verify, c.wp);
  Report r = make_report(p, v, inv, inner);
  r.file = file;
  r.options = echo(o, c);
  out << file << ": " << r.status << " for " << *r.invariant << "\n";
  print_constraints(r, out);
  out << "  " << r.exact << " exact, " << r.numeric << " numeric, " << r.falsified << " falsified; time "
      << fmt_time(r.total_seconds, 0) << " s\n";
  write_json(o.json, to_json(r));
  return v.verdict == Verdict::Verified ? kExitOk : kExitVerification;
}

struct BenchCase {
  std::string name, file;
  std::string expected;  // empty: any verified or unverified candidate is accepted
  std::optional<std::pair<ParametricKind, unsigned>> generated;
};

std::vector<BenchCase> load_suite(const std::string& dir, const std::string& suite) {
  std::istringstream in(read_file(dir + "/suites.txt"));
  std::vector<BenchCase> cases;
  std::string line;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t"), b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string part; std::getline(ls, part, '|');) f.push_back(trim(part));
    while (f.size() < 4) f.emplace_back();
    if (f[0] != suite) continue;
    BenchCase c{f[1], f[2], f[3], std::nullopt};
    if (!c.file.empty() && c.file[0] == '@') {
      const auto colon = c.file.find(':');
      auto kind = parse_parametric_kind(c.file.substr(1, colon - 1));
      unsigned n = static_cast<unsigned>(std::stoul(c.file.substr(colon + 1)));
      c.generated = std::make_pair(kind, n);
      if (c.expected == "@") c.expected = expected_invariant(kind, n);
    } else {
      c.file = dir + "/" + c.file;
    }
    cases.push_back(std::move(c));
  }
  if (cases.empty()) throw Failure{kExitValidation, "unknown or empty suite '" + suite + "'"};
  return cases;
}

struct BenchRow {
  Report report;
  bool ok = false;
  std::string why;
};

BenchRow run_case(const BenchCase& bc, const SynthesisConfig& cfg, const Options& o, std::ostream& err) {
  const std::string text = bc.generated ? gen_parametric(bc.generated->first, bc.generated->second) : read_file(bc.file);
  Program p = load_text(text, bc.name, err);
  InvariantResult res = synthesize(p, cfg);
  BenchRow row{make_report(p, res), false, {}};
  row.report.file = bc.generated ? std::string(to_string(bc.generated->first)) + ":" +
                                       std::to_string(bc.generated->second)
                                 : bc.file;
  row.report.options = echo(o, cfg);
  row.report.options["name"] = bc.name;
  if (!bc.expected.empty()) {
    row.report.options["expected"] = bc.expected;
    if (res.status != Verdict::Verified) {
      row.why = "not verified";
    } else if (*res.invariant != parse_poly(bc.expected, p)) {
      row.why = "differs from " + bc.expected;
    } else {
      row.ok = true;
    }
  } else {
    row.ok = res.status != Verdict::Failed;
    if (!row.ok) row.why = "no candidate";
  }
  return row;
}

void print_table(const std::vector<std::vector<std::string>>& rows, std::ostream& out) {
  std::vector<std::size_t> w;
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (w.size() <= i) w.push_back(0);
      w[i] = std::max(w[i], r[i].size());
    }
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i)
      out << (i ? " | " : "") << r[i] << (i + 1 < r.size() ? std::string(w[i] - r[i].size(), ' ') : "");
    out << "\n";
  }
}

int cmd_bench(const std::string& suite, const std::vector<unsigned>& ns, const std::string& dir, const Options& o,
              std::ostream& out, std::ostream& err) {
  SynthesisConfig cfg = config_of(o);
  std::vector<BenchCase> cases;
  if (suite == "parametric") {
    for (unsigned n : ns.empty() ? std::vector<unsigned>{5, 10, 15} : ns)
      cases.push_back({"linear n=" + std::to_string(n), "", expected_invariant(ParametricKind::Linear, n),
                       std::make_pair(ParametricKind::Linear, n)});
  } else {
    cases = load_suite(dir, suite);
  }
  std::vector<std::vector<std::string>> table;
  if (suite == "parametric")
    table.push_back({"n", "Coefficients (all/x only)", "Invariant", "Time (s)", "Status"});
  else
    table.push_back({"Name", "preE", "postE", "Invariant", "Time (s)", "Status"});
  std::vector<Report> reports;
  bool all = true;
  for (const auto& bc : cases) {
    BenchRow row = run_case(bc, cfg, o, err);
    const Report& r = row.report;
    std::string inv = r.invariant ? *r.invariant : "-";
    if (r.inner) inv += " ; inner " + *r.inner;
    std::string status = r.status + (row.ok ? "" : " FAIL: " + row.why);
    const std::string time = fmt_time(r.total_seconds, r.solver_seconds);
    if (suite == "parametric") {
      const unsigned n = bc.generated->second;
      table.push_back({std::to_string(n),
                       std::to_string(r.template_coefficients) + " (C(n+4,2) = " +
                           std::to_string(linear_coefficients_full(n)) + ") / " +
                           std::to_string(linear_coefficients_restricted(n)),
                       inv, time, status});
    } else {
      table.push_back({bc.name, r.pre, r.post, inv, time, status});
    }
    all = all && row.ok;
    reports.push_back(std::move(row.report));
  }
  print_table(table, out);
  out << (all ? "all cases reached their expected status" : "some cases failed") << "\n";
  write_json(o.json, bench_json(suite, reports, all));
  return all ? kExitOk : kExitSynthesis;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Polynomial quantitative invariants for probabilistic programs", "piq"};
  app.require_subcommand(1);
  Options o;
  std::string file, invariant, inner, suite = "table1", kind, bench_dir;
  std::vector<unsigned> ns;
  unsigned gen_n = 1;

  auto* synth = app.add_subcommand("synth", "synthesize an invariant");
  synth->add_option("file", file, "program")->required();
  add_common(synth, o);
  auto* vc = app.add_subcommand("vc", "print the implication constraints");
  vc->add_option("file", file, "program")->required();
  add_common(vc, o);
  auto* sdp = app.add_subcommand("sdp", "print the SDP of a program, or solve an SDP dump");
  sdp->add_option("file", file, "program or SDP dump")->required();
  add_common(sdp, o);
  auto* check = app.add_subcommand("check", "verify a given invariant");
  check->add_option("file", file, "program")->required();
  check->add_option("--invariant", invariant, "candidate invariant")->required();
  check->add_option("--inner", inner, "inner-loop invariant (nested loops)");
  add_common(check, o);
  auto* bench = app.add_subcommand("bench", "run a benchmark suite");
  bench->add_option("--suite", suite, "suite")->check(CLI::IsMember({"table1", "appendixD", "parametric"}));
  bench->add_option("--n", ns, "parametric sizes (default 5 10 15)");
  bench->add_option("--bench-dir", bench_dir, "directory holding suites.txt");
  add_common(bench, o);
  auto* gen = app.add_subcommand("gen_parametric", "print a parametric program");
  gen->add_option("kind", kind, "linear, quadratic or ruin-power")
      ->required()
      ->check(CLI::IsMember({"linear", "quadratic", "ruin-power"}));
  gen->add_option("n", gen_n, "size")->required()->check(CLI::PositiveNumber);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*synth) return cmd_synth(file, o, out, err);
    if (*vc) return cmd_vc(file, o, out, err);
    if (*sdp) return cmd_sdp(file, o, out, err);
    if (*check) return cmd_check(file, invariant, inner, o, out, err);
    if (*bench) {
      if (bench_dir.empty()) {
        const char* env = std::getenv("PIQ_BENCH_DIR");
        bench_dir = env ? env : PIQ_BENCHMARK_DIR;
      }
      return cmd_bench(suite, ns, bench_dir, o, out, err);
    }
    if (*gen) {
      const auto k = parse_parametric_kind(kind);
      out << "// expected invariant: " << expected_invariant(k, gen_n) << "\n" << gen_parametric(k, gen_n);
      return kExitOk;
    }
  } catch (const Failure& f) {
    err << "piq: " << f.message << "\n";
    return f.code;
  } catch (const ParseError& e) {
    err << "piq: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    err << "piq: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace piq
