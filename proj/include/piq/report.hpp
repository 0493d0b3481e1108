#pragma once

// Machine-readable run reports (schema "piq-report/1").

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "piq/refine.hpp"

namespace piq {

struct ConstraintSummary {
  std::string tag, text;
  bool exact = false, numeric = false;
  std::string kind;  // certificate kind when exact
  std::vector<std::size_t> gram_sizes;
  double margin = 0;
  std::size_t grid_points = 0, samples_accepted = 0, samples_tried = 0;
  bool vacuous = false;
  std::vector<std::vector<std::string>> counterexamples;  // rational coordinates
  std::string note;

  friend bool operator==(const ConstraintSummary&, const ConstraintSummary&) = default;
};

struct HistoryRecord {
  unsigned degree = 0;
  std::string action, detail, status;
  int iterations = 0;
  std::size_t sdp_dimension = 0, sdp_rows = 0;
  std::string candidate;
  std::optional<std::string> verdict;
  double seconds = 0;

  friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
};

struct Report {
  std::string command;  // synth, check
  std::string file;
  std::vector<std::string> vars;
  std::string pre, post;
  std::map<std::string, std::string> options;  // echoed inputs
  std::string status;
  std::optional<std::string> invariant, inner;
  unsigned degree = 0;
  std::size_t template_coefficients = 0;
  std::size_t exact = 0, numeric = 0, falsified = 0;
  std::vector<ConstraintSummary> constraints;
  double total_seconds = 0, solver_seconds = 0, verify_seconds = 0;
  std::vector<HistoryRecord> history;

  friend bool operator==(const Report&, const Report&) = default;
};

inline constexpr const char* kReportSchema = "piq-report/1";

Report make_report(const Program& prog, const InvariantResult& r);
Report make_report(const Program& prog, const VerificationReport& v, const Polynomial& inv,
                   const std::optional<Polynomial>& inner);

std::string to_json(const Report& r, int indent = 2);
Report report_from_json(const std::string& text);

/// Several reports under one object (schema "piq-bench/1").
std::string bench_json(const std::string& suite, const std::vector<Report>& cases, bool ok, int indent = 2);

}  // namespace piq
