#pragma once

// Invariant synthesis: template degree escalation, SDP solve, rounding,
// verification and refinement of the constraint system.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "piq/verify.hpp"

namespace piq {

enum class RelaxMode { Simple, Stengle };

struct SynthesisConfig {
  unsigned d_start = 2, d_step = 2, d_max = 8;
  RoundOptions rounding;
  unsigned budget = 4;  // refinements per degree
  std::vector<unsigned> mult_schedule{0, 2};
  Rational margin_delta = ratio(1, 10);
  double cut_radius = 1e-3;
  RelaxMode mode = RelaxMode::Simple;
  bool products = false;
  WpOptions wp;
  SolverConfig solver = [] {
    SolverConfig s;
    s.dim_cap = 1500;
    return s;
  }();
  VerifyConfig verify;
  std::uint64_t seed = 0;

  void validate() const;
};

/// a . params >= b over template coefficients.
struct Cut {
  std::vector<std::pair<ParamId, double>> coeffs;
  double rhs = 0;
};

/// Refinement state for one degree.
struct RefineState {
  Rational margin = 0;
  std::size_t mult_index = 0;
  std::vector<Cut> cuts;
  unsigned used = 0;
};

struct Relaxed {
  VcSystem sys;
  SosProgram sos;
  Assembled assembled;
  double presolve_seconds = 0;  // Gram finalization, facial reduction, assembly
};

/// VCs, relaxation and SDP for one template degree and refinement state.
Relaxed relax_system(const Program& prog, unsigned degree, const SynthesisConfig& cfg,
                     const RefineState& state = {});

struct HistoryEntry {
  unsigned degree = 0;
  std::string action;  // "solve", "margin", "mult-degree", "cut"
  std::string detail;
  SdpStatus status = SdpStatus::Unknown;
  int iterations = 0;
  std::size_t sdp_dimension = 0, sdp_rows = 0;
  std::string candidate;
  std::optional<Verdict> verdict;
  double seconds = 0;
};

struct InvariantResult {
  Verdict status = Verdict::Failed;
  std::optional<Polynomial> invariant, inner;
  std::vector<std::string> names;
  std::size_t template_coefficients = 0;
  unsigned degree = 0;
  VerificationReport report;
  std::vector<HistoryEntry> history;
  /// solver_seconds covers presolve and the SDP solves.
  double total_seconds = 0, solver_seconds = 0, verify_seconds = 0;
};

/// Round template coefficients from solver values.
Polynomial round_template(const Template& t, const std::vector<double>& values, const RoundOptions& opts);

Polynomial instantiate_template(const Template& t, const Assignment& values);

/// Applies the next refinement action (margin, multiplier degree, cut) and
/// describes it in entry; false when the budget is exhausted. The cut goes
/// through the neighbourhood of the rejected values of ids.
bool refine_constraints(RefineState& state, const SynthesisConfig& cfg, bool margin_applicable,
                        const std::vector<ParamId>& ids, const std::vector<double>& rejected,
                        std::mt19937_64& rng, HistoryEntry& entry);

InvariantResult synthesize(const Program& prog, const SynthesisConfig& cfg = {});

}  // namespace piq
