#pragma once

// Checking a concrete rational invariant against its implication constraints:
// exact Gram certificates, numeric certificates, and sampling falsification.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "piq/exact.hpp"
#include "piq/sos.hpp"

namespace piq {

struct VerifyConfig {
  /// Multiplier degrees tried for the per-constraint SOS certificate.
  std::vector<unsigned> mult_degrees{0, 2};
  bool products = false;
  /// Also try a Positivstellensatz certificate when the simple relaxation fails.
  bool stengle = false;
  StengleOptions stengle_opts;
  RoundOptions rounding;
  SolverConfig solver = [] {
    SolverConfig s;
    s.dim_cap = 1500;
    return s;
  }();
  std::size_t samples = 100000;
  double box_bound = 10;
  /// Integer grid [-g, g]^n checked exhaustively (randomly when too large).
  int grid_bound = 3;
  std::size_t grid_cap = 200000;
  double tolerance = 1e-9;
  std::uint64_t seed = 0;
  /// Counterexamples kept per constraint.
  std::size_t max_counterexamples = 64;
};

enum class Verdict { Verified, CandidateUnverified, Failed };
const char* to_string(Verdict v);

struct Counterexample {
  std::vector<Rational> point;
  Rational value;  // consequent at point, < 0
};

struct ConstraintReport {
  std::string tag;
  std::string text;
  bool required = true;
  // layer 1
  bool exact_certificate = false;
  std::string certificate_kind;  // "simple/d<k>" or "stengle"
  std::vector<std::size_t> gram_sizes;
  // layer 2
  bool numeric_certificate = false;
  SdpStatus sdp_status = SdpStatus::Unknown;
  double margin = 0;
  // layer 3
  std::size_t grid_points = 0, samples_accepted = 0, samples_tried = 0;
  bool vacuous_by_sampling = false;
  std::vector<Counterexample> counterexamples;
  /// Layer 1 accepted while layer 3 found a violation.
  bool contradiction = false;
  std::string note;
  double seconds = 0;

  bool certified() const { return exact_certificate || numeric_certificate; }
  bool falsified() const { return !counterexamples.empty(); }
};

struct VerificationReport {
  Verdict verdict = Verdict::Verified;
  std::vector<ConstraintReport> constraints;
  std::size_t exact = 0, numeric = 0, falsified = 0;
  double seconds = 0;
};

/// Layers 1 and 2 for a single parameter-free constraint (fills the certificate fields).
void certify(const ImplicationConstraint& c, std::size_t num_vars, const VerifyConfig& cfg,
             ConstraintReport& out);

/// Exact certificate from approximate solver values: round, project onto the
/// coefficient-matching rows, then check identities and PSD blocks exactly.
std::optional<Assignment> exact_certificate(const SosProgram& prog, const std::vector<double>& values,
                                            const RoundOptions& rounding);

/// Layer 3 for a single constraint.
void falsify(const ImplicationConstraint& c, std::size_t num_vars, const VerifyConfig& cfg,
             ConstraintReport& out);

VerificationReport check_constraints(const std::vector<ImplicationConstraint>& constraints,
                                     std::size_t num_vars, std::span<const std::string> names,
                                     const VerifyConfig& cfg = {});

/// Builds the candidate constraints for the program and checks the required ones.
VerificationReport check_invariant(const Program& prog, const Polynomial& inv,
                                   const std::optional<Polynomial>& inner, const VerifyConfig& cfg = {},
                                   const WpOptions& wopts = {});

}  // namespace piq
