#pragma once

// Verification conditions for a loop invariant template, as implication
// constraints  (f_1 >= 0 and ... and h_1 = 0 ...)  =>  g >= 0.

#include <optional>
#include <string>
#include <vector>

#include "piq/wp.hpp"

namespace piq {

class VcError : public Error {
 public:
  using Error::Error;
};

struct VcAtom {
  enum class Kind { Ge, Eq };
  Polynomial p;
  Kind rel = Kind::Ge;
  friend bool operator==(const VcAtom&, const VcAtom&) = default;
};

/// An implication before normalization; the antecedent is an arbitrary guard.
struct RawConstraint {
  GuardPtr antecedent;
  ParamPolynomial consequent;  // required >= 0
  std::string clause;          // pre, exit, step, inner-exit, inner-step
  int family = 1;              // 1: F_i & G_j, 2: F_i & !G, 3: !F & G_j
  int i = -1, j = -1;
  bool required = true;
};

struct ImplicationConstraint {
  std::vector<VcAtom> antecedent;
  ParamPolynomial consequent;
  std::string tag;
  std::string clause;
  int family = 1;
  /// Outside the loop gate; only checked when explicitly requested.
  bool required = true;
};

/// Pointwise f <= g for disjoint guarded expectations, as k*l + k + l raw implications.
std::vector<RawConstraint> leq_to_implications(const GuardedExpectation& f,
                                               const GuardedExpectation& g,
                                               const std::string& clause);

struct NormalizeContext {
  std::size_t num_vars = 0;
  std::vector<bool> is_int;
  std::vector<std::pair<Atom, GuardPtr>> hints;
  /// Strict comparisons p > 0 (over reals) become p - margin >= 0.
  Rational strict_margin = 0;

  static NormalizeContext from(const Program& prog);
};

/// Push negations to atoms, split disjunctions, apply hints, widen strict
/// comparisons, and drop antecedents found contradictory.
std::vector<ImplicationConstraint> normalize(const RawConstraint& raw, const NormalizeContext& ctx);

/// Pre-loop assignments as equalities, when that is exact.
std::optional<std::vector<VcAtom>> init_equalities(const Program& prog);

std::vector<RawConstraint> boundary_invariant_constraints(const Program& prog,
                                                          const ParamPolynomial& inv,
                                                          const WpOptions& wopts = {});
std::vector<RawConstraint> nested_constraints(const Program& prog, const ParamPolynomial& inv,
                                              const ParamPolynomial& inner,
                                              const WpOptions& wopts = {});

struct VcOptions {
  unsigned degree = 2;
  WpOptions wp;
  Rational strict_margin = 0;
};

struct VcSystem {
  std::size_t num_vars = 0;
  std::vector<std::string> names;
  ParamTable params;
  Template invariant;
  std::optional<Template> inner;
  std::vector<RawConstraint> raw;
  std::vector<ImplicationConstraint> constraints;
  std::vector<std::string> notes;
};

VcSystem generate_vcs(const Program& prog, const VcOptions& opts);
/// Constraints for a fixed candidate (no template parameters).
std::vector<ImplicationConstraint> candidate_vcs(const Program& prog, const Polynomial& inv,
                                                 const std::optional<Polynomial>& inner,
                                                 const WpOptions& wopts = {},
                                                 const Rational& strict_margin = 0);

bool holds(const ImplicationConstraint& c, const Assignment& values, std::span<const Rational> state,
           const ParamTable* names = nullptr);
bool antecedent_holds(const std::vector<VcAtom>& atoms, std::span<const Rational> state);

std::string to_string(const VcAtom& a, std::span<const std::string> names);
std::string to_string(const ImplicationConstraint& c, std::span<const std::string> names,
                      const ParamTable& table);
/// One implication per line.
std::string dump(const VcSystem& sys);

}  // namespace piq
