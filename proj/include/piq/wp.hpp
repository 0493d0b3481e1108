#pragma once

// Weakest pre-expectations of loop-free statements.

#include <vector>

#include "piq/lang.hpp"

namespace piq {

/// sum_i [guard_i] * value_i with pairwise disjoint guards.
struct GuardedExpectation {
  struct Branch {
    GuardPtr guard;  // never null
    ParamPolynomial value;
  };
  std::size_t num_vars = 0;
  std::vector<Branch> branches;

  GuardedExpectation() = default;
  explicit GuardedExpectation(std::size_t n) : num_vars(n) {}
  static GuardedExpectation unguarded(ParamPolynomial value);

  /// Value at a state; the unique true branch, or 0.
  AffineForm evaluate(std::span<const Rational> state) const;
  /// Number of branch guards that hold at a state.
  std::size_t active(std::span<const Rational> state) const;
};

/// Moments are exact; a symbolic normal sigma is accepted only for k <= 1.
Rational moment(const Distribution& dist, unsigned k);
Rational mean(const Distribution& dist);
/// E[r^k] as a polynomial over num_vars state variables; differs from moment()
/// only for normals whose standard deviation is a program variable.
Polynomial moment_polynomial(const Distribution& dist, unsigned k, std::size_t num_vars);

struct WpOptions {
  /// Substitute E[r] for every random term instead of expanding moments.
  bool paper_literal = false;
};

GuardedExpectation wp(const Stmt& prog, const GuardedExpectation& post, const WpOptions& opts = {});
GuardedExpectation wp_assign(std::size_t var, const ExprPtr& e, const GuardedExpectation& post,
                             const WpOptions& opts = {});

/// Disjoint refinement: every pair of overlapping branches is split along guard complements.
GuardedExpectation dnf_normalize(const GuardedExpectation& e);
GuardedExpectation operator+(const GuardedExpectation& a, const GuardedExpectation& b);
GuardedExpectation operator*(const Rational& s, const GuardedExpectation& e);

GuardedExpectation to_guarded(const Expectation& e, std::size_t num_vars);

/// Guard conjunction with True/False absorbed.
GuardPtr conj(const GuardPtr& a, const GuardPtr& b);

ExprPtr substitute(const ExprPtr& e, std::size_t var, const ExprPtr& replacement);
GuardPtr substitute(const GuardPtr& g, std::size_t var, const ExprPtr& replacement);
bool mentions(const Guard& g, std::size_t var);

std::string to_string(const GuardedExpectation& e, std::span<const std::string> names,
                      const ParamTable& table);

}  // namespace piq
