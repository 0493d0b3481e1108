#pragma once

// Program families indexed by n, used for scaling runs.

#include <cstddef>
#include <string>

namespace piq {

enum class ParametricKind { Linear, Quadratic, RuinPower };

ParametricKind parse_parametric_kind(const std::string& name);  // linear, quadratic, ruin-power
const char* to_string(ParametricKind k);

/// Program text with #pre/#post annotations. n >= 1.
std::string gen_parametric(ParametricKind kind, unsigned n);

/// The invariant the family is known to admit, in the surface syntax.
std::string expected_invariant(ParametricKind kind, unsigned n);

/// Template degree the family needs.
unsigned parametric_degree(ParametricKind kind, unsigned n);

/// Linear family: template coefficients over all n + 2 variables, and the
/// count over x_1..x_n alone.
std::size_t linear_coefficients_full(unsigned n);
std::size_t linear_coefficients_restricted(unsigned n);

}  // namespace piq
