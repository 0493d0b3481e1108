#pragma once

// Rational rounding of solver output and exact linear algebra over Q.

#include <optional>
#include <span>
#include <vector>

#include "piq/poly.hpp"

namespace piq {

struct RoundOptions {
  double truncate_eps = 1e-6;
  long max_denominator = 10000;
};

/// Best rational approximation with denominator <= max_denominator (continued
/// fractions, semiconvergents included). |v| < truncate_eps gives 0.
Rational round_value(double v, const RoundOptions& opts = {});
std::vector<Rational> round_values(std::span<const double> values, const RoundOptions& opts = {});
/// Closest fraction p/q with q <= max_den to an exact rational.
Rational limit_denominator(const Rational& x, long max_den);

using RationalMatrix = std::vector<std::vector<Rational>>;

/// Exact positive semidefiniteness by symmetric elimination: a zero pivot
/// requires its whole remaining row to vanish.
bool is_psd(RationalMatrix m);

/// Least-norm change of the parameters occurring in rows so that every row
/// evaluates to zero exactly. Parameters absent from start count as 0;
/// parameters not occurring in any row keep their value. nullopt when the
/// rows are inconsistent or the system exceeds max_unknowns.
std::optional<Assignment> project_onto(const std::vector<AffineForm>& rows, const Assignment& start,
                                       std::size_t max_unknowns = 2000);

/// Linear equalities (each p = 0) solved for pivot variables:
/// x_p = constant + sum coef_j x_j over non-pivot j.
struct LinearElimination {
  bool consistent = true;
  std::vector<std::size_t> pivot_var;
  std::vector<Rational> constant;
  std::vector<std::vector<std::pair<std::size_t, Rational>>> terms;
  std::vector<bool> is_pivot;

  void apply(std::vector<Rational>& x) const {
    for (std::size_t i = 0; i < pivot_var.size(); ++i) {
      Rational v = constant[i];
      for (const auto& [j, c] : terms[i]) v += c * x[j];
      x[pivot_var[i]] = v;
    }
  }
  void apply(std::vector<double>& x, const std::vector<double>& cd,
             const std::vector<std::vector<std::pair<std::size_t, double>>>& td) const {
    for (std::size_t i = 0; i < pivot_var.size(); ++i) {
      double v = cd[i];
      for (const auto& [j, c] : td[i]) v += c * x[j];
      x[pivot_var[i]] = v;
    }
  }
};

LinearElimination solve_linear(const std::vector<Polynomial>& equalities, std::size_t n);

}  // namespace piq
