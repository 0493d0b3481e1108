#pragma once

// Sum-of-squares relaxation of implication constraints and the Gram-matrix
// encoding into affine equalities over parameters.

#include <map>
#include <string>
#include <vector>

#include "piq/sdp.hpp"
#include "piq/vcgen.hpp"

namespace piq {

/// Symmetric matrix whose upper-triangle entries are GramEntry parameters.
struct GramBlock {
  std::vector<Monomial> basis;
  std::vector<ParamId> entries;  // row-major upper triangle
  std::string tag;

  std::size_t size() const { return basis.size(); }
  ParamId at(std::size_t i, std::size_t j) const;
  /// basis^T A basis as a polynomial in the entries.
  ParamPolynomial expand(std::size_t num_vars) const;
};

GramBlock make_gram_block(std::vector<Monomial> basis, ParamTable& table, const std::string& tag);

struct SosConstraint {
  ParamPolynomial residual;
  /// residual must vanish identically instead of being SOS.
  bool identity = false;
  std::vector<ParamId> multipliers;          // scalar multipliers introduced here
  std::vector<GramBlock> multiplier_blocks;  // SOS polynomial multipliers
  std::string tag;
  bool required = true;
};

struct RelaxOptions {
  /// Degree of SOS multipliers on >= atoms; 0 means nonnegative constants.
  unsigned mult_degree = 0;
  /// Add products of pairs of >= atoms (including squares), each with its own multiplier.
  bool products = false;
  /// Products over every subset of the >= atoms.
  bool all_products = false;
  /// Equality multipliers are polynomials of degree deg(g) - deg(h) (at least
  /// mult_degree) rather than constants.
  bool eq_polynomial = true;
  /// Substitute linear equality atoms away first (eliminate_equalities).
  bool eliminate_equalities = true;
};

/// Linear equality atoms solved exactly and substituted into the consequent
/// and the remaining atoms. nullopt when no real point satisfies the antecedent
/// (inconsistent equalities or an atom that becomes a false constant).
std::optional<ImplicationConstraint> eliminate_equalities(const ImplicationConstraint& c);

/// residual = g - sum r_i f_i.
SosConstraint relax_simple(const ImplicationConstraint& c, ParamTable& table, const RelaxOptions& opts = {});

struct StengleOptions {
  unsigned degree = 2;
  unsigned power = 1;
  std::size_t basis_cap = 400;
  std::size_t max_atoms = 8;
};

/// Emptiness of {f >= 0 for f in ge, h = 0 for h in eq, m != 0}: certificate
/// sum_a u_a F^a + m^(2k) + sum v_l h_l = 0. Without m the monoid term is 1.
SosConstraint encode_emptiness(const std::vector<Polynomial>& ge, const std::vector<Polynomial>& eq,
                               const std::optional<Polynomial>& m, std::size_t num_vars,
                               ParamTable& table, const StengleOptions& opts, const std::string& tag);

/// Certificate that the fixed (parameter-free) constraint holds: emptiness of
/// antecedent together with -g >= 0, g != 0.
SosConstraint encode_stengle(const ImplicationConstraint& c, std::size_t num_vars, ParamTable& table,
                             const StengleOptions& opts = {});

struct GramOptions {
  bool newton = false;
  std::size_t basis_cap = 400;
  /// Run reduce_faces after gramification.
  bool reduce = true;
};

/// Gram block for the residual and the coefficient-matching rows (each AffineForm = 0).
struct Gramified {
  std::optional<GramBlock> block;
  std::vector<AffineForm> rows;
};

Gramified gramify(const SosConstraint& s, std::size_t num_vars, ParamTable& table, const GramOptions& opts = {});

/// Everything the SDP layer needs, kept exact.
struct SosProgram {
  std::size_t num_vars = 0;
  ParamTable params;
  std::vector<SosConstraint> constraints;
  std::vector<GramBlock> blocks;  // residual blocks and multiplier blocks
  std::vector<AffineForm> rows;   // = 0
  /// Parameters whose value the rows determine; substituted out of rows.
  std::map<ParamId, Rational> fixed;
  bool trivially_infeasible = false;
  std::string infeasible_reason;
};

/// Gramify all constraints, collect multiplier blocks, collapse duplicate rows.
void finalize(SosProgram& prog, const GramOptions& opts = {});

/// Exact facial reduction. Rows forcing a sum of same-sign Gram diagonals or
/// nonnegative multipliers to zero pin those to zero; a zero diagonal drops its
/// basis monomial. Parameters determined by the rows (after eliminating
/// template and free multiplier columns) go to prog.fixed.
void reduce_faces(SosProgram& prog);

/// Block-diagonal SDP: Gram blocks first, then a 1x1 block per nonnegative
/// multiplier; template coefficients and free multipliers become free scalars.
struct Assembled {
  SdpProblem problem;
  struct Ref {
    bool free = true;
    std::uint32_t index = 0;  // free scalar index
    std::uint32_t block = 0, row = 0, col = 0;
    bool fixed = false;
    double value = 0;  // when fixed
  };
  std::vector<Ref> refs;  // indexed by ParamId
};

Assembled assemble(const SosProgram& prog);
/// Solver values per parameter (indexed by ParamId).
std::vector<double> parameter_values(const Assembled& a, const SdpSolution& s);

/// Exact check that the Gram identity holds for an assignment.
bool gram_identity_holds(const SosConstraint& s, const GramBlock* block, const Assignment& values,
                         std::size_t num_vars);

}  // namespace piq
