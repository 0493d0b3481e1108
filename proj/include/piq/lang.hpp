#pragma once

// Annotated probabilistic guarded-command programs: AST, parser, printer and
// validator.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "piq/poly.hpp"

namespace piq {

struct SourcePos {
  int line = 0;
  int column = 0;
};

class ParseError : public Error {
 public:
  ParseError(SourcePos pos, const std::string& message);
  SourcePos pos() const { return pos_; }

 private:
  SourcePos pos_;
};

// ---------------------------------------------------------------------------
// Expressions

struct Distribution {
  enum class Kind { Uniform, Normal, Discrete };
  Kind kind = Kind::Uniform;
  Rational a, b;                 // Uniform bounds
  Rational mean;                 // Normal
  std::optional<Rational> sigma; // Normal, numeric standard deviation
  std::string sigma_symbol;      // Normal, symbolic standard deviation
  std::optional<std::size_t> sigma_var;  // Normal, standard deviation read from a program variable
  std::vector<std::pair<Rational, Rational>> points;  // Discrete (value, probability)

  friend bool operator==(const Distribution&, const Distribution&) = default;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Const, Var, Random, Add, Mul, Pow };
  Kind kind = Kind::Const;
  Rational value;
  std::size_t var = 0;
  std::shared_ptr<const Distribution> dist;
  /// Occurrence id; every syntactic random term is an independent draw.
  std::size_t random_id = 0;
  ExprPtr lhs, rhs;
  unsigned exponent = 0;
};

// Smart constructors. Constant operands are folded, so the parser and any
// generator agree on a single normal form.
ExprPtr make_const(const Rational& v);
ExprPtr make_var(std::size_t index);
ExprPtr make_random(Distribution dist, std::size_t id);
ExprPtr make_add(ExprPtr a, ExprPtr b);
ExprPtr make_mul(ExprPtr a, ExprPtr b);
ExprPtr make_pow(ExprPtr base, unsigned exponent);
ExprPtr make_neg(ExprPtr a);
ExprPtr make_sub(ExprPtr a, ExprPtr b);

/// Structural equality; random occurrence ids are not compared.
bool equal(const Expr& a, const Expr& b);
bool has_random(const Expr& e);
/// Throws when e contains a random term.
Polynomial to_polynomial(const Expr& e, std::size_t num_vars);

// ---------------------------------------------------------------------------
// Guards

enum class Rel { Lt, Le, Eq, Ne, Gt, Ge };
const char* to_string(Rel rel);

struct Guard;
using GuardPtr = std::shared_ptr<const Guard>;

struct Guard {
  enum class Kind { True, False, Atom, And, Or, Not };
  Kind kind = Kind::True;
  Rel rel = Rel::Lt;
  ExprPtr lhs, rhs;
  GuardPtr a, b;
};

GuardPtr make_true();
GuardPtr make_false();
GuardPtr make_atom(Rel rel, ExprPtr lhs, ExprPtr rhs);
GuardPtr make_and(GuardPtr a, GuardPtr b);
GuardPtr make_or(GuardPtr a, GuardPtr b);
GuardPtr make_not(GuardPtr a);

bool equal(const Guard& a, const Guard& b);
bool holds(const Guard& g, std::span<const Rational> state);
/// Rewrite into the core fragment: atoms a<b, conjunction and negation only.
GuardPtr to_primitive(const GuardPtr& g);

/// A comparison p rel 0 with rel in {Gt, Ge, Eq, Ne}, scaled so the leading
/// coefficient has absolute value 1 (and is positive for Eq/Ne).
struct Atom {
  Polynomial p;
  Rel rel = Rel::Ge;
  friend bool operator==(const Atom&, const Atom&) = default;
};
Atom canonical_atom(Rel rel, const Polynomial& lhs, const Polynomial& rhs);
Atom canonical_atom(const Guard& atom, std::size_t num_vars);
bool holds(const Atom& atom, std::span<const Rational> state);
/// The complementary comparison, canonicalized.
Atom negate(const Atom& atom);
std::string to_string(const Atom& atom, std::span<const std::string> names);

// ---------------------------------------------------------------------------
// Statements

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;

struct Stmt {
  enum class Kind { Skip, Abort, Assign, Seq, Prob, Ite, While };
  Kind kind = Kind::Skip;
  std::size_t var = 0;
  ExprPtr expr;
  Rational prob;
  GuardPtr guard;
  std::vector<StmtPtr> body;  // Seq: statements; Prob/Ite: {left, right}; While: {body}
  SourcePos pos;
};

StmtPtr make_skip(SourcePos pos = {});
StmtPtr make_abort(SourcePos pos = {});
StmtPtr make_assign(std::size_t var, ExprPtr e, SourcePos pos = {});
/// Flattens nested sequences; a single statement is returned unchanged.
StmtPtr make_seq(std::vector<StmtPtr> stmts, SourcePos pos = {});
StmtPtr make_prob(const Rational& p, StmtPtr left, StmtPtr right, SourcePos pos = {});
StmtPtr make_ite(GuardPtr g, StmtPtr then_branch, StmtPtr else_branch, SourcePos pos = {});
StmtPtr make_while(GuardPtr g, StmtPtr body, SourcePos pos = {});

bool equal(const Stmt& a, const Stmt& b);
bool contains_loop(const Stmt& s);
/// Flattened statement list (a non-sequence counts as a list of one).
std::vector<StmtPtr> statements(const StmtPtr& s);

// ---------------------------------------------------------------------------
// Annotated loops

/// Sum of terms [guard] * expr; a null guard means true.
struct Expectation {
  struct Term {
    GuardPtr guard;
    ExprPtr expr;
  };
  std::vector<Term> terms;
};

struct Hint {
  GuardPtr from;
  GuardPtr to;
  SourcePos pos;
};

struct Program {
  std::vector<std::string> vars;
  std::vector<bool> is_int;
  StmtPtr init;  // loop-free prefix, skip when absent
  StmtPtr loop;  // the top-level while
  std::optional<Expectation> pre, post;
  std::vector<Hint> hints;
  bool terminates = false;
  std::vector<std::string> symbols;  // symbolic distribution parameters

  std::size_t num_vars() const { return vars.size(); }
  std::optional<std::size_t> var_index(std::string_view name) const;
  /// Inner loop of a nested program, if any.
  StmtPtr inner_loop() const;
  bool nested() const { return inner_loop() != nullptr; }
};

Program parse(std::string_view text);
ExprPtr parse_expr(std::string_view text, const std::vector<std::string>& vars);
GuardPtr parse_guard(std::string_view text, const std::vector<std::string>& vars);
Expectation parse_expectation(std::string_view text, const std::vector<std::string>& vars);

// Fully parenthesized printing; parse(print(p)) reproduces p.
std::string to_string(const Expr& e, std::span<const std::string> names);
std::string to_string(const Guard& g, std::span<const std::string> names);
std::string to_string(const Stmt& s, std::span<const std::string> names, int indent = 0);
std::string to_string(const Expectation& e, std::span<const std::string> names);
std::string to_string(const Program& p);

bool equal(const Program& a, const Program& b);

struct Diagnostic {
  enum class Severity { Error, Warning, Note };
  Severity severity;
  std::string message;
  SourcePos pos;
};

std::vector<Diagnostic> validate(const Program& prog);
bool has_errors(const std::vector<Diagnostic>& diags);
std::string to_string(const Diagnostic& d);

}  // namespace piq
