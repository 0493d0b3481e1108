#pragma once

// Exact multivariate polynomials over the rationals, and polynomials whose
// coefficients are affine forms over unknown synthesis parameters.

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace piq {

using Rational = mpq_class;

/// n/d in canonical form (mpq_class does not canonicalize on construction).
inline Rational ratio(long n, long d) {
  Rational r(n, d);
  r.canonicalize();
  return r;
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exponent vector over a fixed ambient variable count.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::size_t num_vars) : exps_(num_vars, 0) {}
  explicit Monomial(std::vector<std::uint16_t> exps);

  static Monomial variable(std::size_t num_vars, std::size_t index, unsigned power = 1);

  std::size_t num_vars() const { return exps_.size(); }
  unsigned degree() const { return degree_; }
  unsigned operator[](std::size_t i) const { return exps_[i]; }
  std::span<const std::uint16_t> exponents() const { return exps_; }
  bool is_constant() const { return degree_ == 0; }

  Monomial operator*(const Monomial& other) const;
  Monomial with_exponent(std::size_t var, unsigned exponent) const;
  /// Change the ambient variable count. Dropped variables must have exponent 0.
  Monomial resized(std::size_t num_vars) const;

  friend bool operator==(const Monomial&, const Monomial&) = default;

 private:
  std::vector<std::uint16_t> exps_;
  unsigned degree_ = 0;
};

/// Graded lexicographic order: lower total degree first, ties broken so that
/// x_1 precedes x_2 (1, x, y, z, x^2, xy, xz, y^2, ...).
struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

/// All monomials of total degree <= degree in graded-lex order.
std::vector<Monomial> monomials_up_to(std::size_t num_vars, unsigned degree);

// ---------------------------------------------------------------------------
// Parameters and affine forms

enum class ParamKind { TemplateCoefficient, NonnegMultiplier, FreeMultiplier, GramEntry };

const char* to_string(ParamKind kind);

struct ParamId {
  std::uint32_t value = 0;
  auto operator<=>(const ParamId&) const = default;
};

struct Parameter {
  std::string name;
  ParamKind kind;
};

class ParamTable {
 public:
  ParamId add(std::string name, ParamKind kind);
  const Parameter& operator[](ParamId id) const { return params_.at(id.value); }
  std::size_t size() const { return params_.size(); }

 private:
  std::vector<Parameter> params_;
};

using Assignment = std::map<ParamId, Rational>;

class MissingParameter : public Error {
 public:
  MissingParameter(ParamId id, const std::string& name)
      : Error("no value for parameter " + name), id_(id) {}
  ParamId id() const { return id_; }

 private:
  ParamId id_;
};

/// constant + sum_k coeff_k * param_k
class AffineForm {
 public:
  AffineForm() = default;
  AffineForm(Rational constant) : constant_(std::move(constant)) {}  // NOLINT implicit
  AffineForm(long constant) : constant_(constant) {}                  // NOLINT implicit

  static AffineForm parameter(ParamId id, const Rational& coeff = 1);

  const Rational& constant() const { return constant_; }
  const std::map<ParamId, Rational>& linear() const { return linear_; }
  bool is_zero() const { return sgn(constant_) == 0 && linear_.empty(); }
  bool is_constant() const { return linear_.empty(); }
  Rational coefficient(ParamId id) const;

  AffineForm& operator+=(const AffineForm& other);
  AffineForm& operator-=(const AffineForm& other);
  AffineForm& operator*=(const Rational& scale);

  friend AffineForm operator+(AffineForm a, const AffineForm& b) { return a += b; }
  friend AffineForm operator-(AffineForm a, const AffineForm& b) { return a -= b; }
  friend AffineForm operator*(AffineForm a, const Rational& s) { return a *= s; }
  friend AffineForm operator*(const Rational& s, AffineForm a) { return a *= s; }
  AffineForm operator-() const { return *this * Rational(-1); }
  friend bool operator==(const AffineForm& a, const AffineForm& b) {
    return a.constant_ == b.constant_ && a.linear_ == b.linear_;
  }

  /// Throws MissingParameter when a parameter has no value.
  Rational evaluate(const Assignment& values, const ParamTable* names = nullptr) const;

 private:
  Rational constant_;
  std::map<ParamId, Rational> linear_;
};

inline bool is_zero_coeff(const Rational& r) { return sgn(r) == 0; }
inline bool is_zero_coeff(const AffineForm& a) { return a.is_zero(); }

// ---------------------------------------------------------------------------
// Polynomials

template <class Coeff>
class BasicPolynomial {
 public:
  using Terms = std::map<Monomial, Coeff, GrlexLess>;

  BasicPolynomial() = default;
  explicit BasicPolynomial(std::size_t num_vars) : num_vars_(num_vars) {}

  static BasicPolynomial constant(std::size_t num_vars, const Coeff& c) {
    BasicPolynomial p(num_vars);
    p.add_term(Monomial(num_vars), c);
    return p;
  }
  static BasicPolynomial variable(std::size_t num_vars, std::size_t index) {
    BasicPolynomial p(num_vars);
    p.add_term(Monomial::variable(num_vars, index), Coeff(1));
    return p;
  }
  static BasicPolynomial term(const Monomial& m, const Coeff& c) {
    BasicPolynomial p(m.num_vars());
    p.add_term(m, c);
    return p;
  }

  std::size_t num_vars() const { return num_vars_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  /// -1 for the zero polynomial.
  int degree() const {
    return terms_.empty() ? -1 : static_cast<int>(terms_.rbegin()->first.degree());
  }
  Coeff coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Coeff() : it->second;
  }

  void add_term(const Monomial& m, const Coeff& c) {
    if (m.num_vars() != num_vars_) throw Error("monomial arity mismatch");
    if (is_zero_coeff(c)) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (is_zero_coeff(it->second)) terms_.erase(it);
    }
  }

  BasicPolynomial& operator+=(const BasicPolynomial& o) {
    check_arity(o);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  BasicPolynomial& operator-=(const BasicPolynomial& o) {
    check_arity(o);
    for (const auto& [m, c] : o.terms_) add_term(m, Coeff(c) * Rational(-1));
    return *this;
  }
  BasicPolynomial& operator*=(const Rational& s) {
    if (sgn(s) == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, c] : terms_) c *= s;
    return *this;
  }
  friend BasicPolynomial operator+(BasicPolynomial a, const BasicPolynomial& b) { return a += b; }
  friend BasicPolynomial operator-(BasicPolynomial a, const BasicPolynomial& b) { return a -= b; }
  friend BasicPolynomial operator*(BasicPolynomial a, const Rational& s) { return a *= s; }
  friend BasicPolynomial operator*(const Rational& s, BasicPolynomial a) { return a *= s; }
  BasicPolynomial operator-() const { return *this * Rational(-1); }

  friend bool operator==(const BasicPolynomial& a, const BasicPolynomial& b) {
    return a.num_vars_ == b.num_vars_ && a.terms_ == b.terms_;
  }

  void check_arity(const BasicPolynomial& o) const {
    if (o.num_vars_ != num_vars_) throw Error("polynomial arity mismatch");
  }

 private:
  std::size_t num_vars_ = 0;
  Terms terms_;
};

using Polynomial = BasicPolynomial<Rational>;
using ParamPolynomial = BasicPolynomial<AffineForm>;

/// Product with a parameter-free polynomial; keeps parameters affine.
template <class Coeff>
BasicPolynomial<Coeff> operator*(const BasicPolynomial<Coeff>& a, const Polynomial& b) {
  if (a.num_vars() != b.num_vars()) throw Error("polynomial arity mismatch");
  BasicPolynomial<Coeff> out(a.num_vars());
  for (const auto& [ma, ca] : a.terms())
    for (const auto& [mb, cb] : b.terms()) out.add_term(ma * mb, ca * cb);
  return out;
}

Polynomial pow(const Polynomial& p, unsigned exponent);

ParamPolynomial to_param(const Polynomial& p);
/// Parameter-free part check; throws when p mentions a parameter.
Polynomial to_constant(const ParamPolynomial& p);
bool is_parameter_free(const ParamPolynomial& p);
/// All parameters mentioned by p, ascending.
std::vector<ParamId> parameters_of(const ParamPolynomial& p);

/// Polynomial composition p[var := replacement].
template <class Coeff>
BasicPolynomial<Coeff> substitute(const BasicPolynomial<Coeff>& p, std::size_t var,
                                  const Polynomial& replacement);
/// Simultaneous substitution of every variable (replacements.size() == p.num_vars()).
/// Replacements may live in a different ambient space.
template <class Coeff>
BasicPolynomial<Coeff> compose(const BasicPolynomial<Coeff>& p,
                               std::span<const Polynomial> replacements);

Rational evaluate(const Polynomial& p, std::span<const Rational> point);
double evaluate(const Polynomial& p, std::span<const double> point);
AffineForm evaluate(const ParamPolynomial& p, std::span<const Rational> point);

Polynomial instantiate(const ParamPolynomial& p, const Assignment& values,
                       const ParamTable* names = nullptr);

/// Change ambient variable count; dropped variables must not occur.
template <class Coeff>
BasicPolynomial<Coeff> resize_vars(const BasicPolynomial<Coeff>& p, std::size_t num_vars);

/// Variables that occur in p.
std::vector<std::size_t> variables_of(const Polynomial& p);
std::vector<std::size_t> variables_of(const ParamPolynomial& p);

struct Template {
  ParamPolynomial poly;
  std::vector<Monomial> monomials;
  std::vector<ParamId> coefficients;
};

/// One fresh template coefficient per monomial of degree <= degree. Names follow
/// the variable-index convention prefix_0, prefix_1, prefix_12, ...
Template make_template(std::size_t num_vars, unsigned degree, ParamTable& table,
                       const std::string& prefix = "c");

// ---------------------------------------------------------------------------
// Canonical text rendering: terms in descending graded order, coefficients p/q.

std::string to_string(const Rational& r);
std::string to_string(const Monomial& m, std::span<const std::string> names);
std::string to_string(const Polynomial& p, std::span<const std::string> names);
std::string to_string(const AffineForm& a, const ParamTable& table);
std::string to_string(const ParamPolynomial& p, std::span<const std::string> names,
                      const ParamTable& table);

/// Default names x0, x1, ... for n variables.
std::vector<std::string> default_names(std::size_t n);

}  // namespace piq
