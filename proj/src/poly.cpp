#include "piq/poly.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace piq {

Monomial::Monomial(std::vector<std::uint16_t> exps) : exps_(std::move(exps)) {
  degree_ = std::accumulate(exps_.begin(), exps_.end(), 0u);
}

Monomial Monomial::variable(std::size_t num_vars, std::size_t index, unsigned power) {
  if (index >= num_vars) throw Error("variable index out of range");
  Monomial m(num_vars);
  m.exps_[index] = static_cast<std::uint16_t>(power);
  m.degree_ = power;
  return m;
}

Monomial Monomial::operator*(const Monomial& other) const {
  if (other.exps_.size() != exps_.size()) throw Error("monomial arity mismatch");
  Monomial out(*this);
  for (std::size_t i = 0; i < exps_.size(); ++i) out.exps_[i] += other.exps_[i];
  out.degree_ += other.degree_;
  return out;
}

Monomial Monomial::with_exponent(std::size_t var, unsigned exponent) const {
  Monomial out(*this);
  out.degree_ = out.degree_ - out.exps_.at(var) + exponent;
  out.exps_[var] = static_cast<std::uint16_t>(exponent);
  return out;
}

Monomial Monomial::resized(std::size_t num_vars) const {
  std::vector<std::uint16_t> e(num_vars, 0);
  for (std::size_t i = 0; i < exps_.size(); ++i) {
    if (i < num_vars)
      e[i] = exps_[i];
    else if (exps_[i] != 0)
      throw Error("cannot drop a variable that occurs");
  }
  return Monomial(std::move(e));
}

bool GrlexLess::operator()(const Monomial& a, const Monomial& b) const {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  // Same degree: larger exponent on an earlier variable comes first.
  auto ea = a.exponents(), eb = b.exponents();
  for (std::size_t i = 0; i < ea.size() && i < eb.size(); ++i)
    if (ea[i] != eb[i]) return ea[i] > eb[i];
  return ea.size() < eb.size();
}

namespace {

void monomials_of_degree(std::size_t n, unsigned d, std::size_t var,
                         std::vector<std::uint16_t>& cur, std::vector<Monomial>& out) {
  if (var + 1 == n) {
    cur[var] = static_cast<std::uint16_t>(d);
    out.emplace_back(cur);
    cur[var] = 0;
    return;
  }
  for (int e = static_cast<int>(d); e >= 0; --e) {
    cur[var] = static_cast<std::uint16_t>(e);
    monomials_of_degree(n, d - e, var + 1, cur, out);
  }
  cur[var] = 0;
}

}  // namespace

std::vector<Monomial> monomials_up_to(std::size_t num_vars, unsigned degree) {
  std::vector<Monomial> out;
  if (num_vars == 0) {
    out.emplace_back(0);
    return out;
  }
  std::vector<std::uint16_t> cur(num_vars, 0);
  for (unsigned d = 0; d <= degree; ++d) monomials_of_degree(num_vars, d, 0, cur, out);
  return out;
}

const char* to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::TemplateCoefficient: return "template";
    case ParamKind::NonnegMultiplier: return "nonneg";
    case ParamKind::FreeMultiplier: return "free";
    case ParamKind::GramEntry: return "gram";
  }
  return "?";
}

ParamId ParamTable::add(std::string name, ParamKind kind) {
  params_.push_back({std::move(name), kind});
  return ParamId{static_cast<std::uint32_t>(params_.size() - 1)};
}

AffineForm AffineForm::parameter(ParamId id, const Rational& coeff) {
  AffineForm a;
  if (sgn(coeff) != 0) a.linear_.emplace(id, coeff);
  return a;
}

Rational AffineForm::coefficient(ParamId id) const {
  auto it = linear_.find(id);
  return it == linear_.end() ? Rational(0) : it->second;
}

AffineForm& AffineForm::operator+=(const AffineForm& other) {
  constant_ += other.constant_;
  for (const auto& [id, c] : other.linear_) {
    auto [it, inserted] = linear_.try_emplace(id, c);
    if (!inserted) {
      it->second += c;
      if (sgn(it->second) == 0) linear_.erase(it);
    }
  }
  return *this;
}

AffineForm& AffineForm::operator-=(const AffineForm& other) { return *this += -other; }

AffineForm& AffineForm::operator*=(const Rational& scale) {
  if (sgn(scale) == 0) {
    constant_ = 0;
    linear_.clear();
    return *this;
  }
  constant_ *= scale;
  for (auto& [id, c] : linear_) c *= scale;
  return *this;
}

Rational AffineForm::evaluate(const Assignment& values, const ParamTable* names) const {
  Rational out = constant_;
  for (const auto& [id, c] : linear_) {
    auto it = values.find(id);
    if (it == values.end())
      throw MissingParameter(id, names ? (*names)[id].name : "#" + std::to_string(id.value));
    out += c * it->second;
  }
  return out;
}

Polynomial pow(const Polynomial& p, unsigned exponent) {
  Polynomial result = Polynomial::constant(p.num_vars(), Rational(1));
  Polynomial base = p;
  while (exponent) {
    if (exponent & 1u) result = result * base;
    exponent >>= 1u;
    if (exponent) base = base * base;
  }
  return result;
}

ParamPolynomial to_param(const Polynomial& p) {
  ParamPolynomial out(p.num_vars());
  for (const auto& [m, c] : p.terms()) out.add_term(m, AffineForm(c));
  return out;
}

bool is_parameter_free(const ParamPolynomial& p) {
  return std::all_of(p.terms().begin(), p.terms().end(),
                     [](const auto& t) { return t.second.is_constant(); });
}

Polynomial to_constant(const ParamPolynomial& p) {
  Polynomial out(p.num_vars());
  for (const auto& [m, c] : p.terms()) {
    if (!c.is_constant()) throw Error("polynomial still mentions unknown parameters");
    out.add_term(m, c.constant());
  }
  return out;
}

std::vector<ParamId> parameters_of(const ParamPolynomial& p) {
  std::set<ParamId> ids;
  for (const auto& [m, c] : p.terms())
    for (const auto& [id, v] : c.linear()) ids.insert(id);
  return {ids.begin(), ids.end()};
}

template <class Coeff>
BasicPolynomial<Coeff> substitute(const BasicPolynomial<Coeff>& p, std::size_t var,
                                  const Polynomial& replacement) {
  std::vector<Polynomial> reps;
  reps.reserve(p.num_vars());
  for (std::size_t i = 0; i < p.num_vars(); ++i)
    reps.push_back(i == var ? replacement : Polynomial::variable(p.num_vars(), i));
  return compose(p, std::span<const Polynomial>(reps));
}

template <class Coeff>
BasicPolynomial<Coeff> compose(const BasicPolynomial<Coeff>& p,
                               std::span<const Polynomial> replacements) {
  if (replacements.size() != p.num_vars()) throw Error("compose: wrong number of replacements");
  std::size_t target = replacements.empty() ? 0 : replacements.front().num_vars();
  for (const auto& r : replacements)
    if (r.num_vars() != target) throw Error("compose: replacement arity mismatch");
  // Cache powers per variable.
  std::vector<std::vector<Polynomial>> powers(p.num_vars());
  auto power = [&](std::size_t v, unsigned e) -> const Polynomial& {
    auto& pw = powers[v];
    if (pw.empty()) pw.push_back(Polynomial::constant(target, Rational(1)));
    while (pw.size() <= e) pw.push_back(pw.back() * replacements[v]);
    return pw[e];
  };
  BasicPolynomial<Coeff> out(target);
  for (const auto& [m, c] : p.terms()) {
    Polynomial prod = Polynomial::constant(target, Rational(1));
    for (std::size_t v = 0; v < m.num_vars(); ++v)
      if (m[v]) prod = prod * power(v, m[v]);
    out += BasicPolynomial<Coeff>::constant(target, c) * prod;
  }
  return out;
}

template <class Coeff>
BasicPolynomial<Coeff> resize_vars(const BasicPolynomial<Coeff>& p, std::size_t num_vars) {
  BasicPolynomial<Coeff> out(num_vars);
  for (const auto& [m, c] : p.terms()) out.add_term(m.resized(num_vars), c);
  return out;
}

template Polynomial substitute(const Polynomial&, std::size_t, const Polynomial&);
template ParamPolynomial substitute(const ParamPolynomial&, std::size_t, const Polynomial&);
template Polynomial compose(const Polynomial&, std::span<const Polynomial>);
template ParamPolynomial compose(const ParamPolynomial&, std::span<const Polynomial>);
template Polynomial resize_vars(const Polynomial&, std::size_t);
template ParamPolynomial resize_vars(const ParamPolynomial&, std::size_t);

namespace {

template <class T, class Coeff>
T evaluate_impl(const BasicPolynomial<Coeff>& p, std::span<const T> point, T zero) {
  if (point.size() != p.num_vars()) throw Error("evaluate: point has wrong dimension");
  T out = zero;
  for (const auto& [m, c] : p.terms()) {
    T term = T(1);
    for (std::size_t v = 0; v < m.num_vars(); ++v)
      for (unsigned k = 0; k < m[v]; ++k) term *= point[v];
    if constexpr (std::is_same_v<T, double>)
      out += c.get_d() * term;
    else
      out += T(c) * term;
  }
  return out;
}

}  // namespace

Rational evaluate(const Polynomial& p, std::span<const Rational> point) {
  return evaluate_impl<Rational>(p, point, Rational(0));
}

double evaluate(const Polynomial& p, std::span<const double> point) {
  return evaluate_impl<double>(p, point, 0.0);
}

AffineForm evaluate(const ParamPolynomial& p, std::span<const Rational> point) {
  if (point.size() != p.num_vars()) throw Error("evaluate: point has wrong dimension");
  AffineForm out;
  for (const auto& [m, c] : p.terms()) {
    Rational term = 1;
    for (std::size_t v = 0; v < m.num_vars(); ++v)
      for (unsigned k = 0; k < m[v]; ++k) term *= point[v];
    out += c * term;
  }
  return out;
}

Polynomial instantiate(const ParamPolynomial& p, const Assignment& values,
                       const ParamTable* names) {
  Polynomial out(p.num_vars());
  for (const auto& [m, c] : p.terms()) out.add_term(m, c.evaluate(values, names));
  return out;
}

namespace {

template <class Coeff>
std::vector<std::size_t> vars_impl(const BasicPolynomial<Coeff>& p) {
  std::vector<bool> seen(p.num_vars(), false);
  for (const auto& [m, c] : p.terms())
    for (std::size_t v = 0; v < m.num_vars(); ++v)
      if (m[v]) seen[v] = true;
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < seen.size(); ++v)
    if (seen[v]) out.push_back(v);
  return out;
}

}  // namespace

std::vector<std::size_t> variables_of(const Polynomial& p) { return vars_impl(p); }
std::vector<std::size_t> variables_of(const ParamPolynomial& p) { return vars_impl(p); }

Template make_template(std::size_t num_vars, unsigned degree, ParamTable& table,
                       const std::string& prefix) {
  Template t;
  t.poly = ParamPolynomial(num_vars);
  t.monomials = monomials_up_to(num_vars, degree);
  const bool wide = num_vars >= 10;
  for (const auto& m : t.monomials) {
    std::string name = prefix + "_";
    if (m.is_constant()) {
      name += "0";
    } else {
      bool first = true;
      for (std::size_t v = 0; v < num_vars; ++v)
        for (unsigned k = 0; k < m[v]; ++k) {
          if (wide && !first) name += "_";
          name += std::to_string(v + 1);
          first = false;
        }
    }
    ParamId id = table.add(name, ParamKind::TemplateCoefficient);
    t.coefficients.push_back(id);
    t.poly.add_term(m, AffineForm::parameter(id));
  }
  return t;
}

std::string to_string(const Rational& r) {
  Rational c = r;
  c.canonicalize();
  if (c.get_den() == 1) return c.get_num().get_str();
  return c.get_num().get_str() + "/" + c.get_den().get_str();
}

std::string to_string(const Monomial& m, std::span<const std::string> names) {
  std::string out;
  for (std::size_t v = 0; v < m.num_vars(); ++v) {
    if (!m[v]) continue;
    if (!out.empty()) out += "*";
    out += names[v];
    if (m[v] > 1) out += "^" + std::to_string(m[v]);
  }
  return out.empty() ? "1" : out;
}

namespace {

// Highest degree first; within a degree, graded-lex order.
template <class Coeff, class CoeffFn>
std::string render(const BasicPolynomial<Coeff>& p, std::span<const std::string> names,
                   CoeffFn&& coeff_text) {
  if (p.is_zero()) return "0";
  std::vector<const typename BasicPolynomial<Coeff>::Terms::value_type*> order;
  for (const auto& t : p.terms()) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(),
                   [](auto* a, auto* b) { return a->first.degree() > b->first.degree(); });
  std::string out;
  for (const auto* t : order) {
    const auto& [m, c] = *t;
    auto [negative, text] = coeff_text(c);
    if (out.empty())
      out += negative ? "-" : "";
    else
      out += negative ? " - " : " + ";
    if (m.is_constant()) {
      out += text.empty() ? "1" : text;
    } else {
      if (!text.empty()) out += text + "*";
      out += to_string(m, names);
    }
  }
  return out;
}

}  // namespace

std::string to_string(const Polynomial& p, std::span<const std::string> names) {
  return render(p, names, [](const Rational& c) {
    Rational a = abs(c);
    return std::pair<bool, std::string>{sgn(c) < 0, a == 1 ? "" : to_string(a)};
  });
}

std::string to_string(const AffineForm& a, const ParamTable& table) {
  std::string out;
  auto emit = [&](const Rational& c, const std::string& name) {
    bool neg = sgn(c) < 0;
    Rational m = abs(c);
    if (out.empty())
      out += neg ? "-" : "";
    else
      out += neg ? " - " : " + ";
    if (name.empty())
      out += to_string(m);
    else
      out += (m == 1 ? "" : to_string(m) + "*") + name;
  };
  for (const auto& [id, c] : a.linear()) emit(c, table[id].name);
  if (sgn(a.constant()) != 0 || out.empty()) emit(a.constant(), "");
  return out;
}

std::string to_string(const ParamPolynomial& p, std::span<const std::string> names,
                      const ParamTable& table) {
  return render(p, names, [&](const AffineForm& c) {
    if (c.is_constant()) {
      Rational a = abs(c.constant());
      return std::pair<bool, std::string>{sgn(c.constant()) < 0, a == 1 ? "" : to_string(a)};
    }
    return std::pair<bool, std::string>{false, "(" + to_string(c, table) + ")"};
  });
}

std::vector<std::string> default_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("x" + std::to_string(i));
  return out;
}

}  // namespace piq
