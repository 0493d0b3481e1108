#include "piq/lang.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace piq {

ParseError::ParseError(SourcePos pos, const std::string& message)
    : Error(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + message),
      pos_(pos) {}

// ---------------------------------------------------------------------------
// Expressions

ExprPtr make_const(const Rational& v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Const;
  e->value = v;
  e->value.canonicalize();
  return e;
}

ExprPtr make_var(std::size_t index) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Var;
  e->var = index;
  return e;
}

ExprPtr make_random(Distribution dist, std::size_t id) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Random;
  e->dist = std::make_shared<const Distribution>(std::move(dist));
  e->random_id = id;
  return e;
}

namespace {
bool is_const(const ExprPtr& e) { return e->kind == Expr::Kind::Const; }
}  // namespace

ExprPtr make_add(ExprPtr a, ExprPtr b) {
  if (is_const(a) && is_const(b)) return make_const(a->value + b->value);
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Add;
  e->lhs = std::move(a);
  e->rhs = std::move(b);
  return e;
}

ExprPtr make_mul(ExprPtr a, ExprPtr b) {
  if (is_const(a) && is_const(b)) return make_const(a->value * b->value);
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Mul;
  e->lhs = std::move(a);
  e->rhs = std::move(b);
  return e;
}

ExprPtr make_pow(ExprPtr base, unsigned exponent) {
  if (is_const(base)) {
    Rational r = 1;
    for (unsigned i = 0; i < exponent; ++i) r *= base->value;
    return make_const(r);
  }
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Pow;
  e->lhs = std::move(base);
  e->exponent = exponent;
  return e;
}

ExprPtr make_neg(ExprPtr a) {
  if (is_const(a)) return make_const(-a->value);
  return make_mul(make_const(-1), std::move(a));
}

ExprPtr make_sub(ExprPtr a, ExprPtr b) { return make_add(std::move(a), make_neg(std::move(b))); }

bool equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::Const: return a.value == b.value;
    case Expr::Kind::Var: return a.var == b.var;
    case Expr::Kind::Random: return *a.dist == *b.dist;
    case Expr::Kind::Add:
    case Expr::Kind::Mul: return equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
    case Expr::Kind::Pow: return a.exponent == b.exponent && equal(*a.lhs, *b.lhs);
  }
  return false;
}

bool has_random(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Random: return true;
    case Expr::Kind::Add:
    case Expr::Kind::Mul: return has_random(*e.lhs) || has_random(*e.rhs);
    case Expr::Kind::Pow: return has_random(*e.lhs);
    default: return false;
  }
}

Polynomial to_polynomial(const Expr& e, std::size_t num_vars) {
  switch (e.kind) {
    case Expr::Kind::Const: return Polynomial::constant(num_vars, e.value);
    case Expr::Kind::Var: return Polynomial::variable(num_vars, e.var);
    case Expr::Kind::Random: throw Error("random term where a deterministic expression is required");
    case Expr::Kind::Add: return to_polynomial(*e.lhs, num_vars) + to_polynomial(*e.rhs, num_vars);
    case Expr::Kind::Mul: return to_polynomial(*e.lhs, num_vars) * to_polynomial(*e.rhs, num_vars);
    case Expr::Kind::Pow: return pow(to_polynomial(*e.lhs, num_vars), e.exponent);
  }
  return Polynomial(num_vars);
}

// ---------------------------------------------------------------------------
// Guards

const char* to_string(Rel rel) {
  switch (rel) {
    case Rel::Lt: return "<";
    case Rel::Le: return "<=";
    case Rel::Eq: return "==";
    case Rel::Ne: return "!=";
    case Rel::Gt: return ">";
    case Rel::Ge: return ">=";
  }
  return "?";
}

namespace {
GuardPtr guard_node(Guard::Kind kind) {
  auto g = std::make_shared<Guard>();
  g->kind = kind;
  return g;
}
}  // namespace

GuardPtr make_true() { return guard_node(Guard::Kind::True); }
GuardPtr make_false() { return guard_node(Guard::Kind::False); }

GuardPtr make_atom(Rel rel, ExprPtr lhs, ExprPtr rhs) {
  auto g = std::make_shared<Guard>();
  g->kind = Guard::Kind::Atom;
  g->rel = rel;
  g->lhs = std::move(lhs);
  g->rhs = std::move(rhs);
  return g;
}

GuardPtr make_and(GuardPtr a, GuardPtr b) {
  auto g = std::make_shared<Guard>();
  g->kind = Guard::Kind::And;
  g->a = std::move(a);
  g->b = std::move(b);
  return g;
}

GuardPtr make_or(GuardPtr a, GuardPtr b) {
  auto g = std::make_shared<Guard>();
  g->kind = Guard::Kind::Or;
  g->a = std::move(a);
  g->b = std::move(b);
  return g;
}

GuardPtr make_not(GuardPtr a) {
  auto g = std::make_shared<Guard>();
  g->kind = Guard::Kind::Not;
  g->a = std::move(a);
  return g;
}

bool equal(const Guard& a, const Guard& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Guard::Kind::True:
    case Guard::Kind::False: return true;
    case Guard::Kind::Atom:
      return a.rel == b.rel && equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
    case Guard::Kind::And:
    case Guard::Kind::Or: return equal(*a.a, *b.a) && equal(*a.b, *b.b);
    case Guard::Kind::Not: return equal(*a.a, *b.a);
  }
  return false;
}

namespace {

Rational eval_expr(const Expr& e, std::span<const Rational> state) {
  return evaluate(to_polynomial(e, state.size()), state);
}

bool compare(Rel rel, const Rational& l, const Rational& r) {
  switch (rel) {
    case Rel::Lt: return l < r;
    case Rel::Le: return l <= r;
    case Rel::Eq: return l == r;
    case Rel::Ne: return l != r;
    case Rel::Gt: return l > r;
    case Rel::Ge: return l >= r;
  }
  return false;
}

}  // namespace

bool holds(const Guard& g, std::span<const Rational> state) {
  switch (g.kind) {
    case Guard::Kind::True: return true;
    case Guard::Kind::False: return false;
    case Guard::Kind::Atom:
      return compare(g.rel, eval_expr(*g.lhs, state), eval_expr(*g.rhs, state));
    case Guard::Kind::And: return holds(*g.a, state) && holds(*g.b, state);
    case Guard::Kind::Or: return holds(*g.a, state) || holds(*g.b, state);
    case Guard::Kind::Not: return !holds(*g.a, state);
  }
  return false;
}

GuardPtr to_primitive(const GuardPtr& g) {
  auto lt = [](ExprPtr l, ExprPtr r) { return make_atom(Rel::Lt, std::move(l), std::move(r)); };
  switch (g->kind) {
    case Guard::Kind::True: return make_not(lt(make_const(0), make_const(0)));
    case Guard::Kind::False: return lt(make_const(0), make_const(0));
    case Guard::Kind::Atom: {
      const auto &l = g->lhs, &r = g->rhs;
      switch (g->rel) {
        case Rel::Lt: return lt(l, r);
        case Rel::Gt: return lt(r, l);
        case Rel::Le: return make_not(lt(r, l));
        case Rel::Ge: return make_not(lt(l, r));
        case Rel::Eq: return make_and(make_not(lt(l, r)), make_not(lt(r, l)));
        case Rel::Ne: return make_not(make_and(make_not(lt(l, r)), make_not(lt(r, l))));
      }
      break;
    }
    case Guard::Kind::And: return make_and(to_primitive(g->a), to_primitive(g->b));
    case Guard::Kind::Or:
      return make_not(make_and(make_not(to_primitive(g->a)), make_not(to_primitive(g->b))));
    case Guard::Kind::Not: return make_not(to_primitive(g->a));
  }
  return g;
}

Atom canonical_atom(Rel rel, const Polynomial& lhs, const Polynomial& rhs) {
  Atom atom;
  switch (rel) {
    case Rel::Lt: atom = {rhs - lhs, Rel::Gt}; break;
    case Rel::Le: atom = {rhs - lhs, Rel::Ge}; break;
    case Rel::Gt:
    case Rel::Ge:
    case Rel::Eq:
    case Rel::Ne: atom = {lhs - rhs, rel}; break;
  }
  if (!atom.p.is_zero()) {
    Rational lc = atom.p.terms().rbegin()->second;
    if (atom.rel == Rel::Gt || atom.rel == Rel::Ge) lc = abs(lc);
    atom.p *= Rational(1) / lc;
  }
  return atom;
}

Atom canonical_atom(const Guard& atom, std::size_t num_vars) {
  if (atom.kind != Guard::Kind::Atom) throw Error("not a comparison");
  return canonical_atom(atom.rel, to_polynomial(*atom.lhs, num_vars),
                        to_polynomial(*atom.rhs, num_vars));
}

bool holds(const Atom& atom, std::span<const Rational> state) {
  Rational v = evaluate(atom.p, state);
  return compare(atom.rel, v, Rational(0));
}

Atom negate(const Atom& a) {
  Rel r = a.rel;
  switch (a.rel) {
    case Rel::Gt: return canonical_atom(Rel::Ge, -a.p, Polynomial(a.p.num_vars()));
    case Rel::Ge: return canonical_atom(Rel::Gt, -a.p, Polynomial(a.p.num_vars()));
    case Rel::Eq: r = Rel::Ne; break;
    case Rel::Ne: r = Rel::Eq; break;
    default: break;
  }
  return {a.p, r};
}

std::string to_string(const Atom& atom, std::span<const std::string> names) {
  return to_string(atom.p, names) + " " + to_string(atom.rel) + " 0";
}

// ---------------------------------------------------------------------------
// Statements

namespace {
std::shared_ptr<Stmt> stmt_node(Stmt::Kind kind, SourcePos pos) {
  auto s = std::make_shared<Stmt>();
  s->kind = kind;
  s->pos = pos;
  return s;
}
}  // namespace

StmtPtr make_skip(SourcePos pos) { return stmt_node(Stmt::Kind::Skip, pos); }
StmtPtr make_abort(SourcePos pos) { return stmt_node(Stmt::Kind::Abort, pos); }

StmtPtr make_assign(std::size_t var, ExprPtr e, SourcePos pos) {
  auto s = stmt_node(Stmt::Kind::Assign, pos);
  s->var = var;
  s->expr = std::move(e);
  return s;
}

StmtPtr make_seq(std::vector<StmtPtr> stmts, SourcePos pos) {
  std::vector<StmtPtr> flat;
  for (auto& st : stmts) {
    if (st->kind == Stmt::Kind::Seq)
      flat.insert(flat.end(), st->body.begin(), st->body.end());
    else
      flat.push_back(st);
  }
  if (flat.empty()) return make_skip(pos);
  if (flat.size() == 1) return flat.front();
  auto s = stmt_node(Stmt::Kind::Seq, pos);
  s->body = std::move(flat);
  return s;
}

StmtPtr make_prob(const Rational& p, StmtPtr left, StmtPtr right, SourcePos pos) {
  auto s = stmt_node(Stmt::Kind::Prob, pos);
  s->prob = p;
  s->prob.canonicalize();
  s->body = {std::move(left), std::move(right)};
  return s;
}

StmtPtr make_ite(GuardPtr g, StmtPtr then_branch, StmtPtr else_branch, SourcePos pos) {
  auto s = stmt_node(Stmt::Kind::Ite, pos);
  s->guard = std::move(g);
  s->body = {std::move(then_branch), std::move(else_branch)};
  return s;
}

StmtPtr make_while(GuardPtr g, StmtPtr body, SourcePos pos) {
  auto s = stmt_node(Stmt::Kind::While, pos);
  s->guard = std::move(g);
  s->body = {std::move(body)};
  return s;
}

bool equal(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind || a.body.size() != b.body.size()) return false;
  switch (a.kind) {
    case Stmt::Kind::Assign:
      if (a.var != b.var || !equal(*a.expr, *b.expr)) return false;
      break;
    case Stmt::Kind::Prob:
      if (a.prob != b.prob) return false;
      break;
    case Stmt::Kind::Ite:
    case Stmt::Kind::While:
      if (!equal(*a.guard, *b.guard)) return false;
      break;
    default: break;
  }
  for (std::size_t i = 0; i < a.body.size(); ++i)
    if (!equal(*a.body[i], *b.body[i])) return false;
  return true;
}

bool contains_loop(const Stmt& s) {
  if (s.kind == Stmt::Kind::While) return true;
  return std::any_of(s.body.begin(), s.body.end(), [](const StmtPtr& b) { return contains_loop(*b); });
}

std::vector<StmtPtr> statements(const StmtPtr& s) {
  if (s->kind == Stmt::Kind::Seq) return s->body;
  return {s};
}

std::optional<std::size_t> Program::var_index(std::string_view name) const {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i] == name) return i;
  return std::nullopt;
}

StmtPtr Program::inner_loop() const {
  if (!loop) return nullptr;
  std::function<StmtPtr(const StmtPtr&)> find = [&](const StmtPtr& s) -> StmtPtr {
    if (s->kind == Stmt::Kind::While) return s;
    for (const auto& b : s->body)
      if (auto w = find(b)) return w;
    return nullptr;
  };
  return find(loop->body[0]);
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

struct Token {
  enum class Kind { Ident, Number, Symbol, End };
  Kind kind = Kind::End;
  std::string text;
  Rational number;
  SourcePos pos;
};

Rational parse_decimal(const std::string& text, SourcePos pos) {
  std::string mantissa = text, exponent;
  if (auto e = text.find_first_of("eE"); e != std::string::npos) {
    mantissa = text.substr(0, e);
    exponent = text.substr(e + 1);
  }
  std::string digits;
  long scale = 0;
  bool after_point = false;
  for (char c : mantissa) {
    if (c == '.') {
      after_point = true;
      continue;
    }
    digits += c;
    if (after_point) ++scale;
  }
  if (digits.empty()) throw ParseError(pos, "malformed number '" + text + "'");
  if (!exponent.empty()) {
    try {
      scale -= std::stol(exponent);
    } catch (const std::exception&) {
      throw ParseError(pos, "malformed number '" + text + "'");
    }
  }
  mpz_class num(digits, 10), ten = 10, den = 1;
  if (scale > 0) {
    mpz_pow_ui(den.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(scale));
  } else if (scale < 0) {
    mpz_class f;
    mpz_pow_ui(f.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(-scale));
    num *= f;
  }
  Rational r(num, den);
  r.canonicalize();
  return r;
}

std::vector<Token> lex(std::string_view src, SourcePos start) {
  static const char* const symbols[] = {":=", "<=", ">=", "==", "!=", "=>", "&&", "||", ";",
                                        ",",  "{",  "}",  "[",  "]",  "(",  ")",  "+",  "-",
                                        "*",  "/",  "^",  "<",  ">",  "=",  "!",  ":"};
  std::vector<Token> out;
  int line = start.line, col = start.column;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (src.substr(i, 2) == "//") {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.pos = {line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Token::Kind::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < src.size() &&
                                                               std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '-' || src[k] == '+')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      t.kind = Token::Kind::Number;
      t.text = std::string(src.substr(i, j - i));
      t.number = parse_decimal(t.text, t.pos);
      advance(j - i);
    } else {
      bool matched = false;
      for (const char* s : symbols) {
        std::string_view sv(s);
        if (src.substr(i, sv.size()) == sv) {
          t.kind = Token::Kind::Symbol;
          t.text = std::string(sv);
          advance(sv.size());
          matched = true;
          break;
        }
      }
      if (!matched) throw ParseError(t.pos, std::string("unexpected character '") + c + "'");
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.pos = {line, col};
  out.push_back(end);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

bool is_keyword(const std::string& s) {
  static const char* const kw[] = {"skip", "abort", "if",  "then", "else", "while", "true",
                                   "false", "and",  "or",  "not",  "unif", "norm",  "disc"};
  return std::any_of(std::begin(kw), std::end(kw), [&](const char* k) { return s == k; });
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<std::string>& vars, bool allow_new,
         std::vector<std::string>& symbols, std::size_t& next_random)
      : toks_(std::move(tokens)),
        vars_(vars),
        allow_new_(allow_new),
        symbols_(symbols),
        next_random_(next_random) {}

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool is(const char* sym, std::size_t k = 0) const {
    const Token& t = peek(k);
    return t.kind == Token::Kind::Symbol && t.text == sym;
  }
  bool is_word(const char* w, std::size_t k = 0) const {
    const Token& t = peek(k);
    return t.kind == Token::Kind::Ident && t.text == w;
  }
  Token next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(peek().pos, msg); }
  std::string describe(const Token& t) const {
    return t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
  }
  void expect(const char* sym) {
    if (!is(sym)) fail(std::string("expected '") + sym + "' but found " + describe(peek()));
    ++pos_;
  }
  void expect_end() {
    if (!at_end()) fail("unexpected " + describe(peek()));
  }

  // expr := term (('+'|'-') term)*
  ExprPtr expr() {
    ExprPtr e = term();
    while (is("+") || is("-")) {
      bool minus = next().text == "-";
      ExprPtr r = term();
      e = minus ? make_sub(e, r) : make_add(e, r);
    }
    return e;
  }

  // term := unary (('*'|'/') unary)*
  ExprPtr term() {
    ExprPtr e = unary();
    while (is("*") || is("/")) {
      Token op = next();
      ExprPtr r = unary();
      if (op.text == "*") {
        e = make_mul(e, r);
      } else {
        if (r->kind != Expr::Kind::Const) throw ParseError(op.pos, "division by a non-constant");
        if (sgn(r->value) == 0) throw ParseError(op.pos, "division by zero");
        e = make_mul(e, make_const(Rational(1) / r->value));
      }
    }
    return e;
  }

  ExprPtr unary() {
    if (is("-")) {
      next();
      return make_neg(unary());
    }
    if (is("+")) {
      next();
      return unary();
    }
    return power();
  }

  ExprPtr power() {
    ExprPtr base = primary();
    if (is("^")) {
      next();
      Token t = next();
      if (t.kind != Token::Kind::Number || t.number.get_den() != 1 || sgn(t.number) < 0 ||
          t.number > 64)
        throw ParseError(t.pos, "exponent must be a small non-negative integer");
      return make_pow(base, static_cast<unsigned>(t.number.get_num().get_ui()));
    }
    return base;
  }

  Rational constant_expr(const char* what) {
    SourcePos at = peek().pos;
    ExprPtr e = expr();
    if (e->kind != Expr::Kind::Const) throw ParseError(at, std::string(what) + " must be a constant");
    return e->value;
  }

  ExprPtr primary() {
    const Token& t = peek();
    if (t.kind == Token::Kind::Number) return make_const(next().number);
    if (is("(")) {
      next();
      ExprPtr e = expr();
      expect(")");
      return e;
    }
    if (t.kind != Token::Kind::Ident) fail("expected an expression but found " + describe(t));
    if (t.text == "unif" || t.text == "norm" || t.text == "disc") return distribution();
    if (is_keyword(t.text)) fail("unexpected keyword '" + t.text + "'");
    Token id = next();
    return make_var(resolve(id));
  }

  std::size_t resolve(const Token& id) {
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == id.text) return i;
    if (std::find(symbols_.begin(), symbols_.end(), id.text) != symbols_.end())
      throw ParseError(id.pos, "'" + id.text + "' is a distribution parameter, not a variable");
    if (!allow_new_) throw ParseError(id.pos, "undeclared variable '" + id.text + "'");
    vars_.push_back(id.text);
    return vars_.size() - 1;
  }

  ExprPtr distribution() {
    Token name = next();
    expect("(");
    Distribution d;
    if (name.text == "unif") {
      d.kind = Distribution::Kind::Uniform;
      d.a = constant_expr("uniform bound");
      expect(",");
      d.b = constant_expr("uniform bound");
      if (!(d.a < d.b)) throw ParseError(name.pos, "unif(a,b) requires a < b");
    } else if (name.text == "norm") {
      d.kind = Distribution::Kind::Normal;
      d.mean = constant_expr("normal mean");
      expect(",");
      const Token& s = peek();
      bool known_var = std::find(vars_.begin(), vars_.end(), s.text) != vars_.end();
      if (s.kind == Token::Kind::Ident && is(")", 1) && known_var) {
        d.sigma_symbol = s.text;
        d.sigma_var = resolve(next());
      } else if (s.kind == Token::Kind::Ident && is(")", 1) && !is_keyword(s.text)) {
        d.sigma_symbol = next().text;
        if (std::find(symbols_.begin(), symbols_.end(), d.sigma_symbol) == symbols_.end())
          symbols_.push_back(d.sigma_symbol);
      } else {
        SourcePos at = peek().pos;
        d.sigma = constant_expr("normal standard deviation");
        if (sgn(*d.sigma) < 0) throw ParseError(at, "standard deviation must be non-negative");
      }
    } else {
      d.kind = Distribution::Kind::Discrete;
      Rational total = 0;
      do {
        if (!d.points.empty()) expect(",");
        Rational v = constant_expr("discrete value");
        expect(":");
        SourcePos at = peek().pos;
        Rational p = constant_expr("discrete probability");
        if (sgn(p) < 0 || p > 1) throw ParseError(at, "probability outside [0,1]");
        total += p;
        d.points.emplace_back(v, p);
      } while (is(","));
      if (total != 1) throw ParseError(name.pos, "discrete probabilities must sum to 1");
    }
    expect(")");
    return make_random(std::move(d), next_random_++);
  }

  static bool is_rel(const Token& t) {
    if (t.kind != Token::Kind::Symbol) return false;
    return t.text == "<" || t.text == "<=" || t.text == ">" || t.text == ">=" || t.text == "=" ||
           t.text == "==" || t.text == "!=";
  }
  static Rel rel_of(const std::string& s) {
    if (s == "<") return Rel::Lt;
    if (s == "<=") return Rel::Le;
    if (s == ">") return Rel::Gt;
    if (s == ">=") return Rel::Ge;
    if (s == "!=") return Rel::Ne;
    return Rel::Eq;
  }

  GuardPtr guard() {
    GuardPtr g = guard_and();
    while (is("||") || is_word("or")) {
      next();
      g = make_or(g, guard_and());
    }
    return g;
  }

  GuardPtr guard_and() {
    GuardPtr g = guard_not();
    while (is("&&") || is_word("and")) {
      next();
      g = make_and(g, guard_not());
    }
    return g;
  }

  GuardPtr guard_not() {
    if (is("!") || is_word("not")) {
      next();
      return make_not(guard_not());
    }
    return guard_primary();
  }

  GuardPtr guard_primary() {
    if (is_word("true")) {
      next();
      return make_true();
    }
    if (is_word("false")) {
      next();
      return make_false();
    }
    if (is("(")) {
      std::size_t saved = pos_, saved_random = next_random_, saved_vars = vars_.size();
      try {
        next();
        GuardPtr g = guard();
        expect(")");
        if (!is_rel(peek())) return g;
      } catch (const ParseError&) {
      }
      pos_ = saved;
      next_random_ = saved_random;
      vars_.resize(saved_vars);
    }
    return comparison();
  }

  // e0 op e1 op e2 ... desugars to (e0 op e1) && (e1 op e2) && ...
  GuardPtr comparison() {
    ExprPtr lhs = expr();
    if (!is_rel(peek())) fail("expected a comparison operator but found " + describe(peek()));
    GuardPtr g;
    while (is_rel(peek())) {
      Rel rel = rel_of(next().text);
      ExprPtr rhs = expr();
      GuardPtr atom = make_atom(rel, lhs, rhs);
      g = g ? make_and(g, atom) : atom;
      lhs = rhs;
    }
    return g;
  }

  GuardPtr det_guard() {
    SourcePos at = peek().pos;
    GuardPtr g = guard();
    std::function<void(const Guard&)> check = [&](const Guard& h) {
      if (h.kind == Guard::Kind::Atom && (has_random(*h.lhs) || has_random(*h.rhs)))
        throw ParseError(at, "guards may not contain random terms");
      if (h.a) check(*h.a);
      if (h.b) check(*h.b);
    };
    check(*g);
    return g;
  }

  // seq := stmt (';' stmt)* [';']
  StmtPtr seq() {
    SourcePos at = peek().pos;
    std::vector<StmtPtr> out;
    out.push_back(stmt());
    while (is(";")) {
      next();
      if (at_end() || is("}")) break;
      out.push_back(stmt());
    }
    return make_seq(std::move(out), at);
  }

  StmtPtr block() {
    expect("{");
    if (is("}")) {
      SourcePos at = peek().pos;
      next();
      return make_skip(at);
    }
    StmtPtr s = seq();
    expect("}");
    return s;
  }

  StmtPtr stmt() {
    const Token& t = peek();
    SourcePos at = t.pos;
    if (is_word("skip")) {
      next();
      return make_skip(at);
    }
    if (is_word("abort")) {
      next();
      return make_abort(at);
    }
    if (is_word("if")) {
      next();
      expect("(");
      GuardPtr g = det_guard();
      expect(")");
      if (is_word("then")) next();
      StmtPtr then_branch = block();
      StmtPtr else_branch = make_skip(peek().pos);
      if (is_word("else")) {
        next();
        else_branch = block();
      }
      return make_ite(g, then_branch, else_branch, at);
    }
    if (is_word("while")) {
      next();
      expect("(");
      GuardPtr g = det_guard();
      expect(")");
      return make_while(g, block(), at);
    }
    if (is("{")) {
      StmtPtr left = block();
      if (!is("[")) return left;
      next();
      SourcePos p_at = peek().pos;
      Rational p = constant_expr("choice probability");
      if (sgn(p) < 0 || p > 1) throw ParseError(p_at, "probability outside [0,1]");
      expect("]");
      StmtPtr right = block();
      return make_prob(p, left, right, at);
    }
    if (t.kind == Token::Kind::Ident && !is_keyword(t.text) && (is(":=", 1) || is("=", 1))) {
      Token id = next();
      next();
      std::size_t v = resolve(id);
      return make_assign(v, expr(), at);
    }
    fail("expected a statement but found " + describe(t));
  }

  Expectation expectation() {
    Expectation e;
    bool first = true;
    while (first || is("+") || is("-")) {
      bool minus = false;
      if (!first || is("-") || is("+")) minus = next().text == "-";
      first = false;
      Expectation::Term term;
      if (is("[")) {
        next();
        term.guard = det_guard();
        expect("]");
        term.expr = make_const(1);
        if (is("*")) {
          next();
          term.expr = this->term();
        }
      } else {
        term.expr = this->term();
      }
      if (minus) term.expr = make_neg(term.expr);
      e.terms.push_back(std::move(term));
    }
    return e;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<std::string>& vars_;
  bool allow_new_;
  std::vector<std::string>& symbols_;
  std::size_t& next_random_;
};

struct Pragma {
  std::string name;
  std::string body;
  SourcePos pos;       // position of '#'
  SourcePos body_pos;  // position of the first body character
};

template <class F>
auto with_parser(std::string_view text, SourcePos at, std::vector<std::string>& vars,
                 bool allow_new, std::vector<std::string>& symbols, std::size_t& next_random,
                 F&& f) {
  Parser p(lex(text, at), vars, allow_new, symbols, next_random);
  auto result = f(p);
  p.expect_end();
  return result;
}

}  // namespace

Program parse(std::string_view text) {
  // Pragmas are whole lines starting with '#'; blank them out of the program text.
  std::string program_text;
  std::vector<Pragma> pragmas;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first != std::string_view::npos && line[first] == '#') {
      Pragma pr;
      pr.pos = {line_no, static_cast<int>(first) + 1};
      std::size_t j = first + 1;
      while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_')) ++j;
      pr.name = std::string(line.substr(first + 1, j - first - 1));
      pr.body = std::string(line.substr(j));
      pr.body_pos = {line_no, static_cast<int>(j) + 1};
      pragmas.push_back(std::move(pr));
      program_text.append(line.size(), ' ');
    } else {
      program_text.append(line);
    }
    if (end == text.size()) break;
    program_text.push_back('\n');
    start = end + 1;
  }

  Program prog;
  std::size_t next_random = 0;
  auto names_in = [](const Pragma& pr) {
    std::vector<std::pair<std::string, SourcePos>> out;
    for (const Token& t : lex(pr.body, pr.body_pos)) {
      if (t.kind == Token::Kind::End) break;
      if (t.kind == Token::Kind::Symbol && t.text == ",") continue;
      if (t.kind != Token::Kind::Ident || is_keyword(t.text))
        throw ParseError(t.pos, "expected a variable name");
      out.emplace_back(t.text, t.pos);
    }
    return out;
  };

  bool declared = false;
  for (const auto& pr : pragmas) {
    if (pr.name != "var") continue;
    declared = true;
    for (auto& [name, pos] : names_in(pr)) {
      if (prog.var_index(name)) throw ParseError(pos, "variable '" + name + "' declared twice");
      prog.vars.push_back(name);
    }
  }

  auto tokens = lex(program_text, {1, 1});
  Parser parser(std::move(tokens), prog.vars, !declared, prog.symbols, next_random);
  if (parser.at_end()) throw ParseError(parser.peek().pos, "empty program");
  StmtPtr body = parser.seq();
  parser.expect_end();

  std::vector<StmtPtr> prefix;
  for (const auto& st : statements(body)) {
    if (prog.loop) throw ParseError(st->pos, "statements after the loop are not supported");
    if (st->kind == Stmt::Kind::While)
      prog.loop = st;
    else if (contains_loop(*st))
      throw ParseError(st->pos, "loops are only supported at the top level of the program");
    else
      prefix.push_back(st);
  }
  if (!prog.loop) throw ParseError({1, 1}, "program has no loop");
  prog.init = make_seq(prefix);

  // At most one inner loop, not nested further.
  std::size_t inner = 0;
  std::function<void(const StmtPtr&, int)> count = [&](const StmtPtr& s, int depth) {
    if (s->kind == Stmt::Kind::While) {
      if (depth >= 1) throw ParseError(s->pos, "loops nested more than two deep");
      if (++inner > 1) throw ParseError(s->pos, "more than one inner loop");
      count(s->body[0], depth + 1);
      return;
    }
    for (const auto& b : s->body) count(b, depth);
  };
  count(prog.loop->body[0], 0);

  prog.is_int.assign(prog.vars.size(), false);
  for (const auto& pr : pragmas) {
    if (pr.name == "var") continue;
    if (pr.name == "int") {
      for (auto& [name, pos] : names_in(pr)) {
        auto idx = prog.var_index(name);
        if (!idx) throw ParseError(pos, "undeclared variable '" + name + "'");
        prog.is_int[*idx] = true;
      }
    } else if (pr.name == "pre" || pr.name == "post") {
      auto& slot = pr.name == "pre" ? prog.pre : prog.post;
      if (slot) throw ParseError(pr.pos, "duplicate #" + pr.name);
      slot = with_parser(pr.body, pr.body_pos, prog.vars, false, prog.symbols, next_random,
                         [](Parser& p) { return p.expectation(); });
    } else if (pr.name == "hint") {
      Hint h;
      h.pos = pr.pos;
      std::tie(h.from, h.to) =
          with_parser(pr.body, pr.body_pos, prog.vars, false, prog.symbols, next_random,
                      [](Parser& p) {
                        GuardPtr from = p.det_guard();
                        p.expect("=>");
                        GuardPtr to = p.det_guard();
                        return std::pair{from, to};
                      });
      prog.hints.push_back(std::move(h));
    } else if (pr.name == "terminates") {
      if (pr.body.find_first_not_of(" \t\r") != std::string::npos)
        throw ParseError(pr.body_pos, "#terminates takes no argument");
      prog.terminates = true;
    } else {
      throw ParseError(pr.pos, "unknown pragma '#" + pr.name + "'");
    }
  }
  return prog;
}

ExprPtr parse_expr(std::string_view text, const std::vector<std::string>& vars) {
  std::vector<std::string> v = vars, symbols;
  std::size_t next_random = 0;
  return with_parser(text, {1, 1}, v, false, symbols, next_random, [](Parser& p) { return p.expr(); });
}

GuardPtr parse_guard(std::string_view text, const std::vector<std::string>& vars) {
  std::vector<std::string> v = vars, symbols;
  std::size_t next_random = 0;
  return with_parser(text, {1, 1}, v, false, symbols, next_random,
                     [](Parser& p) { return p.det_guard(); });
}

Expectation parse_expectation(std::string_view text, const std::vector<std::string>& vars) {
  std::vector<std::string> v = vars, symbols;
  std::size_t next_random = 0;
  return with_parser(text, {1, 1}, v, false, symbols, next_random,
                     [](Parser& p) { return p.expectation(); });
}

// ---------------------------------------------------------------------------
// Printing

std::string to_string(const Expr& e, std::span<const std::string> names) {
  switch (e.kind) {
    case Expr::Kind::Const: {
      std::string s = to_string(e.value);
      return (e.value.get_den() == 1 && sgn(e.value) >= 0) ? s : "(" + s + ")";
    }
    case Expr::Kind::Var: return names[e.var];
    case Expr::Kind::Random: {
      const Distribution& d = *e.dist;
      auto c = [](const Rational& r) { return to_string(r); };
      switch (d.kind) {
        case Distribution::Kind::Uniform: return "unif(" + c(d.a) + ", " + c(d.b) + ")";
        case Distribution::Kind::Normal:
          return "norm(" + c(d.mean) + ", " + (d.sigma ? c(*d.sigma) : d.sigma_symbol) + ")";
        case Distribution::Kind::Discrete: {
          std::string s = "disc(";
          for (std::size_t i = 0; i < d.points.size(); ++i)
            s += (i ? ", " : "") + c(d.points[i].first) + ":" + c(d.points[i].second);
          return s + ")";
        }
      }
      return "?";
    }
    case Expr::Kind::Add: return "(" + to_string(*e.lhs, names) + " + " + to_string(*e.rhs, names) + ")";
    case Expr::Kind::Mul: return "(" + to_string(*e.lhs, names) + " * " + to_string(*e.rhs, names) + ")";
    case Expr::Kind::Pow: return "(" + to_string(*e.lhs, names) + " ^ " + std::to_string(e.exponent) + ")";
  }
  return "?";
}

std::string to_string(const Guard& g, std::span<const std::string> names) {
  switch (g.kind) {
    case Guard::Kind::True: return "true";
    case Guard::Kind::False: return "false";
    case Guard::Kind::Atom:
      return "(" + to_string(*g.lhs, names) + " " + to_string(g.rel) + " " + to_string(*g.rhs, names) + ")";
    case Guard::Kind::And: return "(" + to_string(*g.a, names) + " && " + to_string(*g.b, names) + ")";
    case Guard::Kind::Or: return "(" + to_string(*g.a, names) + " || " + to_string(*g.b, names) + ")";
    case Guard::Kind::Not: return "!" + to_string(*g.a, names);
  }
  return "?";
}

std::string to_string(const Stmt& s, std::span<const std::string> names, int indent) {
  std::string pad(static_cast<std::size_t>(indent), ' ');
  auto block = [&](const Stmt& b) {
    return "{\n" + pad + "  " + to_string(b, names, indent + 2) + "\n" + pad + "}";
  };
  switch (s.kind) {
    case Stmt::Kind::Skip: return "skip";
    case Stmt::Kind::Abort: return "abort";
    case Stmt::Kind::Assign: return names[s.var] + " := " + to_string(*s.expr, names);
    case Stmt::Kind::Seq: {
      std::string out;
      for (std::size_t i = 0; i < s.body.size(); ++i)
        out += (i ? ";\n" + pad : "") + to_string(*s.body[i], names, indent);
      return out;
    }
    case Stmt::Kind::Prob: return block(*s.body[0]) + " [" + to_string(s.prob) + "] " + block(*s.body[1]);
    case Stmt::Kind::Ite:
      return "if (" + to_string(*s.guard, names) + ") then " + block(*s.body[0]) + " else " + block(*s.body[1]);
    case Stmt::Kind::While: return "while (" + to_string(*s.guard, names) + ") " + block(*s.body[0]);
  }
  return "?";
}

std::string to_string(const Expectation& e, std::span<const std::string> names) {
  std::string out;
  for (std::size_t i = 0; i < e.terms.size(); ++i) {
    if (i) out += " + ";
    const auto& t = e.terms[i];
    out += t.guard ? "[" + to_string(*t.guard, names) + "] * " + to_string(*t.expr, names)
                   : to_string(*t.expr, names);
  }
  return out;
}

std::string to_string(const Program& p) {
  std::ostringstream out;
  out << "#var";
  for (const auto& v : p.vars) out << ' ' << v;
  out << '\n';
  bool any_int = std::find(p.is_int.begin(), p.is_int.end(), true) != p.is_int.end();
  if (any_int) {
    out << "#int";
    for (std::size_t i = 0; i < p.vars.size(); ++i)
      if (p.is_int[i]) out << ' ' << p.vars[i];
    out << '\n';
  }
  if (p.pre) out << "#pre " << to_string(*p.pre, p.vars) << '\n';
  if (p.post) out << "#post " << to_string(*p.post, p.vars) << '\n';
  for (const auto& h : p.hints)
    out << "#hint " << to_string(*h.from, p.vars) << " => " << to_string(*h.to, p.vars) << '\n';
  if (p.terminates) out << "#terminates\n";
  if (p.init && p.init->kind != Stmt::Kind::Skip) out << to_string(*p.init, p.vars) << ";\n";
  out << to_string(*p.loop, p.vars) << '\n';
  return out.str();
}

namespace {

bool equal(const Expectation& a, const Expectation& b) {
  if (a.terms.size() != b.terms.size()) return false;
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    const auto &x = a.terms[i], &y = b.terms[i];
    if (bool(x.guard) != bool(y.guard)) return false;
    if (x.guard && !equal(*x.guard, *y.guard)) return false;
    if (!equal(*x.expr, *y.expr)) return false;
  }
  return true;
}

}  // namespace

bool equal(const Program& a, const Program& b) {
  if (a.vars != b.vars || a.is_int != b.is_int || a.terminates != b.terminates ||
      a.symbols != b.symbols || a.hints.size() != b.hints.size())
    return false;
  if (!equal(*a.init, *b.init) || !equal(*a.loop, *b.loop)) return false;
  if (a.pre.has_value() != b.pre.has_value() || a.post.has_value() != b.post.has_value()) return false;
  if (a.pre && !equal(*a.pre, *b.pre)) return false;
  if (a.post && !equal(*a.post, *b.post)) return false;
  for (std::size_t i = 0; i < a.hints.size(); ++i)
    if (!equal(*a.hints[i].from, *b.hints[i].from) || !equal(*a.hints[i].to, *b.hints[i].to))
      return false;
  return true;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void collect_atoms(const Guard& g, std::vector<const Guard*>& out) {
  if (g.kind == Guard::Kind::Atom) out.push_back(&g);
  if (g.a) collect_atoms(*g.a, out);
  if (g.b) collect_atoms(*g.b, out);
}

void collect_guards(const Stmt& s, std::vector<const Guard*>& out) {
  if (s.guard) out.push_back(s.guard.get());
  for (const auto& b : s.body) collect_guards(*b, out);
}

bool integral_over_ints(const Polynomial& p, const std::vector<bool>& is_int) {
  for (const auto& [m, c] : p.terms()) {
    if (c.get_den() != 1) return false;
    for (std::size_t v = 0; v < m.num_vars(); ++v)
      if (m[v] && !is_int[v]) return false;
  }
  return true;
}

bool loop_in_branch(const Stmt& s, bool in_branch) {
  if (s.kind == Stmt::Kind::While && in_branch) return true;
  bool branch = in_branch || s.kind == Stmt::Kind::Ite || s.kind == Stmt::Kind::Prob;
  return std::any_of(s.body.begin(), s.body.end(),
                     [&](const StmtPtr& b) { return loop_in_branch(*b, branch); });
}

}  // namespace

std::vector<Diagnostic> validate(const Program& prog) {
  using S = Diagnostic::Severity;
  std::vector<Diagnostic> diags;
  const std::size_t n = prog.num_vars();

  if (!prog.post) diags.push_back({S::Error, "missing #post expectation", {}});
  if (loop_in_branch(*prog.loop->body[0], false))
    diags.push_back({S::Error, "inner loop inside a conditional or probabilistic branch; hoist it to the loop body", prog.loop->pos});

  std::vector<const Guard*> guards, atoms;
  collect_guards(*prog.loop, guards);
  for (const Guard* g : guards) collect_atoms(*g, atoms);

  // Every guard is used in both polarities, so each = or != atom yields a != somewhere.
  std::vector<Atom> hint_sources;
  for (const auto& h : prog.hints) {
    if (h.from->kind != Guard::Kind::Atom) {
      diags.push_back({S::Error, "hint source must be a single comparison", h.pos});
      continue;
    }
    Atom src = canonical_atom(*h.from, n);
    hint_sources.push_back(src);
    bool present = std::any_of(atoms.begin(), atoms.end(), [&](const Guard* g) {
      Atom a = canonical_atom(*g, n);
      if (a == src || negate(a) == src) return true;
      // Strict and non-strict forms of the same boundary also match.
      return a.p == src.p || negate(a).p == src.p;
    });
    if (!present)
      diags.push_back({S::Error, "hint '" + to_string(*h.from, prog.vars) + "' does not match any guard", h.pos});
  }
  for (const Guard* g : atoms) {
    if (g->rel != Rel::Eq && g->rel != Rel::Ne) continue;
    Atom ne = canonical_atom(*g, n);
    ne.rel = Rel::Ne;
    bool hinted = std::find(hint_sources.begin(), hint_sources.end(), ne) != hint_sources.end();
    if (!hinted && !integral_over_ints(ne.p, prog.is_int))
      diags.push_back({S::Error,
                       "disequality '" + to_string(ne, prog.vars) +
                           "' needs a #hint or integer-typed variables",
                       prog.loop->pos});
  }

  if (!prog.terminates)
    diags.push_back({S::Warning,
                     "no #terminates attestation; the result is only sound if the loop terminates "
                     "almost surely and the invariant is uniformly integrable",
                     {}});
  if (prog.nested())
    diags.push_back({S::Note, "nested loop: inner and outer invariants are synthesized jointly",
                     prog.inner_loop()->pos});
  if (!prog.symbols.empty())
    diags.push_back({S::Note, "symbolic distribution parameter(s) present; only first moments may depend on them", {}});
  return diags;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(),
                     [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::Error; });
}

std::string to_string(const Diagnostic& d) {
  const char* sev = d.severity == Diagnostic::Severity::Error     ? "error"
                    : d.severity == Diagnostic::Severity::Warning ? "warning"
                                                                  : "note";
  std::string where = d.pos.line ? std::to_string(d.pos.line) + ":" + std::to_string(d.pos.column) + ": " : "";
  return where + sev + ": " + d.message;
}

}  // namespace piq
