#include "piq/exact.hpp"

#include <cmath>

namespace piq {

Rational limit_denominator(const Rational& x, long max_den) {
  if (max_den < 1) throw Error("max denominator must be positive");
  const mpz_class bound(max_den);
  if (x.get_den() <= bound) return x;
  mpz_class p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  mpz_class n = x.get_num(), d = x.get_den();
  for (;;) {
    mpz_class a;
    mpz_fdiv_q(a.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
    mpz_class q2 = q0 + a * q1;
    if (q2 > bound) break;
    mpz_class p2 = p0 + a * p1;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    mpz_class r = n - a * d;
    n = d;
    d = r;
  }
  mpz_class k;
  mpz_fdiv_q(k.get_mpz_t(), mpz_class(bound - q0).get_mpz_t(), q1.get_mpz_t());
  Rational b1(mpz_class(p0 + k * p1), mpz_class(q0 + k * q1));
  Rational b2(p1, q1);
  b1.canonicalize();
  b2.canonicalize();
  return abs(b2 - x) <= abs(b1 - x) ? b2 : b1;
}

Rational round_value(double v, const RoundOptions& opts) {
  if (!std::isfinite(v)) throw Error("cannot round a non-finite value");
  if (std::abs(v) < opts.truncate_eps) return 0;
  return limit_denominator(Rational(v), opts.max_denominator);
}

std::vector<Rational> round_values(std::span<const double> values, const RoundOptions& opts) {
  std::vector<Rational> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(round_value(v, opts));
  return out;
}

bool is_psd(RationalMatrix m) {
  const std::size_t n = m.size();
  for (const auto& row : m)
    if (row.size() != n) throw Error("is_psd: matrix is not square");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (m[i][j] != m[j][i]) throw Error("is_psd: matrix is not symmetric");
  for (std::size_t k = 0; k < n; ++k) {
    const int s = sgn(m[k][k]);
    if (s < 0) return false;
    if (s == 0) {
      for (std::size_t j = k + 1; j < n; ++j)
        if (sgn(m[k][j]) != 0) return false;
      continue;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      if (sgn(m[i][k]) == 0) continue;
      Rational l = m[i][k] / m[k][k];
      for (std::size_t j = k + 1; j < n; ++j)
        if (sgn(m[k][j]) != 0) m[i][j] -= l * m[k][j];
    }
  }
  return true;
}

namespace {

// Row-reduce [a | b] in place; returns the pivot columns of the nonzero rows,
// which are moved to the top. false if some row reads 0 = nonzero.
bool reduce(RationalMatrix& a, std::vector<Rational>& b, std::size_t cols, std::vector<std::size_t>& pivots) {
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < a.size(); ++c) {
    std::size_t p = r;
    while (p < a.size() && sgn(a[p][c]) == 0) ++p;
    if (p == a.size()) continue;
    std::swap(a[p], a[r]);
    std::swap(b[p], b[r]);
    Rational inv = 1 / a[r][c];
    for (std::size_t j = c; j < cols; ++j)
      if (sgn(a[r][j]) != 0) a[r][j] *= inv;
    b[r] *= inv;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i == r || sgn(a[i][c]) == 0) continue;
      Rational f = a[i][c];
      for (std::size_t j = c; j < cols; ++j)
        if (sgn(a[r][j]) != 0) a[i][j] -= f * a[r][j];
      b[i] -= f * b[r];
    }
    pivots.push_back(c);
    ++r;
  }
  for (std::size_t i = r; i < a.size(); ++i)
    if (sgn(b[i]) != 0) return false;
  a.resize(r);
  b.resize(r);
  return true;
}

}  // namespace

std::optional<Assignment> project_onto(const std::vector<AffineForm>& rows, const Assignment& start,
                                       std::size_t max_unknowns) {
  std::map<ParamId, std::size_t> index;
  std::vector<ParamId> ids;
  for (const auto& row : rows)
    for (const auto& [id, c] : row.linear())
      if (index.emplace(id, ids.size()).second) ids.push_back(id);
  Assignment out = start;
  if (ids.empty()) {
    for (const auto& row : rows)
      if (sgn(row.constant()) != 0) return std::nullopt;
    return out;
  }
  if (ids.size() > max_unknowns) return std::nullopt;
  const std::size_t n = ids.size();
  RationalMatrix a(rows.size(), std::vector<Rational>(n));
  std::vector<Rational> b(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [id, c] : rows[i].linear()) a[i][index[id]] = c;
    b[i] = -rows[i].constant();
  }
  std::vector<std::size_t> pivots;
  if (!reduce(a, b, n, pivots)) return std::nullopt;

  std::vector<Rational> x(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto it = start.find(ids[j]);
    if (it != start.end()) x[j] = it->second;
  }
  const std::size_t r = a.size();
  // s = R x - b, solve (R R^T) y = s, x -= R^T y.
  std::vector<Rational> s(r);
  bool clean = true;
  for (std::size_t i = 0; i < r; ++i) {
    Rational v = -b[i];
    for (std::size_t j = 0; j < n; ++j)
      if (sgn(a[i][j]) != 0) v += a[i][j] * x[j];
    s[i] = v;
    if (sgn(v) != 0) clean = false;
  }
  if (!clean) {
    RationalMatrix g(r, std::vector<Rational>(r));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t k = i; k < r; ++k) {
        Rational v = 0;
        for (std::size_t j = 0; j < n; ++j)
          if (sgn(a[i][j]) != 0 && sgn(a[k][j]) != 0) v += a[i][j] * a[k][j];
        g[i][k] = v;
        g[k][i] = v;
      }
    std::vector<std::size_t> gp;
    if (!reduce(g, s, r, gp) || g.size() != r) throw Error("project_onto: singular normal matrix");
    // g is now the identity, s holds y.
    for (std::size_t i = 0; i < r; ++i) {
      if (sgn(s[i]) == 0) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (sgn(a[i][j]) != 0) x[j] -= a[i][j] * s[i];
    }
  }
  for (std::size_t j = 0; j < n; ++j) out[ids[j]] = x[j];
  return out;
}

LinearElimination solve_linear(const std::vector<Polynomial>& equalities, std::size_t n) {
  LinearElimination e;
  e.is_pivot.assign(n, false);
  RationalMatrix a;
  std::vector<Rational> b;
  for (const auto& p : equalities) {
    if (p.degree() > 1) throw Error("solve_linear: equality of degree " + std::to_string(p.degree()));
    std::vector<Rational> row(n);
    Rational rhs = 0;
    for (const auto& [m, c] : p.terms()) {
      if (m.is_constant()) {
        rhs = -c;
        continue;
      }
      for (std::size_t v = 0; v < n; ++v)
        if (m[v]) row[v] = c;
    }
    a.push_back(std::move(row));
    b.push_back(rhs);
  }
  std::size_t r = 0;
  for (std::size_t c = 0; c < n && r < a.size(); ++c) {
    std::size_t p = r;
    while (p < a.size() && sgn(a[p][c]) == 0) ++p;
    if (p == a.size()) continue;
    std::swap(a[p], a[r]);
    std::swap(b[p], b[r]);
    Rational inv = 1 / a[r][c];
    for (auto& v : a[r]) v *= inv;
    b[r] *= inv;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i == r || sgn(a[i][c]) == 0) continue;
      Rational f = a[i][c];
      for (std::size_t j = 0; j < n; ++j) a[i][j] -= f * a[r][j];
      b[i] -= f * b[r];
    }
    e.pivot_var.push_back(c);
    e.is_pivot[c] = true;
    ++r;
  }
  for (std::size_t i = r; i < a.size(); ++i)
    if (sgn(b[i]) != 0) e.consistent = false;
  for (std::size_t i = 0; i < r; ++i) {
    e.constant.push_back(b[i]);
    std::vector<std::pair<std::size_t, Rational>> t;
    for (std::size_t j = 0; j < n; ++j)
      if (j != e.pivot_var[i] && sgn(a[i][j]) != 0) t.emplace_back(j, -a[i][j]);
    e.terms.push_back(std::move(t));
  }
  return e;
}

}  // namespace piq
