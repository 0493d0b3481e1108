#pragma once

// Random programs with an independent simulator, and random SDPs with known
// witnesses. Shared by the unit tests and the acceptance runner.

#include <cmath>
#include <random>

#include "piq/sdp.hpp"
#include "piq/wp.hpp"

namespace piq::testing {

using Eigen::MatrixXd;

// Independent sampler used as a Monte Carlo reference for wp.
inline double sample(const Distribution& d, std::mt19937_64& rng) {
  switch (d.kind) {
    case Distribution::Kind::Uniform:
      return std::uniform_real_distribution<double>(d.a.get_d(), d.b.get_d())(rng);
    case Distribution::Kind::Normal:
      return std::normal_distribution<double>(d.mean.get_d(), d.sigma->get_d())(rng);
    case Distribution::Kind::Discrete: {
      double u = std::uniform_real_distribution<double>(0, 1)(rng), acc = 0;
      for (const auto& [v, p] : d.points) {
        acc += p.get_d();
        if (u < acc) return v.get_d();
      }
      return d.points.back().first.get_d();
    }
  }
  return 0;
}

inline double eval(const Expr& e, const std::vector<double>& s, std::mt19937_64& rng) {
  switch (e.kind) {
    case Expr::Kind::Const: return e.value.get_d();
    case Expr::Kind::Var: return s[e.var];
    case Expr::Kind::Random: return sample(*e.dist, rng);
    case Expr::Kind::Add: return eval(*e.lhs, s, rng) + eval(*e.rhs, s, rng);
    case Expr::Kind::Mul: return eval(*e.lhs, s, rng) * eval(*e.rhs, s, rng);
    case Expr::Kind::Pow: return std::pow(eval(*e.lhs, s, rng), e.exponent);
  }
  return 0;
}

inline bool test(const Guard& g, const std::vector<double>& s, std::mt19937_64& rng) {
  switch (g.kind) {
    case Guard::Kind::True: return true;
    case Guard::Kind::False: return false;
    case Guard::Kind::Atom: {
      double l = eval(*g.lhs, s, rng), r = eval(*g.rhs, s, rng);
      switch (g.rel) {
        case Rel::Lt: return l < r;
        case Rel::Le: return l <= r;
        case Rel::Eq: return l == r;
        case Rel::Ne: return l != r;
        case Rel::Gt: return l > r;
        case Rel::Ge: return l >= r;
      }
      return false;
    }
    case Guard::Kind::And: return test(*g.a, s, rng) && test(*g.b, s, rng);
    case Guard::Kind::Or: return test(*g.a, s, rng) || test(*g.b, s, rng);
    case Guard::Kind::Not: return !test(*g.a, s, rng);
  }
  return false;
}

// Returns false when the run aborts.
inline bool run(const Stmt& st, std::vector<double>& s, std::mt19937_64& rng) {
  switch (st.kind) {
    case Stmt::Kind::Skip: return true;
    case Stmt::Kind::Abort: return false;
    case Stmt::Kind::Assign: s[st.var] = eval(*st.expr, s, rng); return true;
    case Stmt::Kind::Seq:
      for (const auto& b : st.body)
        if (!run(*b, s, rng)) return false;
      return true;
    case Stmt::Kind::Prob:
      return run(std::uniform_real_distribution<double>(0, 1)(rng) < st.prob.get_d() ? *st.body[0] : *st.body[1], s, rng);
    case Stmt::Kind::Ite: return run(test(*st.guard, s, rng) ? *st.body[0] : *st.body[1], s, rng);
    case Stmt::Kind::While:
      while (test(*st.guard, s, rng))
        if (!run(*st.body[0], s, rng)) return false;
      return true;
  }
  return true;
}

struct ProgGen {
  std::mt19937 rng;
  std::size_t next_id = 1000;
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

  ExprPtr atom() {
    switch (pick(0, 3)) {
      case 0: return make_const(pick(-3, 3));
      case 1: {
        Distribution d;
        d.kind = Distribution::Kind::Discrete;
        d.points = {{Rational(pick(-2, 0)), Rational(1, 4)}, {Rational(pick(1, 3)), Rational(3, 4)}};
        return make_random(d, next_id++);
      }
      default: return make_var(static_cast<std::size_t>(pick(0, 2)));
    }
  }
  ExprPtr expr() {
    ExprPtr e = atom();
    if (pick(0, 1)) e = make_add(e, atom());
    if (pick(0, 2) == 0) e = make_mul(e, make_var(static_cast<std::size_t>(pick(0, 2))));
    return e;
  }
  GuardPtr guard() {
    return make_atom(pick(0, 1) ? Rel::Lt : Rel::Ge, make_var(static_cast<std::size_t>(pick(0, 2))),
                     make_const(pick(-2, 2)));
  }
  StmtPtr stmt(int depth) {
    int k = depth <= 0 ? pick(0, 1) : pick(0, 4);
    switch (k) {
      case 0: return make_assign(static_cast<std::size_t>(pick(0, 2)), expr());
      case 1: return pick(0, 5) ? make_skip() : make_abort();
      case 2: return make_seq({stmt(depth - 1), stmt(depth - 1)});
      case 3: return make_prob(ratio(pick(1, 3), 4), stmt(depth - 1), stmt(depth - 1));
      default: return make_ite(guard(), stmt(depth - 1), stmt(depth - 1));
    }
  }
};


inline SdpProblem random_feasible(std::mt19937& rng, std::vector<MatrixXd>& x0, std::vector<double>& w0) {
  std::uniform_int_distribution<int> nb(1, 3), bs(1, 4), nnz(1, 4), nf(0, 2);
  std::normal_distribution<double> g;
  SdpProblem p;
  const int k = nb(rng);
  x0.clear();
  for (int i = 0; i < k; ++i) {
    int n = bs(rng);
    p.block_sizes.push_back(std::size_t(n));
    MatrixXd r = MatrixXd::NullaryExpr(n, n, [&] { return g(rng); });
    x0.push_back(r * r.transpose() + 0.1 * MatrixXd::Identity(n, n));
  }
  p.num_free = std::size_t(nf(rng));
  w0.clear();
  for (std::size_t j = 0; j < p.num_free; ++j) w0.push_back(g(rng));
  const std::size_t rows = std::uniform_int_distribution<std::size_t>(1, p.num_scalars())(rng);
  for (std::size_t i = 0; i < rows; ++i) {
    SdpRow row;
    int cnt = nnz(rng);
    for (int e = 0; e < cnt; ++e) {
      auto blk = std::uniform_int_distribution<std::uint32_t>(0, std::uint32_t(k - 1))(rng);
      auto n = std::uint32_t(p.block_sizes[blk]);
      auto r = std::uniform_int_distribution<std::uint32_t>(0, n - 1)(rng);
      auto c = std::uniform_int_distribution<std::uint32_t>(r, n - 1)(rng);
      row.entries.push_back({blk, r, c, std::round(g(rng) * 4) / 2});
    }
    for (std::uint32_t j = 0; j < p.num_free; ++j)
      if (rng() % 2) row.free.emplace_back(j, std::round(g(rng) * 4) / 2);
    double b = 0;
    for (const auto& e : row.entries) b += e.value * x0[e.block](e.row, e.col);
    for (const auto& [j, v] : row.free) b += v * w0[j];
    row.rhs = b;
    p.rows.push_back(row);
  }
  return p;
}

}  // namespace piq::testing
