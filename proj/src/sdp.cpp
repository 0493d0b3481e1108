#include "piq/sdp.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace piq {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Blocks = std::vector<MatrixXd>;

std::size_t SdpProblem::psd_dimension() const {
  std::size_t s = 0;
  for (auto n : block_sizes) s += n;
  return s;
}

std::size_t SdpProblem::num_scalars() const {
  std::size_t s = num_free;
  for (auto n : block_sizes) s += n * (n + 1) / 2;
  return s;
}

const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Feasible: return "feasible";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::Unknown: return "unknown";
  }
  return "?";
}

double min_eig(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw Error("min_eig: matrix is not square");
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw Error("min_eig: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

namespace {

// Row i of the operator in symmetric form: sum_s s * X(p, q).
struct Sym {
  std::uint32_t p, q;
  double s;
};

struct IRow {
  std::vector<std::pair<std::uint32_t, std::vector<Sym>>> blocks;
  std::vector<std::pair<std::uint32_t, double>> free;
  double rhs = 0;
};

struct Internal {
  std::vector<std::size_t> sizes;
  std::size_t nf = 0;
  std::vector<IRow> rows;
  Blocks C;
  VectorXd cf;
  bool feasibility_only = true;
};

IRow to_irow(const SdpRow& r, double scale) {
  std::map<std::uint32_t, std::vector<Sym>> by_block;
  for (const auto& e : r.entries) {
    auto& v = by_block[e.block];
    if (e.row == e.col) {
      v.push_back({e.row, e.row, e.value * scale});
    } else {
      v.push_back({e.row, e.col, e.value * scale / 2});
      v.push_back({e.col, e.row, e.value * scale / 2});
    }
  }
  IRow out;
  out.blocks.assign(by_block.begin(), by_block.end());
  for (const auto& [j, v] : r.free) out.free.emplace_back(j, v * scale);
  out.rhs = r.rhs * scale;
  return out;
}

VectorXd apply(const Internal& P, const Blocks& X, const VectorXd& w) {
  VectorXd out(P.rows.size());
  for (std::size_t i = 0; i < P.rows.size(); ++i) {
    double s = 0;
    for (const auto& [k, es] : P.rows[i].blocks)
      for (const auto& e : es) s += e.s * X[k](e.p, e.q);
    for (const auto& [j, v] : P.rows[i].free) s += v * w(j);
    out(i) = s;
  }
  return out;
}

Blocks adjoint(const Internal& P, const VectorXd& y) {
  Blocks out;
  for (auto n : P.sizes) out.push_back(MatrixXd::Zero(n, n));
  for (std::size_t i = 0; i < P.rows.size(); ++i)
    for (const auto& [k, es] : P.rows[i].blocks)
      for (const auto& e : es) out[k](e.p, e.q) += y(i) * e.s;
  return out;
}

VectorXd adjoint_free(const Internal& P, const VectorXd& y) {
  VectorXd out = VectorXd::Zero(P.nf);
  for (std::size_t i = 0; i < P.rows.size(); ++i)
    for (const auto& [j, v] : P.rows[i].free) out(j) += v * y(i);
  return out;
}

double inner(const Blocks& a, const Blocks& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

double fro(const Blocks& a) { return std::sqrt(inner(a, a)); }

// Largest alpha with X + alpha D >= 0 (infinity when D >= 0 on the cone).
double max_step(const Blocks& X, const Blocks& D) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < X.size(); ++k) {
    if (X[k].size() == 0) continue;
    Eigen::LLT<MatrixXd> llt(X[k]);
    if (llt.info() != Eigen::Success) return 0;
    MatrixXd L = llt.matrixL();
    MatrixXd T = L.triangularView<Eigen::Lower>().solve(D[k]);
    MatrixXd S = L.triangularView<Eigen::Lower>().solve(T.transpose());
    S = (S + S.transpose()) / 2;
    double lam = Eigen::SelfAdjointEigenSolver<MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (lam < 0) best = std::min(best, -1.0 / lam);
  }
  return best;
}

struct IpmResult {
  Blocks X, Z;
  VectorXd y, w;
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
};

IpmResult ipm(const Internal& P, int max_iters, double tol) {
  const std::size_t m = P.rows.size(), nf = P.nf;
  std::size_t ntot = 0;
  for (auto n : P.sizes) ntot += n;
  VectorXd b(m);
  for (std::size_t i = 0; i < m; ++i) b(i) = P.rows[i].rhs;
  const double bnorm = b.norm();
  const double cnorm = fro(P.C) + P.cf.norm();

  static const bool trace = std::getenv("PIQ_SDP_TRACE") != nullptr;
  IpmResult r;
  std::optional<IpmResult> best;
  double best_obj = std::numeric_limits<double>::infinity();
  int best_it = 0;
  // Smallest primal residual seen, returned when nothing better is available.
  std::optional<IpmResult> closest;
  double closest_pinf = std::numeric_limits<double>::infinity();
  double merit_best = std::numeric_limits<double>::infinity();
  int merit_it = 0;
  auto fallback = [&](const char* why) {
    if (best) {
      best->iterations = r.iterations;
      return *best;
    }
    if (closest) {
      closest->iterations = r.iterations;
      closest->diagnostic = why;
      return *closest;
    }
    r.diagnostic = why;
    return r;
  };
  for (auto n : P.sizes) {
    r.X.push_back(MatrixXd::Identity(n, n));
    r.Z.push_back(MatrixXd::Identity(n, n));
  }
  r.y = VectorXd::Zero(m);
  r.w = VectorXd::Zero(nf);

  // Rows touching each block, for the Schur complement.
  std::vector<std::vector<std::pair<std::size_t, const std::vector<Sym>*>>> touching(P.sizes.size());
  for (std::size_t i = 0; i < m; ++i)
    for (const auto& [k, es] : P.rows[i].blocks) touching[k].emplace_back(i, &es);

  for (int it = 0; it < max_iters; ++it) {
    r.iterations = it;
    VectorXd rp = b - apply(P, r.X, r.w);
    Blocks At = adjoint(P, r.y);
    Blocks Rd(P.sizes.size());
    for (std::size_t k = 0; k < Rd.size(); ++k) Rd[k] = P.C[k] - At[k] - r.Z[k];
    VectorXd rf = P.cf - adjoint_free(P, r.y);
    const double mu = ntot ? inner(r.X, r.Z) / double(ntot) : 0.0;
    const double pinf = rp.norm() / (1 + bnorm);
    const double dinf = (fro(Rd) + rf.norm()) / (1 + cnorm);
    const double pobj = inner(P.C, r.X) + P.cf.dot(r.w), dobj = b.dot(r.y);
    const double gap = std::abs(pobj - dobj) / (1 + std::abs(pobj) + std::abs(dobj));
    if (!std::isfinite(pinf) || !std::isfinite(dinf) || !std::isfinite(mu))
      return fallback("numerical breakdown (non-finite iterate)");
    if (trace)
      std::fprintf(stderr, "it %3d pinf %.2e dinf %.2e gap %.2e mu %.2e pobj %.6g\n", it, pinf, dinf, gap, mu, pobj);
    if (P.feasibility_only ? pinf < tol : (pinf < tol && dinf < tol && gap < tol)) {
      r.converged = true;
      return r;
    }
    if (pinf < closest_pinf) {
      closest = r;
      closest_pinf = pinf;
    }
    const double merit = std::max({pinf, dinf, P.feasibility_only ? 0.0 : gap});
    if (merit < 0.5 * merit_best) {
      merit_best = merit;
      merit_it = it;
    } else if (it - merit_it >= 15) {
      return fallback("stalled");
    }
    if (!P.feasibility_only && pinf < 1e-7) {
      // Keep the best primal-feasible point; the dual side may stall on
      // degenerate problems while the primal objective no longer moves.
      if (!best || pobj < best_obj - 1e-9 * (1 + std::abs(pobj))) {
        best = r;
        best_obj = pobj;
        best_it = it;
      } else if (it - best_it >= 8) {
        best->converged = true;
        best->iterations = it;
        return *best;
      }
    }

    Blocks Zi(P.sizes.size());
    for (std::size_t k = 0; k < Zi.size(); ++k) {
      Eigen::LLT<MatrixXd> llt(r.Z[k]);
      if (llt.info() != Eigen::Success) return fallback("dual slack lost definiteness");
      Zi[k] = llt.solve(MatrixXd::Identity(P.sizes[k], P.sizes[k]));
    }

    MatrixXd K = MatrixXd::Zero(m + nf, m + nf);
    for (std::size_t k = 0; k < P.sizes.size(); ++k) {
      const MatrixXd& X = r.X[k];
      const MatrixXd& W = Zi[k];
      const auto& rows = touching[k];
      for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t c = a; c < rows.size(); ++c) {
          double s = 0;
          for (const auto& e : *rows[a].second)
            for (const auto& f : *rows[c].second) s += e.s * f.s * X(e.q, f.p) * W(f.q, e.p);
          K(rows[a].first, rows[c].first) += s;
          if (a != c) K(rows[c].first, rows[a].first) += s;
        }
    }
    double scale = 1;
    for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, K(i, i));
    const double delta = 1e-13 * scale;
    for (std::size_t i = 0; i < m; ++i) {
      K(i, i) += delta;
      for (const auto& [j, v] : P.rows[i].free) {
        K(i, m + j) += v;
        K(m + j, i) += v;
      }
    }
    for (std::size_t j = 0; j < nf; ++j) K(m + j, m + j) -= delta;
    Eigen::PartialPivLU<MatrixXd> lu(K);

    auto direction = [&](const Blocks* corr, double sigma, Blocks& dX, VectorXd& dy, Blocks& dZ, VectorXd& dw) {
      Blocks R(P.sizes.size());
      for (std::size_t k = 0; k < R.size(); ++k) {
        R[k] = sigma * mu * Zi[k] - r.X[k] - r.X[k] * Rd[k] * Zi[k];
        if (corr) R[k] -= (*corr)[k] * Zi[k];
      }
      VectorXd rhs(m + nf);
      rhs.head(m) = rp - apply(P, R, VectorXd::Zero(nf));
      rhs.tail(nf) = rf;
      VectorXd sol = lu.solve(rhs);
      dy = sol.head(m);
      dw = sol.tail(nf);
      Blocks Ady = adjoint(P, dy);
      dX.resize(R.size());
      dZ.resize(R.size());
      for (std::size_t k = 0; k < R.size(); ++k) {
        dZ[k] = Rd[k] - Ady[k];
        MatrixXd t = R[k] + r.X[k] * Ady[k] * Zi[k];
        dX[k] = (t + t.transpose()) / 2;
      }
    };

    Blocks dX, dZ;
    VectorXd dy, dw;
    direction(nullptr, 0.0, dX, dy, dZ, dw);
    double ap = std::min(1.0, max_step(r.X, dX)), ad = std::min(1.0, max_step(r.Z, dZ));
    double mu_aff = 0;
    for (std::size_t k = 0; k < dX.size(); ++k)
      mu_aff += (r.X[k] + ap * dX[k]).cwiseProduct(r.Z[k] + ad * dZ[k]).sum();
    mu_aff = ntot ? mu_aff / double(ntot) : 0.0;
    double sigma = mu > 0 ? std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3) : 0.0;
    Blocks corr(dX.size());
    for (std::size_t k = 0; k < dX.size(); ++k) corr[k] = dX[k] * dZ[k];
    direction(&corr, sigma, dX, dy, dZ, dw);
    ap = std::min(1.0, 0.95 * max_step(r.X, dX));
    ad = std::min(1.0, 0.95 * max_step(r.Z, dZ));
    for (std::size_t k = 0; k < dX.size(); ++k) {
      r.X[k] += ap * dX[k];
      r.Z[k] += ad * dZ[k];
    }
    r.w += ap * dw;
    r.y += ad * dy;
  }
  r.iterations = max_iters;
  return fallback("iteration limit reached");
}

struct Layout {
  std::vector<std::size_t> offset;
  std::size_t free0 = 0, N = 0;
  std::size_t index(const SdpProblem& p, const SdpEntry& e) const {
    const std::size_t n = p.block_sizes[e.block], r = e.row, c = e.col;
    return offset[e.block] + r * n - r * (r - 1) / 2 + (c - r);
  }
};

Layout layout_of(const SdpProblem& p) {
  Layout l;
  l.offset.resize(p.block_sizes.size());
  for (std::size_t k = 0; k < p.block_sizes.size(); ++k) {
    l.offset[k] = l.N;
    l.N += p.block_sizes[k] * (p.block_sizes[k] + 1) / 2;
  }
  l.free0 = l.N;
  l.N += p.num_free;
  return l;
}

Eigen::SparseMatrix<double> constraint_matrix(const SdpProblem& p, const Layout& l) {
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    for (const auto& e : p.rows[i].entries) trips.emplace_back(int(i), int(l.index(p, e)), e.value);
    for (const auto& [j, v] : p.rows[i].free) trips.emplace_back(int(i), int(l.free0 + j), v);
  }
  Eigen::SparseMatrix<double> J(static_cast<Eigen::Index>(p.rows.size()), static_cast<Eigen::Index>(l.N));
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

Eigen::LDLT<MatrixXd> gram_factor(const Eigen::SparseMatrix<double>& J) {
  MatrixXd G = MatrixXd(J * J.transpose());
  double scale = std::max(1.0, G.diagonal().size() ? G.diagonal().maxCoeff() : 1.0);
  G.diagonal().array() += 1e-14 * scale;
  return Eigen::LDLT<MatrixXd>(G);
}

// Minimal-norm correction of (X, w) onto the affine set of the rows.
void polish(const SdpProblem& p, Blocks& X, std::vector<double>& w) {
  const std::size_t m = p.rows.size();
  if (m == 0) return;
  const Layout lay = layout_of(p);
  const std::size_t free0 = lay.free0;
  const auto& offset = lay.offset;
  auto J = constraint_matrix(p, lay);
  auto ldlt = gram_factor(J);
  for (int pass = 0; pass < 3; ++pass) {
    VectorXd res(m);
    for (std::size_t i = 0; i < m; ++i) {
      double s = p.rows[i].rhs;
      for (const auto& e : p.rows[i].entries) s -= e.value * X[e.block](e.row, e.col);
      for (const auto& [j, v] : p.rows[i].free) s -= v * w[j];
      res(i) = s;
    }
    VectorXd d = J.transpose() * ldlt.solve(res);
    if (!d.allFinite()) return;
    for (std::size_t k = 0; k < p.block_sizes.size(); ++k) {
      const std::size_t n = p.block_sizes[k];
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = r; c < n; ++c) {
          double v = d(offset[k] + r * n - r * (r - 1) / 2 + (c - r));
          X[k](r, c) += v;
          if (r != c) X[k](c, r) += v;
        }
    }
    for (std::size_t j = 0; j < p.num_free; ++j) w[j] += d(free0 + j);
  }
}

// The rows alone (ignoring the cone) are inconsistent: b - J x* is orthogonal to
// the range of J and serves as a Farkas vector.
std::optional<std::vector<double>> linear_certificate(const SdpProblem& p) {
  const std::size_t m = p.rows.size();
  if (m == 0) return std::nullopt;
  const Layout lay = layout_of(p);
  auto J = constraint_matrix(p, lay);
  VectorXd b(m);
  for (std::size_t i = 0; i < m; ++i) b(i) = p.rows[i].rhs;
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod{MatrixXd(J)};
  VectorXd x = cod.solve(b);
  VectorXd r = b - J * x;
  if (!r.allFinite() || r.norm() <= 1e-7 * (1 + b.norm())) return std::nullopt;
  return std::vector<double>(r.data(), r.data() + m);
}

double blocks_min_eig(const Blocks& X) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : X) m = std::min(m, min_eig(b));
  return m;
}

// Symmetric value of row i's coefficient at (r, c) of a block.
double sym_value(const SdpEntry& e) { return e.row == e.col ? e.value : e.value / 2; }

SdpProblem farkas_problem(const SdpProblem& p) {
  // Variables: W_k >= 0 (same blocks), y free. Rows: W + A^T y = 0, B^T y = 0, b.y = 1.
  SdpProblem f;
  f.block_sizes = p.block_sizes;
  f.num_free = p.rows.size();
  std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, std::map<std::uint32_t, double>> by_entry;
  std::map<std::uint32_t, std::map<std::uint32_t, double>> by_free;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    for (const auto& e : p.rows[i].entries) by_entry[{e.block, e.row, e.col}][std::uint32_t(i)] += sym_value(e);
    for (const auto& [j, v] : p.rows[i].free) by_free[j][std::uint32_t(i)] += v;
  }
  for (std::uint32_t k = 0; k < p.block_sizes.size(); ++k)
    for (std::uint32_t r = 0; r < p.block_sizes[k]; ++r)
      for (std::uint32_t c = r; c < p.block_sizes[k]; ++c) {
        SdpRow row;
        row.entries.push_back({k, r, c, 1.0});
        auto it = by_entry.find({k, r, c});
        if (it != by_entry.end())
          for (const auto& [i, v] : it->second) row.free.emplace_back(i, v);
        f.rows.push_back(std::move(row));
      }
  for (std::uint32_t j = 0; j < p.num_free; ++j) {
    SdpRow row;
    auto it = by_free.find(j);
    if (it == by_free.end()) continue;
    for (const auto& [i, v] : it->second) row.free.emplace_back(i, v);
    f.rows.push_back(std::move(row));
  }
  SdpRow norm;
  for (std::uint32_t i = 0; i < p.rows.size(); ++i)
    if (p.rows[i].rhs != 0) norm.free.emplace_back(i, p.rows[i].rhs);
  norm.rhs = 1;
  f.rows.push_back(std::move(norm));
  return f;
}

void validate_problem(const SdpProblem& p) {
  for (const auto& r : p.rows) {
    for (const auto& e : r.entries) {
      if (e.block >= p.block_sizes.size()) throw Error("sdp: block index out of range");
      if (e.row > e.col || e.col >= p.block_sizes[e.block]) throw Error("sdp: entry index out of range");
      if (!std::isfinite(e.value)) throw Error("sdp: non-finite coefficient");
    }
    for (const auto& [j, v] : r.free) {
      if (j >= p.num_free) throw Error("sdp: free index out of range");
      if (!std::isfinite(v)) throw Error("sdp: non-finite coefficient");
    }
    if (!std::isfinite(r.rhs)) throw Error("sdp: non-finite right-hand side");
  }
}

}  // namespace

double equality_residual(const SdpProblem& p, const Blocks& blocks, const std::vector<double>& free) {
  double worst = 0;
  for (const auto& r : p.rows) {
    double s = r.rhs;
    for (const auto& e : r.entries) s -= e.value * blocks[e.block](e.row, e.col);
    for (const auto& [j, v] : r.free) s -= v * free[j];
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

double farkas_defect(const SdpProblem& p, const std::vector<double>& y) {
  double by = 0;
  for (std::size_t i = 0; i < p.rows.size(); ++i) by += p.rows[i].rhs * y[i];
  if (!(by > 0)) return std::numeric_limits<double>::infinity();
  Blocks S;
  for (auto n : p.block_sizes) S.push_back(MatrixXd::Zero(n, n));
  std::vector<double> bt(p.num_free, 0.0);
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const double yi = y[i] / by;
    for (const auto& e : p.rows[i].entries) {
      double v = sym_value(e) * yi;
      S[e.block](e.row, e.col) += v;
      if (e.row != e.col) S[e.block](e.col, e.row) += v;
    }
    for (const auto& [j, v] : p.rows[i].free) bt[j] += v * yi;
  }
  double defect = 0;
  for (const auto& s : S)
    if (s.size()) defect = std::max(defect, -min_eig(-s));
  for (double v : bt) defect = std::max(defect, std::abs(v));
  return defect;
}

SdpSolution solve_feasibility(const SdpProblem& p, const SolverConfig& cfg) {
  if (!(cfg.eq_tol > 0) || !(cfg.psd_tol > 0)) throw Error("sdp: tolerances must be positive");
  if (p.psd_dimension() > cfg.dim_cap)
    throw Error("sdp: total PSD dimension " + std::to_string(p.psd_dimension()) + " exceeds the cap " +
                std::to_string(cfg.dim_cap));
  validate_problem(p);
  SdpSolution sol;

  auto row_scale = [](const SdpRow& row) {
    double mx = 0;
    for (const auto& e : row.entries) mx = std::max(mx, std::abs(e.value));
    for (const auto& [j, v] : row.free) mx = std::max(mx, std::abs(v));
    return mx;
  };
  for (std::size_t i = 0; i < p.rows.size(); ++i)
    if (row_scale(p.rows[i]) == 0 && p.rows[i].rhs != 0) {
      sol.status = SdpStatus::Infeasible;
      sol.certificate.assign(p.rows.size(), 0.0);
      sol.certificate[i] = 1.0 / p.rows[i].rhs;
      sol.diagnostic = "row " + std::to_string(i) + " reads 0 = " + std::to_string(p.rows[i].rhs);
      return sol;
    }

  const bool margin = cfg.margin_mode && !p.block_sizes.empty();
  Internal P;
  P.sizes = p.block_sizes;
  P.nf = p.num_free;
  const std::size_t t_index = P.nf;
  if (margin) {
    P.sizes.push_back(1);  // slack of t <= cap
    P.nf += 1;
  }
  for (const auto& row : p.rows) {
    const double mx = row_scale(row);
    if (mx == 0) continue;
    IRow ir = to_irow(row, 1.0 / mx);
    if (margin) {
      double tr = 0;
      for (const auto& e : row.entries)
        if (e.row == e.col) tr += e.value / mx;
      if (tr != 0) ir.free.emplace_back(std::uint32_t(t_index), tr);
    }
    P.rows.push_back(std::move(ir));
  }
  if (margin) {
    IRow cap;
    cap.blocks.push_back({std::uint32_t(P.sizes.size() - 1), {{0, 0, 1.0}}});
    cap.free.emplace_back(std::uint32_t(t_index), 1.0);
    cap.rhs = cfg.margin_cap;
    P.rows.push_back(std::move(cap));
  }
  // Column equilibration of the free variables.
  std::vector<double> col(p.num_free, 0.0);
  for (const auto& ir : P.rows)
    for (const auto& [j, v] : ir.free)
      if (j < p.num_free) col[j] = std::max(col[j], std::abs(v));
  for (auto& ir : P.rows)
    for (auto& [j, v] : ir.free)
      if (j < p.num_free && col[j] > 0) v /= col[j];
  for (auto n : P.sizes) P.C.push_back(MatrixXd::Zero(n, n));
  P.cf = VectorXd::Zero(P.nf);
  if (margin) {
    P.cf(t_index) = -1;
    P.feasibility_only = false;
  }

  IpmResult r = ipm(P, cfg.max_iters, std::min(1e-9, cfg.eq_tol / 10));
  sol.iterations = r.iterations;
  sol.diagnostic = r.diagnostic;
  const double t = margin ? r.w(t_index) : 0.0;
  sol.blocks.assign(r.X.begin(), r.X.begin() + static_cast<long>(p.block_sizes.size()));
  for (auto& b : sol.blocks) b.diagonal().array() += t;
  sol.free.assign(r.w.data(), r.w.data() + p.num_free);
  for (std::size_t j = 0; j < p.num_free; ++j)
    if (col[j] > 0) sol.free[j] /= col[j];

  bool finite = true;
  for (const auto& b : sol.blocks) finite = finite && b.allFinite();
  for (double v : sol.free) finite = finite && std::isfinite(v);
  if (finite) {
    polish(p, sol.blocks, sol.free);
    sol.eq_residual = equality_residual(p, sol.blocks, sol.free);
    sol.min_eigenvalue = blocks_min_eig(sol.blocks);
    sol.margin = sol.min_eigenvalue;
    if (std::isfinite(sol.eq_residual) && sol.eq_residual <= cfg.eq_tol && sol.min_eigenvalue >= -cfg.psd_tol) {
      sol.status = SdpStatus::Feasible;
      sol.diagnostic.clear();
      return sol;
    }
  } else if (sol.diagnostic.empty()) {
    sol.diagnostic = "numerical breakdown (non-finite iterate)";
  }

  if (cfg.infeasibility_check) {
    if (auto y = linear_certificate(p); y && farkas_defect(p, *y) <= cfg.psd_tol) {
      double by = 0;
      for (std::size_t i = 0; i < p.rows.size(); ++i) by += p.rows[i].rhs * (*y)[i];
      for (double& v : *y) v /= by;
      sol.status = SdpStatus::Infeasible;
      sol.certificate = std::move(*y);
      sol.diagnostic = "equality rows are inconsistent";
      return sol;
    }
  }
  if (cfg.infeasibility_check && !p.rows.empty()) {
    SolverConfig fc = cfg;
    fc.infeasibility_check = false;
    fc.margin_mode = true;
    SdpSolution f = solve_feasibility(farkas_problem(p), fc);
    if (f.status == SdpStatus::Feasible) {
      std::vector<double> y(f.free.begin(), f.free.end());
      double defect = farkas_defect(p, y);
      if (defect <= cfg.psd_tol) {
        double by = 0;
        for (std::size_t i = 0; i < p.rows.size(); ++i) by += p.rows[i].rhs * y[i];
        for (double& v : y) v /= by;
        sol.status = SdpStatus::Infeasible;
        sol.certificate = std::move(y);
        sol.diagnostic = "dual improving ray found";
        return sol;
      }
    }
  }
  sol.status = SdpStatus::Unknown;
  if (sol.diagnostic.empty()) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "no certified answer: residual %.3g, min eigenvalue %.3g", sol.eq_residual,
                  sol.min_eigenvalue);
    sol.diagnostic = buf;
  }
  return sol;
}

std::string dump(const SdpProblem& p) {
  std::ostringstream out;
  char buf[64];
  out << "piq-sdp 1\nblocks " << p.block_sizes.size() << '\n';
  for (std::size_t k = 0; k < p.block_sizes.size(); ++k) out << (k ? " " : "") << p.block_sizes[k];
  out << "\nfree " << p.num_free << "\nrows " << p.rows.size() << "\n";
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    for (const auto& e : p.rows[i].entries) {
      std::snprintf(buf, sizeof buf, "%.17g", e.value);
      out << i << ' ' << e.block << ' ' << e.row << ' ' << e.col << ' ' << buf << '\n';
    }
    for (const auto& [j, v] : p.rows[i].free) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << i << " f " << j << ' ' << buf << '\n';
    }
  }
  out << "rhs\n";
  for (const auto& r : p.rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.rhs);
    out << buf << '\n';
  }
  return out.str();
}

SdpProblem parse_sdp(std::string_view text) {
  std::istringstream in{std::string(text)};
  auto fail = [](const std::string& msg) -> Error { return Error("sdp dump: " + msg); };
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "piq-sdp" || version != 1) throw fail("missing 'piq-sdp 1' header");
  SdpProblem p;
  std::size_t nb = 0, nr = 0;
  if (!(in >> word >> nb) || word != "blocks") throw fail("expected 'blocks <count>'");
  p.block_sizes.resize(nb);
  for (auto& s : p.block_sizes)
    if (!(in >> s)) throw fail("truncated block sizes");
  if (!(in >> word >> p.num_free) || word != "free") throw fail("expected 'free <count>'");
  if (!(in >> word >> nr) || word != "rows") throw fail("expected 'rows <count>'");
  p.rows.resize(nr);
  while (in >> word && word != "rhs") {
    std::size_t i = std::stoul(word);
    if (i >= nr) throw fail("row index " + word + " out of range");
    std::string blk;
    if (!(in >> blk)) throw fail("truncated entry");
    if (blk == "f") {
      std::uint32_t j;
      double v;
      if (!(in >> j >> v)) throw fail("truncated free entry");
      p.rows[i].free.emplace_back(j, v);
    } else {
      SdpEntry e;
      e.block = static_cast<std::uint32_t>(std::stoul(blk));
      if (!(in >> e.row >> e.col >> e.value)) throw fail("truncated entry");
      p.rows[i].entries.push_back(e);
    }
  }
  if (word != "rhs") throw fail("missing 'rhs' section");
  for (auto& r : p.rows)
    if (!(in >> r.rhs)) throw fail("truncated right-hand sides");
  validate_problem(p);
  return p;
}

}  // namespace piq
