#pragma once

// Small dense semidefinite feasibility solver (primal-dual interior point).
//
// Problem:  find X_k >= 0 (symmetric blocks), w free  with
//   sum_k <A_ik, X_k> + sum_j B_ij w_j = b_i.
// A row stores coefficients of upper-triangle entries: value v at (r, c)
// contributes v * X_rc, whether or not r == c.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "piq/poly.hpp"

namespace piq {

struct SdpEntry {
  std::uint32_t block = 0, row = 0, col = 0;  // row <= col
  double value = 0;
};

struct SdpRow {
  std::vector<SdpEntry> entries;
  std::vector<std::pair<std::uint32_t, double>> free;
  double rhs = 0;
};

struct SdpProblem {
  std::vector<std::size_t> block_sizes;
  std::size_t num_free = 0;
  std::vector<SdpRow> rows;

  std::size_t psd_dimension() const;
  std::size_t num_scalars() const;  // upper-triangle entries plus free
};

struct SolverConfig {
  double eq_tol = 1e-8;
  double psd_tol = 1e-8;
  int max_iters = 200;
  /// Maximize t with X >= t*I (t <= margin_cap) instead of plain feasibility.
  bool margin_mode = true;
  double margin_cap = 1.0;
  std::size_t dim_cap = 200;
  bool infeasibility_check = true;
};

enum class SdpStatus { Feasible, Infeasible, Unknown };
const char* to_string(SdpStatus s);

struct SdpSolution {
  SdpStatus status = SdpStatus::Unknown;
  std::vector<Eigen::MatrixXd> blocks;
  std::vector<double> free;
  double margin = 0;        // min eigenvalue over the returned blocks
  double eq_residual = 0;   // max |row residual|
  double min_eigenvalue = 0;
  int iterations = 0;
  std::vector<double> certificate;  // Farkas y when Infeasible
  std::string diagnostic;
};

SdpSolution solve_feasibility(const SdpProblem& p, const SolverConfig& cfg = {});

/// Max |b_i - row_i(X, w)|.
double equality_residual(const SdpProblem& p, const std::vector<Eigen::MatrixXd>& blocks,
                         const std::vector<double>& free);
/// Defect of a Farkas certificate y (sum y_i A_i <= 0, B^T y = 0, b.y > 0), after
/// scaling to b.y = 1; +infinity when b.y <= 0.
double farkas_defect(const SdpProblem& p, const std::vector<double>& y);

/// Smallest eigenvalue of a symmetric matrix; throws on asymmetry above 1e-12 (relative).
double min_eig(const Eigen::MatrixXd& m);

/// Text format: header, block sizes, free count, rows "i blk r c val" and
/// "i f j val", then the right-hand sides.
std::string dump(const SdpProblem& p);
SdpProblem parse_sdp(std::string_view text);

}  // namespace piq
