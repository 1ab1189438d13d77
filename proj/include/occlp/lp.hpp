#pragma once

#include <Eigen/SparseCore>
#include <string>
#include <vector>

#include "occlp/common.hpp"

namespace occlp {

enum class RowSense : char { Equal = 'E', LessEqual = 'L', GreaterEqual = 'G' };

// Finite LP in the form  min c^T x  s.t.  A x {=, <=, >=} b,  l <= x <= u.
// Lower bounds default to 0 and must be finite; upper bounds may be +inf.
// Columns are stored sparse: the grid discretizations have many columns and
// few rows.
struct LpStandardForm {
  VectorXd objective;
  Eigen::SparseMatrix<double> A;  // m x n, column-major
  std::vector<RowSense> senses;
  VectorXd rhs;
  VectorXd lower;  // finite
  VectorXd upper;  // may be +inf

  int rows() const { return static_cast<int>(A.rows()); }
  int cols() const { return static_cast<int>(A.cols()); }

  /// Fills default bounds ([0, inf)) for any missing entries.
  void finalize_bounds();
  /// Throws ConfigError on inconsistent dimensions or non-finite data.
  void validate() const;

  /// Plain-text dump (rows, senses, rhs, objective, bounds, column triplets)
  /// for external cross-checking. Format documented in the README.
  std::string dump() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, Singular };

std::string to_string(LpStatus status);

/// Basis snapshot for warm starts: basic column per row plus the set of
/// nonbasic columns resting at their upper bound (extended column space:
/// structural columns first, then one slack per inequality row).
struct LpBasis {
  std::vector<int> basic;
  std::vector<std::uint8_t> at_upper;
};

struct LpSolution {
  LpStatus status = LpStatus::IterationLimit;
  VectorXd x;              // primal values (original columns)
  double objective = 0.0;
  VectorXd duals;          // one multiplier per row (<= 0 for L rows, >= 0 for G rows)
  VectorXd reduced_costs;  // per original column
  double dual_objective = 0.0;  // b^T y + bound contributions; equals objective at optimality
  int iterations = 0;
  LpBasis basis;
  std::string message;
};

struct SimplexOptions {
  double tol_feas = 1e-9;
  double tol_gap = 1e-8;
  double tol_pivot = 1e-10;   // smallest acceptable ratio-test pivot
  double tol_dj = 1e-9;       // reduced-cost optimality threshold
  int max_iterations = 200000;
  int refactor_every = 64;    // pivots between dense refactorizations
  int stall_before_bland = 50;  // non-improving pivots before Bland's rule engages
  const LpBasis* warm_start = nullptr;
};

// Two-phase revised simplex with bounded variables, Dantzig pricing, and
// Bland's anti-cycling rule after stall detection. Dense LU of the basis with
// eta-file updates and periodic refactorization. Duals come from the final
// basis.
LpSolution solve_simplex(const LpStandardForm& problem, const SimplexOptions& opts = {});

}  // namespace occlp
