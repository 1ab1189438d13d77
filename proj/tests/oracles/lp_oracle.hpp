#pragma once

// Vertex-enumeration LP oracle: converts the instance to equality form with
// slack variables, enumerates every basis subset, and takes the best feasible
// basic solution. Exponential, for tiny instances only. Independent of the
// simplex implementation.

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <vector>

#include "occlp/lp.hpp"

namespace oracle {

struct LpResult {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
};

// requires: lower bounds all 0, no finite upper bounds, bounded feasible set
inline LpResult enumerate_vertices(const occlp::LpStandardForm& p) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const int m = p.rows();
  const int n = p.cols();

  // equality form columns: structural then one slack per inequality row
  std::vector<VectorXd> cols;
  std::vector<double> cost;
  for (int j = 0; j < n; ++j) {
    VectorXd a = VectorXd::Zero(m);
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, j); it; ++it) a(it.row()) = it.value();
    cols.push_back(a);
    cost.push_back(p.objective(j));
  }
  for (int i = 0; i < m; ++i) {
    if (p.senses[i] == occlp::RowSense::Equal) continue;
    VectorXd a = VectorXd::Zero(m);
    a(i) = p.senses[i] == occlp::RowSense::LessEqual ? 1.0 : -1.0;
    cols.push_back(a);
    cost.push_back(0.0);
  }
  const int total = static_cast<int>(cols.size());

  LpResult result;
  std::vector<int> pick(m);
  std::vector<bool> in(total, false);

  // iterate over all m-subsets of columns
  std::vector<int> comb(m);
  for (int i = 0; i < m; ++i) comb[i] = i;
  if (total < m) return result;
  for (;;) {
    MatrixXd B(m, m);
    for (int r = 0; r < m; ++r) B.col(r) = cols[comb[r]];
    Eigen::FullPivLU<MatrixXd> lu(B);
    if (lu.isInvertible()) {
      const VectorXd xb = lu.solve(p.rhs);
      bool ok = xb.allFinite();
      for (int r = 0; r < m && ok; ++r) ok = xb(r) >= -1e-9;
      if (ok) {
        double obj = 0.0;
        for (int r = 0; r < m; ++r) obj += cost[comb[r]] * xb(r);
        result.feasible = true;
        result.objective = std::min(result.objective, obj);
      }
    }
    // next combination
    int i = m - 1;
    while (i >= 0 && comb[i] == total - m + i) --i;
    if (i < 0) break;
    ++comb[i];
    for (int j = i + 1; j < m; ++j) comb[j] = comb[j - 1] + 1;
  }
  return result;
}

}  // namespace oracle
