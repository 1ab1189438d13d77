#include "occlp/lp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>

namespace occlp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void LpStandardForm::finalize_bounds() {
  if (lower.size() == 0) lower = VectorXd::Zero(cols());
  if (upper.size() == 0) upper = VectorXd::Constant(cols(), kInf);
}

void LpStandardForm::validate() const {
  const int m = rows(), n = cols();
  if (objective.size() != n || rhs.size() != m || static_cast<int>(senses.size()) != m ||
      lower.size() != n || upper.size() != n)
    throw ConfigError("LP dimensions are inconsistent");
  if (!objective.allFinite() || !rhs.allFinite()) throw ConfigError("LP has NaN/Inf data");
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(lower(j)))
      throw ConfigError("LP variable lower bounds must be finite (column " + std::to_string(j) +
                        ")");
    if (std::isnan(upper(j)) || upper(j) < lower(j))
      throw ConfigError("LP variable bounds are inconsistent (column " + std::to_string(j) + ")");
  }
  for (int j = 0; j < A.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it)
      if (!std::isfinite(it.value())) throw ConfigError("LP matrix has NaN/Inf entries");
}

std::string LpStandardForm::dump() const {
  std::ostringstream out;
  out << "occlp-lp v1\nminimize\nrows " << rows() << "\ncols " << cols() << "\nsenses ";
  for (RowSense s : senses) out << static_cast<char>(s);
  out << "\nrhs";
  for (int i = 0; i < rows(); ++i) out << " " << format_double(rhs(i));
  out << "\nobj";
  for (int j = 0; j < cols(); ++j) out << " " << format_double(objective(j));
  out << "\nbounds\n";
  for (int j = 0; j < cols(); ++j)
    out << format_double(lower(j)) << " "
        << (std::isfinite(upper(j)) ? format_double(upper(j)) : std::string("inf")) << "\n";
  out << "matrix " << A.nonZeros() << "\n";
  for (int j = 0; j < A.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it)
      out << it.row() << " " << j << " " << format_double(it.value()) << "\n";
  out << "end\n";
  return out.str();
}

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
    case LpStatus::Singular: return "singular";
  }
  return "?";
}

namespace {

enum class VarStatus : std::uint8_t { Basic, AtLower, AtUpper };

// Revised simplex working state over the extended column space:
// structural columns, then slacks, then one artificial per row.
class Simplex {
 public:
  Simplex(const LpStandardForm& p, const SimplexOptions& opts) : p_(p), opts_(opts) {
    m_ = p.rows();
    n_struct_ = p.cols();
    // slacks for inequality rows
    slack_of_row_.assign(m_, -1);
    for (int i = 0; i < m_; ++i)
      if (p.senses[i] != RowSense::Equal) slack_of_row_[i] = n_struct_ + n_slack_++;
    art_base_ = n_struct_ + n_slack_;
    n_total_ = art_base_ + m_;

    cols_.resize(n_total_);
    lower_.resize(n_total_);
    upper_.resize(n_total_);
    for (int j = 0; j < n_struct_; ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, j); it; ++it)
        cols_[j].push_back({static_cast<int>(it.row()), it.value()});
      lower_[j] = p.lower(j);
      upper_[j] = p.upper(j);
    }
    for (int i = 0; i < m_; ++i) {
      if (slack_of_row_[i] < 0) continue;
      const double coef = p.senses[i] == RowSense::LessEqual ? 1.0 : -1.0;
      cols_[slack_of_row_[i]].push_back({i, coef});
      lower_[slack_of_row_[i]] = 0.0;
      upper_[slack_of_row_[i]] = kInf;
    }
    for (int i = 0; i < m_; ++i) {
      // artificial signs are fixed when the initial point is known
      cols_[art_base_ + i].push_back({i, 1.0});
      lower_[art_base_ + i] = 0.0;
      upper_[art_base_ + i] = 0.0;  // opened only by phase 1
    }
    x_.assign(n_total_, 0.0);
    status_.assign(n_total_, VarStatus::AtLower);
  }

  LpSolution solve() {
    LpSolution sol;
    if (opts_.warm_start && warm_start_feasible(*opts_.warm_start)) {
      const LpStatus st = iterate(phase2_cost(), sol);
      finish(sol, st);
      return sol;
    }

    // cold start: nonbasics at lower bound, slack or artificial basic per row
    basic_.assign(m_, -1);
    for (int j = 0; j < n_total_; ++j) {
      status_[j] = VarStatus::AtLower;
      x_[j] = lower_[j];
    }
    VectorXd residual = p_.rhs;
    for (int j = 0; j < n_struct_; ++j)
      if (x_[j] != 0.0)
        for (const auto& [i, v] : cols_[j]) residual(i) -= v * x_[j];

    bool need_phase1 = false;
    for (int i = 0; i < m_; ++i) {
      const int s = slack_of_row_[i];
      const double coef = (s >= 0 && p_.senses[i] == RowSense::LessEqual) ? 1.0 : -1.0;
      if (s >= 0 && residual(i) / coef >= 0.0) {
        basic_[i] = s;
        status_[s] = VarStatus::Basic;
        x_[s] = residual(i) / coef;
      } else {
        const int a = art_base_ + i;
        cols_[a][0].value = residual(i) >= 0.0 ? 1.0 : -1.0;
        upper_[a] = kInf;
        basic_[i] = a;
        status_[a] = VarStatus::Basic;
        x_[a] = std::fabs(residual(i));
        if (x_[a] > opts_.tol_feas) need_phase1 = true;
      }
    }

    if (need_phase1 || artificial_in_basis()) {
      VectorXd phase1(n_total_);
      phase1.setZero();
      for (int i = 0; i < m_; ++i) phase1(art_base_ + i) = 1.0;
      const LpStatus st = iterate(phase1, sol);
      if (st != LpStatus::Optimal) {
        finish(sol, st == LpStatus::Unbounded ? LpStatus::Singular : st);
        return sol;
      }
      double infeas = 0.0;
      for (int i = 0; i < m_; ++i) infeas += x_[art_base_ + i];
      if (infeas > opts_.tol_feas * std::max(1.0, p_.rhs.lpNorm<Eigen::Infinity>())) {
        finish(sol, LpStatus::Infeasible);
        return sol;
      }
      close_artificials();
    }

    const LpStatus st = iterate(phase2_cost(), sol);
    finish(sol, st);
    return sol;
  }

 private:
  struct Entry {
    int row;
    double value;
  };
  struct Eta {
    VectorXd w;  // B^{-1} a_entering before the pivot
    int r;       // pivot row
  };

  const LpStandardForm& p_;
  const SimplexOptions& opts_;
  int m_ = 0, n_struct_ = 0, n_slack_ = 0, art_base_ = 0, n_total_ = 0;
  std::vector<std::vector<Entry>> cols_;
  std::vector<double> lower_, upper_, x_;
  std::vector<VarStatus> status_;
  std::vector<int> basic_;
  std::vector<int> slack_of_row_;

  Eigen::PartialPivLU<MatrixXd> lu_;
  std::vector<Eta> etas_;
  bool factor_ok_ = false;
  int total_iterations_ = 0;

  VectorXd phase2_cost() const {
    VectorXd c = VectorXd::Zero(n_total_);
    c.head(n_struct_) = p_.objective;
    return c;
  }

  bool artificial_in_basis() const {
    for (int i = 0; i < m_; ++i)
      if (basic_[i] >= art_base_) return true;
    return false;
  }

  // after phase 1: artificials are pinned to zero; basic ones may remain at
  // value 0 on redundant rows
  void close_artificials() {
    for (int i = 0; i < m_; ++i) {
      const int a = art_base_ + i;
      upper_[a] = 0.0;
      if (status_[a] == VarStatus::AtUpper) status_[a] = VarStatus::AtLower;
    }
    // try to pivot zero-valued basic artificials out for cleaner duals
    for (int r = 0; r < m_; ++r) {
      if (basic_[r] < art_base_) continue;
      refactor();
      if (!factor_ok_) return;
      bool replaced = false;
      for (int j = 0; j < art_base_ && !replaced; ++j) {
        if (status_[j] == VarStatus::Basic) continue;
        VectorXd w = ftran(column_dense(j));
        if (std::fabs(w(r)) > 1e-7) {
          pivot(j, r, w, /*entering_to_upper=*/false);
          replaced = true;
        }
      }
    }
    refactor();
  }

  VectorXd column_dense(int j) const {
    VectorXd a = VectorXd::Zero(m_);
    for (const auto& [i, v] : cols_[j]) a(i) = v;
    return a;
  }

  void refactor() {
    MatrixXd B(m_, m_);
    for (int r = 0; r < m_; ++r) B.col(r) = column_dense(basic_[r]);
    lu_.compute(B);
    const VectorXd diag = lu_.matrixLU().diagonal().cwiseAbs();
    const double dmin = diag.minCoeff(), dmax = diag.maxCoeff();
    factor_ok_ = dmin > 1e-13 * std::max(1.0, dmax);
    etas_.clear();
    if (factor_ok_) recompute_basic_values();
  }

  void recompute_basic_values() {
    VectorXd rhs = p_.rhs;
    for (int j = 0; j < n_total_; ++j) {
      if (status_[j] == VarStatus::Basic || x_[j] == 0.0) continue;
      for (const auto& [i, v] : cols_[j]) rhs(i) -= v * x_[j];
    }
    const VectorXd xb = ftran_factor_only(rhs);
    for (int r = 0; r < m_; ++r) x_[basic_[r]] = xb(r);
  }

  VectorXd ftran_factor_only(const VectorXd& b) const { return lu_.solve(b); }

  VectorXd ftran(const VectorXd& b) const {
    VectorXd w = lu_.solve(b);
    for (const Eta& e : etas_) {
      // apply E^{-1}, E = I + (w_e - e_r) e_r^T
      const double wr = w(e.r) / e.w(e.r);
      if (wr != 0.0) {
        w -= wr * e.w;
        w(e.r) = wr;
      } else {
        w(e.r) = 0.0;
      }
    }
    return w;
  }

  VectorXd btran(const VectorXd& c) const {
    VectorXd y = c;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      // apply E^{-T} = I - e_r (w - e_r)^T / w_r: only component r changes
      const double dot = it->w.dot(y) - y(it->r);
      y(it->r) -= dot / it->w(it->r);
    }
    return lu_.transpose().solve(y);
  }

  void pivot(int entering, int r, const VectorXd& w, bool entering_to_upper) {
    const int leaving = basic_[r];
    status_[leaving] = entering_to_upper ? VarStatus::AtUpper : VarStatus::AtLower;
    basic_[r] = entering;
    status_[entering] = VarStatus::Basic;
    etas_.push_back({w, r});
  }

  bool warm_start_feasible(const LpBasis& warm) {
    if (static_cast<int>(warm.basic.size()) != m_ ||
        static_cast<int>(warm.at_upper.size()) != n_struct_ + n_slack_)
      return false;
    basic_ = warm.basic;
    for (int j = 0; j < n_total_; ++j) status_[j] = VarStatus::AtLower;
    for (int j = 0; j < n_struct_ + n_slack_; ++j)
      if (warm.at_upper[j]) status_[j] = VarStatus::AtUpper;
    for (int r = 0; r < m_; ++r) {
      const int j = warm.basic[r];
      if (j < 0 || j >= art_base_) return false;
      status_[j] = VarStatus::Basic;
    }
    for (int j = 0; j < n_total_; ++j) {
      if (status_[j] == VarStatus::AtLower) x_[j] = lower_[j];
      if (status_[j] == VarStatus::AtUpper) {
        if (!std::isfinite(upper_[j])) return false;
        x_[j] = upper_[j];
      }
    }
    refactor();
    if (!factor_ok_) return false;
    for (int r = 0; r < m_; ++r) {
      const int j = basic_[r];
      if (x_[j] < lower_[j] - opts_.tol_feas || x_[j] > upper_[j] + opts_.tol_feas) return false;
    }
    return true;
  }

  LpStatus iterate(const VectorXd& cost, LpSolution& sol) {
    refactor();
    if (!factor_ok_) return LpStatus::Singular;

    bool bland = false;
    int non_improving = 0;
    double last_obj = current_objective(cost);

    for (int iter = 0; iter < opts_.max_iterations; ++iter, ++total_iterations_) {
      if (static_cast<int>(etas_.size()) >= opts_.refactor_every) {
        refactor();
        if (!factor_ok_) return LpStatus::Singular;
      }

      VectorXd c_b(m_);
      for (int r = 0; r < m_; ++r) c_b(r) = cost(basic_[r]);
      const VectorXd y = btran(c_b);

      // pricing
      int entering = -1;
      double best_violation = opts_.tol_dj;
      for (int j = 0; j < n_total_; ++j) {
        if (status_[j] == VarStatus::Basic) continue;
        if (upper_[j] - lower_[j] < 1e-15) continue;  // fixed (artificials after phase 1)
        double dj = cost(j);
        for (const auto& [i, v] : cols_[j]) dj -= y(i) * v;
        double violation = 0.0;
        if (status_[j] == VarStatus::AtLower && dj < -opts_.tol_dj) violation = -dj;
        if (status_[j] == VarStatus::AtUpper && dj > opts_.tol_dj) violation = dj;
        if (violation <= 0.0) continue;
        if (bland) {
          entering = j;
          break;
        }
        if (violation > best_violation) {
          best_violation = violation;
          entering = j;
        }
      }
      if (entering < 0) {
        sol.iterations = total_iterations_;
        return LpStatus::Optimal;
      }

      const double dir = status_[entering] == VarStatus::AtLower ? 1.0 : -1.0;
      const VectorXd w = ftran(column_dense(entering));

      // ratio test
      double t = upper_[entering] - lower_[entering];  // bound-flip limit (may be inf)
      int leave_row = -1;
      bool leave_to_upper = false;
      for (int r = 0; r < m_; ++r) {
        const double delta = dir * w(r);
        const int b = basic_[r];
        double limit;
        bool to_upper;
        if (delta > opts_.tol_pivot) {
          limit = std::max(0.0, (x_[b] - lower_[b]) / delta);
          to_upper = false;
        } else if (delta < -opts_.tol_pivot && std::isfinite(upper_[b])) {
          limit = std::max(0.0, (x_[b] - upper_[b]) / delta);
          to_upper = true;
        } else {
          continue;
        }
        bool take;
        if (leave_row < 0) {
          take = limit <= t + 1e-12;
        } else if (limit < t - 1e-12) {
          take = true;
        } else if (limit <= t + 1e-12) {
          // tie: Bland wants the smallest variable index, otherwise favor the
          // larger pivot for stability
          take = bland ? b < basic_[leave_row] : std::fabs(w(r)) > std::fabs(w(leave_row));
        } else {
          take = false;
        }
        if (take) {
          t = std::min(t, limit);
          leave_row = r;
          leave_to_upper = to_upper;
        }
      }

      if (!std::isfinite(t)) {
        sol.iterations = total_iterations_;
        return LpStatus::Unbounded;
      }

      // apply the step
      for (int r = 0; r < m_; ++r) x_[basic_[r]] -= t * dir * w(r);
      x_[entering] = (status_[entering] == VarStatus::AtLower ? lower_[entering]
                                                              : upper_[entering]) +
                     dir * t;

      if (leave_row < 0) {
        // bound flip: entering moved across its range, basis unchanged
        status_[entering] =
            status_[entering] == VarStatus::AtLower ? VarStatus::AtUpper : VarStatus::AtLower;
        x_[entering] = status_[entering] == VarStatus::AtLower ? lower_[entering]
                                                               : upper_[entering];
      } else {
        const int leaving = basic_[leave_row];
        x_[leaving] = leave_to_upper ? upper_[leaving] : lower_[leaving];
        pivot(entering, leave_row, w, leave_to_upper);
      }

      const double obj = current_objective(cost);
      if (obj < last_obj - 1e-12 * (1.0 + std::fabs(last_obj))) {
        non_improving = 0;
      } else if (++non_improving >= opts_.stall_before_bland) {
        bland = true;  // anti-cycling from here on
      }
      last_obj = obj;
    }
    sol.iterations = total_iterations_;
    return LpStatus::IterationLimit;
  }

  double current_objective(const VectorXd& cost) const {
    double obj = 0.0;
    for (int j = 0; j < n_total_; ++j)
      if (x_[j] != 0.0) obj += cost(j) * x_[j];
    return obj;
  }

  void finish(LpSolution& sol, LpStatus status) {
    sol.status = status;
    sol.iterations = total_iterations_;
    sol.x = VectorXd::Zero(n_struct_);
    for (int j = 0; j < n_struct_; ++j) sol.x(j) = x_[j];
    sol.objective = p_.objective.dot(sol.x);
    if (status != LpStatus::Optimal) {
      sol.message = "simplex finished with status " + to_string(status);
      return;
    }

    refactor();
    const VectorXd cost = phase2_cost();
    VectorXd c_b(m_);
    for (int r = 0; r < m_; ++r) c_b(r) = cost(basic_[r]);
    const VectorXd y = btran(c_b);
    sol.duals = y;

    sol.reduced_costs = VectorXd::Zero(n_struct_);
    double bound_terms = 0.0;
    for (int j = 0; j < n_total_; ++j) {
      if (status_[j] == VarStatus::Basic || j >= art_base_) continue;
      double dj = cost(j);
      for (const auto& [i, v] : cols_[j]) dj -= y(i) * v;
      if (j < n_struct_) sol.reduced_costs(j) = dj;
      bound_terms += dj * x_[j];
    }
    sol.dual_objective = p_.rhs.dot(y) + bound_terms;

    sol.basis.basic = basic_;
    sol.basis.at_upper.assign(n_struct_ + n_slack_, 0);
    for (int j = 0; j < n_struct_ + n_slack_; ++j)
      if (status_[j] == VarStatus::AtUpper) sol.basis.at_upper[j] = 1;
  }
};

}  // namespace

LpSolution solve_simplex(const LpStandardForm& problem, const SimplexOptions& opts) {
  LpStandardForm p = problem;
  p.finalize_bounds();
  p.validate();
  Simplex simplex(p, opts);
  return simplex.solve();
}

}  // namespace occlp
