#pragma once

#include <functional>
#include <string>
#include <vector>

#include "occlp/common.hpp"

namespace occlp {

namespace tol {
inline constexpr double viability = 1e-7;     // slack on the state constraint
inline constexpr double conservation = 1e-9;  // conserved-quantity drift (tests)
inline constexpr double projection = 0.25;    // how far outside Y^delta a point may be repaired from
inline constexpr double orbit_closure = 1e-6; // |y(period) - y(0)| for periodic orbits
}  // namespace tol

// Compact constraint set Y with an exact signed distance (<= 0 inside) and
// Euclidean projection. Y^delta = { dist(y) <= delta } is the inflation by a
// closed delta-ball.
class ConstraintSet {
 public:
  static ConstraintSet disk(const VectorXd& center, double radius);
  static ConstraintSet box(const VectorXd& lo, const VectorXd& hi);

  double distance(const VectorXd& y) const;
  /// Closest point of Y^delta (exact for disk and box geometry).
  VectorXd project(const VectorXd& y, double delta) const;

  /// Axis-aligned bounding box of Y.
  const VectorXd& box_lo() const { return box_lo_; }
  const VectorXd& box_hi() const { return box_hi_; }

  bool is_box() const { return kind_ == Kind::Box; }
  int dim() const { return static_cast<int>(box_lo_.size()); }

 private:
  enum class Kind { Disk, Box };
  Kind kind_ = Kind::Box;
  VectorXd center_;  // disk
  double radius_ = 0.0;
  VectorXd box_lo_, box_hi_;
};

/// Right-hand side f(y, u) writing into dy (same length as y).
using VectorField = std::function<void(const VectorXd& y, double u, VectorXd& dy)>;
/// Running cost k(y, u).
using CostField = std::function<double(const VectorXd& y, double u)>;

// The controlled system: dynamics, running cost, discretized control set,
// state constraint, and the bound constants used by the grid solvers.
struct SystemSpec {
  std::string name;
  int state_dim = 0;
  std::vector<std::string> state_vars;  // variable names used in expressions and CSV headers
  VectorField f;
  CostField k;
  VectorXd control_grid;  // ascending points of the compact control interval
  ConstraintSet constraint;
  double M_f = 0.0;    // |f| <= M_f on Y^delta0 x U
  double M_k = 0.0;    // |k| <= M_k on Y^delta0 x U
  double delta0 = 0.0; // maximal constraint margin
  std::vector<std::string> f_source;  // formula text, for reports
  std::string k_source;
};

/// Validates the SystemSpec invariants; the bound constants are checked by
/// sampling Y^delta0 x U. Throws ConfigError on failure.
void validate_system(const SystemSpec& system, int samples_per_axis = 33);

/// Built-in systems: "rotation-cartesian" and "rotation-polar".
SystemSpec builtin_system(const std::string& name, int control_count = 11);

/// System whose f components and k are arithmetic expressions in the state
/// variables and the control variable "u".
SystemSpec make_expression_system(const std::string& name,
                                  const std::vector<std::string>& state_vars,
                                  const std::vector<std::string>& f_exprs,
                                  const std::string& k_expr, ConstraintSet constraint,
                                  const VectorXd& control_grid, double M_f, double M_k,
                                  double delta0);

/// Ascending control grid with `count` points on [lo, hi].
VectorXd uniform_control_grid(double lo, double hi, int count);

// Piecewise-constant control: value i applies on [breakpoints[i],
// breakpoints[i+1]), the last one indefinitely. breakpoints[0] must be 0.
class ControlSignal {
 public:
  ControlSignal(std::vector<double> breakpoints, std::vector<double> values);
  static ControlSignal constant(double u) { return ControlSignal({0.0}, {u}); }

  double value_at(double t) const;
  /// Smallest gap between consecutive breakpoints (infinity if only one).
  double min_spacing() const;

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

struct Trajectory {
  VectorXd times;    // sample times, times(0) = 0
  MatrixXd states;   // one row per sample
  VectorXd controls; // control applied on [t_i, t_{i+1}); last entry repeats the final value
  VectorXd y0;
  double h_t = 0.0;
  double delta = 0.0;
  bool constraint_ok = true;
  double first_violation_time = std::numeric_limits<double>::quiet_NaN();
  int projection_count = 0;

  int samples() const { return static_cast<int>(times.size()); }
  double duration() const { return times(times.size() - 1); }
  VectorXd state(int i) const { return states.row(i); }
};

enum class ViolationPolicy {
  Throw,    // constraint violation beyond delta + tol is an error
  Flag,     // record it in the trajectory and keep integrating
  Project,  // repair via enforce_viability, counting repairs
};

/// One classic RK4 step with the control held constant.
VectorXd rk4_step(const SystemSpec& system, const VectorXd& y, double u, double h);

// Integrates y' = f(y, u(t)) from y0 over [0, T] with fixed step h_t (a final
// short step covers any remainder of T). The state constraint dist(y, Y) <=
// delta + tol is enforced per the policy; violations are never silently
// repaired.
Trajectory integrate(const SystemSpec& system, const VectorXd& y0, const ControlSignal& signal,
                     double T, double h_t, double delta,
                     ViolationPolicy policy = ViolationPolicy::Throw);

/// Returns y unchanged when dist(y, Y) <= delta; projects onto Y^delta when
/// within tol::projection beyond it; otherwise throws NumericalError.
VectorXd enforce_viability(const SystemSpec& system, const VectorXd& y, double delta);

/// Trajectory cost integrals by trapezoid rule on the samples:
/// average_cost = (1/T) * integral of k, discounted_cost = lambda * integral of e^{-lambda t} k.
double average_cost(const SystemSpec& system, const Trajectory& traj);
double discounted_cost(const SystemSpec& system, const Trajectory& traj, double lambda);

/// Writes t,<state vars>,u as CSV.
std::string trajectory_csv(const SystemSpec& system, const Trajectory& traj);

}  // namespace occlp
