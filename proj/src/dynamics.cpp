#include "occlp/dynamics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "occlp/expr.hpp"

namespace occlp {

// --- ConstraintSet ---------------------------------------------------------

ConstraintSet ConstraintSet::disk(const VectorXd& center, double radius) {
  if (radius <= 0.0) throw ConfigError("disk constraint needs radius > 0");
  ConstraintSet c;
  c.kind_ = Kind::Disk;
  c.center_ = center;
  c.radius_ = radius;
  c.box_lo_ = center.array() - radius;
  c.box_hi_ = center.array() + radius;
  return c;
}

ConstraintSet ConstraintSet::box(const VectorXd& lo, const VectorXd& hi) {
  if (lo.size() != hi.size() || ((hi - lo).array() <= 0.0).any())
    throw ConfigError("box constraint needs lo < hi per axis");
  ConstraintSet c;
  c.kind_ = Kind::Box;
  c.box_lo_ = lo;
  c.box_hi_ = hi;
  return c;
}

double ConstraintSet::distance(const VectorXd& y) const {
  if (kind_ == Kind::Disk) return (y - center_).norm() - radius_;
  // box: Euclidean distance outside, largest (negative) face margin inside
  VectorXd clamped = y.cwiseMax(box_lo_).cwiseMin(box_hi_);
  double outside = (y - clamped).norm();
  if (outside > 0.0) return outside;
  double inside = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < y.size(); ++a)
    inside = std::max(inside, std::max(box_lo_(a) - y(a), y(a) - box_hi_(a)));
  return inside;
}

VectorXd ConstraintSet::project(const VectorXd& y, double delta) const {
  if (distance(y) <= delta) return y;
  VectorXd p;
  if (kind_ == Kind::Disk) {
    p = center_ + radius_ * (y - center_).normalized();
  } else {
    p = y.cwiseMax(box_lo_).cwiseMin(box_hi_);
  }
  double gap = (y - p).norm();
  if (gap <= delta || delta == 0.0) return p;
  return p + (delta / gap) * (y - p);
}

// --- SystemSpec ------------------------------------------------------------

VectorXd uniform_control_grid(double lo, double hi, int count) {
  if (count < 1 || hi < lo) throw ConfigError("control grid needs count >= 1 and hi >= lo");
  if (count == 1) return VectorXd::Constant(1, 0.5 * (lo + hi));
  return VectorXd::LinSpaced(count, lo, hi);
}

void validate_system(const SystemSpec& system, int samples_per_axis) {
  if (system.state_dim < 1 || system.state_dim > 3)
    throw ConfigError("state_dim must be 1, 2 or 3");
  if (system.control_grid.size() == 0) throw ConfigError("control grid is empty");
  for (int j = 1; j < system.control_grid.size(); ++j)
    if (system.control_grid(j) <= system.control_grid(j - 1))
      throw ConfigError("control grid must be strictly ascending");
  if (system.M_f <= 0.0 || system.M_k <= 0.0) throw ConfigError("M_f and M_k must be positive");
  if (system.delta0 <= 0.0) throw ConfigError("delta0 must be positive");

  // sample Y^delta0 x U and confirm the declared bounds dominate
  const VectorXd lo = system.constraint.box_lo().array() - system.delta0;
  const VectorXd hi = system.constraint.box_hi().array() + system.delta0;
  const int n = system.state_dim;
  VectorXd y(n), dy(n);
  std::vector<int> idx(n, 0);
  for (;;) {
    for (int a = 0; a < n; ++a)
      y(a) = lo(a) + (hi(a) - lo(a)) * idx[a] / double(samples_per_axis - 1);
    if (system.constraint.distance(y) <= system.delta0) {
      for (int j = 0; j < system.control_grid.size(); ++j) {
        double u = system.control_grid(j);
        system.f(y, u, dy);
        if (dy.norm() > system.M_f)
          throw ConfigError("M_f=" + format_double(system.M_f) + " violated: |f|=" +
                            format_double(dy.norm()) + " at sampled point");
        double kv = system.k(y, u);
        if (std::fabs(kv) > system.M_k)
          throw ConfigError("M_k=" + format_double(system.M_k) + " violated: |k|=" +
                            format_double(std::fabs(kv)) + " at sampled point");
      }
    }
    int a = 0;
    while (a < n && ++idx[a] == samples_per_axis) idx[a++] = 0;
    if (a == n) break;
  }
}

SystemSpec builtin_system(const std::string& name, int control_count) {
  SystemSpec s;
  if (name == "rotation-cartesian") {
    s.name = name;
    s.state_dim = 2;
    s.state_vars = {"y1", "y2"};
    s.f = [](const VectorXd& y, double u, VectorXd& dy) {
      dy(0) = y(1) * u;
      dy(1) = -y(0) * u;
    };
    s.k = [](const VectorXd& y, double) {
      return (1.0 - y(0)) * (1.0 - y(0)) + y(1) * y(1);
    };
    s.f_source = {"y2*u", "-y1*u"};
    s.k_source = "(1 - y1)^2 + y2^2";
    s.constraint = ConstraintSet::disk(VectorXd::Zero(2), 1.0);
    s.control_grid = uniform_control_grid(-1.0, 1.0, control_count);
    s.delta0 = 0.1;
    s.M_f = 1.1;   // |f| = |u| |y| <= 1.1 on the inflated disk
    s.M_k = 4.41;  // max at y = (-1.1, 0)
  } else if (name == "rotation-polar") {
    s.name = name;
    s.state_dim = 2;
    s.state_vars = {"r", "th"};
    s.f = [](const VectorXd&, double u, VectorXd& dy) {
      dy(0) = 0.0;
      dy(1) = u;
    };
    s.k = [](const VectorXd& y, double) {
      return 1.0 - 2.0 * y(0) * std::cos(y(1)) + y(0) * y(0);
    };
    s.f_source = {"0", "u"};
    s.k_source = "1 - 2*r*cos(th) + r^2";
    VectorXd lo(2), hi(2);
    lo << 0.0, -M_PI;
    hi << 1.0, M_PI;
    s.constraint = ConstraintSet::box(lo, hi);
    s.control_grid = uniform_control_grid(-1.0, 1.0, control_count);
    s.delta0 = 0.1;
    s.M_f = 1.0;   // |f| = |u| <= 1
    s.M_k = 4.42;  // max at r = 1.1, th = pi
  } else {
    throw ConfigError("unknown builtin system '" + name +
                      "' (expected rotation-cartesian or rotation-polar)");
  }
  validate_system(s);
  return s;
}

SystemSpec make_expression_system(const std::string& name,
                                  const std::vector<std::string>& state_vars,
                                  const std::vector<std::string>& f_exprs,
                                  const std::string& k_expr, ConstraintSet constraint,
                                  const VectorXd& control_grid, double M_f, double M_k,
                                  double delta0) {
  const int n = static_cast<int>(state_vars.size());
  if (n < 1 || n > 3) throw ConfigError("state_dim must be 1, 2 or 3");
  if (static_cast<int>(f_exprs.size()) != n)
    throw ConfigError("need one f expression per state dimension");
  if (constraint.dim() != n) throw ConfigError("constraint dimension does not match the state");

  std::vector<std::string> slots = state_vars;
  slots.push_back("u");
  std::vector<CompiledExpr> f_compiled;
  for (const auto& src : f_exprs) f_compiled.emplace_back(parse_expression(src), slots);
  CompiledExpr k_compiled(parse_expression(k_expr), slots);

  SystemSpec s;
  s.name = name;
  s.state_dim = n;
  s.state_vars = state_vars;
  s.f = [f_compiled, n](const VectorXd& y, double u, VectorXd& dy) {
    double buf[4];
    for (int a = 0; a < n; ++a) buf[a] = y(a);
    buf[n] = u;
    for (int a = 0; a < n; ++a) dy(a) = f_compiled[a].eval(buf);
  };
  s.k = [k_compiled, n](const VectorXd& y, double u) {
    double buf[4];
    for (int a = 0; a < n; ++a) buf[a] = y(a);
    buf[n] = u;
    return k_compiled.eval(buf);
  };
  s.f_source = f_exprs;
  s.k_source = k_expr;
  s.constraint = std::move(constraint);
  s.control_grid = control_grid;
  s.M_f = M_f;
  s.M_k = M_k;
  s.delta0 = delta0;
  validate_system(s);
  return s;
}

// --- ControlSignal ---------------------------------------------------------

ControlSignal::ControlSignal(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.empty() || breakpoints_.size() != values_.size())
    throw ConfigError("control signal needs matching nonempty breakpoints and values");
  if (breakpoints_.front() != 0.0) throw ConfigError("control signal must start at t = 0");
  for (std::size_t i = 1; i < breakpoints_.size(); ++i)
    if (breakpoints_[i] <= breakpoints_[i - 1])
      throw ConfigError("control signal breakpoints must be strictly increasing");
}

double ControlSignal::value_at(double t) const {
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin());
  return values_[i == 0 ? 0 : i - 1];
}

double ControlSignal::min_spacing() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < breakpoints_.size(); ++i)
    m = std::min(m, breakpoints_[i] - breakpoints_[i - 1]);
  return m;
}

// --- integration -----------------------------------------------------------

namespace {

void rk4_step_into(const SystemSpec& system, const VectorXd& y, double u, double h,
                   VectorXd& out, VectorXd& k1, VectorXd& k2, VectorXd& k3, VectorXd& k4,
                   VectorXd& tmp) {
  system.f(y, u, k1);
  tmp = y + (0.5 * h) * k1;
  system.f(tmp, u, k2);
  tmp = y + (0.5 * h) * k2;
  system.f(tmp, u, k3);
  tmp = y + h * k3;
  system.f(tmp, u, k4);
  out = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

VectorXd rk4_step(const SystemSpec& system, const VectorXd& y, double u, double h) {
  VectorXd out(y.size()), k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), tmp(y.size());
  rk4_step_into(system, y, u, h, out, k1, k2, k3, k4, tmp);
  return out;
}

Trajectory integrate(const SystemSpec& system, const VectorXd& y0, const ControlSignal& signal,
                     double T, double h_t, double delta, ViolationPolicy policy) {
  if (T <= 0.0) throw ConfigError("integration horizon T must be positive");
  if (h_t <= 0.0) throw ConfigError("integration step h_t must be positive");
  if (h_t > signal.min_spacing() * (1.0 + 1e-12))
    throw ConfigError("step h_t exceeds the control breakpoint spacing; the control would not "
                      "be constant within a step");
  if (system.constraint.distance(y0) > delta + tol::viability)
    throw NumericalError("initial state outside Y^delta (dist = " +
                         format_double(system.constraint.distance(y0)) + ", delta = " +
                         format_double(delta) + ")");

  const int n_full = static_cast<int>(std::floor(T / h_t + 1e-9));
  const double remainder = T - n_full * h_t;
  const bool has_partial = remainder > 1e-10 * std::max(1.0, T);
  const int steps = n_full + (has_partial ? 1 : 0);

  Trajectory traj;
  traj.y0 = y0;
  traj.h_t = h_t;
  traj.delta = delta;
  traj.times.resize(steps + 1);
  traj.states.resize(steps + 1, system.state_dim);
  traj.controls.resize(steps + 1);

  VectorXd y = y0, next(system.state_dim);
  VectorXd k1(system.state_dim), k2(system.state_dim), k3(system.state_dim),
      k4(system.state_dim), tmp(system.state_dim);
  traj.times(0) = 0.0;
  traj.states.row(0) = y;
  for (int i = 0; i < steps; ++i) {
    const double t = i * h_t;
    const double h = (i < n_full) ? h_t : remainder;
    const double u = signal.value_at(t);
    traj.controls(i) = u;
    rk4_step_into(system, y, u, h, next, k1, k2, k3, k4, tmp);

    double d = system.constraint.distance(next);
    if (d > delta + tol::viability) {
      const double t_next = (i < n_full) ? (i + 1) * h_t : T;
      switch (policy) {
        case ViolationPolicy::Throw:
          throw NumericalError("state constraint violated at t = " + format_double(t_next) +
                               " (dist = " + format_double(d) + ", allowed = " +
                               format_double(delta + tol::viability) + ")");
        case ViolationPolicy::Flag:
          if (traj.constraint_ok) {
            traj.constraint_ok = false;
            traj.first_violation_time = t_next;
          }
          break;
        case ViolationPolicy::Project:
          next = enforce_viability(system, next, delta);
          ++traj.projection_count;
          break;
      }
    }
    y = next;
    traj.times(i + 1) = (i < n_full) ? (i + 1) * h_t : T;
    traj.states.row(i + 1) = y;
  }
  traj.controls(steps) = traj.controls(steps - 1);
  return traj;
}

VectorXd enforce_viability(const SystemSpec& system, const VectorXd& y, double delta) {
  const double d = system.constraint.distance(y);
  if (d <= delta) return y;
  if (d > delta + tol::projection)
    throw NumericalError("state too far outside Y^delta to repair (dist = " + format_double(d) +
                         ", repairable up to " + format_double(delta + tol::projection) + ")");
  VectorXd p = system.constraint.project(y, delta);
  if (system.constraint.distance(p) > delta + 1e-9)
    throw NumericalError("projection onto Y^delta failed to meet its tolerance");
  return p;
}

// --- cost integrals --------------------------------------------------------

double average_cost(const SystemSpec& system, const Trajectory& traj) {
  double integral = 0.0;
  for (int i = 0; i + 1 < traj.samples(); ++i) {
    const double dt = traj.times(i + 1) - traj.times(i);
    const double u = traj.controls(i);
    integral += 0.5 * dt * (system.k(traj.state(i), u) + system.k(traj.state(i + 1), u));
  }
  return integral / traj.duration();
}

double discounted_cost(const SystemSpec& system, const Trajectory& traj, double lambda) {
  if (lambda <= 0.0) throw ConfigError("discount rate lambda must be positive");
  double integral = 0.0;
  for (int i = 0; i + 1 < traj.samples(); ++i) {
    const double dt = traj.times(i + 1) - traj.times(i);
    const double u = traj.controls(i);
    const double a = std::exp(-lambda * traj.times(i)) * system.k(traj.state(i), u);
    const double b = std::exp(-lambda * traj.times(i + 1)) * system.k(traj.state(i + 1), u);
    integral += 0.5 * dt * (a + b);
  }
  return lambda * integral;
}

std::string trajectory_csv(const SystemSpec& system, const Trajectory& traj) {
  std::ostringstream out;
  out << "t";
  for (const auto& v : system.state_vars) out << "," << v;
  out << ",u\n";
  for (int i = 0; i < traj.samples(); ++i) {
    out << format_double(traj.times(i));
    for (int a = 0; a < system.state_dim; ++a) out << "," << format_double(traj.states(i, a));
    out << "," << format_double(traj.controls(i)) << "\n";
  }
  return out.str();
}

}  // namespace occlp
