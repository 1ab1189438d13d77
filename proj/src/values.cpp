#include "occlp/values.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <cmath>
#include <sstream>

namespace occlp {

// --- GridSpec ----------------------------------------------------------------

int GridSpec::node_count() const {
  int count = 1;
  for (int a = 0; a < dim(); ++a) count *= nodes(a);
  return count;
}

VectorXi GridSpec::unflatten(int flat) const {
  VectorXi idx(dim());
  for (int a = dim() - 1; a >= 0; --a) {
    idx(a) = flat % nodes(a);
    flat /= nodes(a);
  }
  return idx;
}

int GridSpec::flatten(const VectorXi& idx) const {
  int flat = 0;
  for (int a = 0; a < dim(); ++a) flat = flat * nodes(a) + idx(a);
  return flat;
}

VectorXd GridSpec::node(int flat) const {
  const VectorXi idx = unflatten(flat);
  VectorXd y(dim());
  for (int a = 0; a < dim(); ++a) y(a) = lo(a) + idx(a) * step(a);
  return y;
}

bool GridSpec::locate(const VectorXd& y, std::vector<int>& corners,
                      std::vector<double>& weights) const {
  const int n = dim();
  int base[3] = {0, 0, 0};
  double frac[3] = {0.0, 0.0, 0.0};
  for (int a = 0; a < n; ++a) {
    const double span_tol = 1e-12 * std::max(1.0, hi(a) - lo(a));
    if (y(a) < lo(a) - span_tol || y(a) > hi(a) + span_tol) return false;
    double t = (y(a) - lo(a)) / step(a);
    int i = static_cast<int>(std::floor(t));
    i = std::max(0, std::min(i, nodes(a) - 2));
    base[a] = i;
    frac[a] = std::min(1.0, std::max(0.0, t - i));
  }
  const int stencil = 1 << n;
  corners.resize(stencil);
  weights.resize(stencil);
  for (int s = 0; s < stencil; ++s) {
    double w = 1.0;
    int flat = 0;
    for (int a = 0; a < n; ++a) {
      const int bit = (s >> a) & 1;
      w *= bit ? frac[a] : 1.0 - frac[a];
      flat = flat * nodes(a) + base[a] + bit;
    }
    corners[s] = flat;
    weights[s] = w;
  }
  return true;
}

GridSpec make_state_grid(const SystemSpec& system, double delta, int nodes_per_axis) {
  return make_state_grid(system, delta,
                         VectorXi::Constant(system.state_dim, nodes_per_axis));
}

GridSpec make_state_grid(const SystemSpec& system, double delta, const VectorXi& nodes_per_axis) {
  if (delta < 0.0) throw ConfigError("constraint margin delta must be >= 0");
  if (nodes_per_axis.size() != system.state_dim)
    throw ConfigError("grid node counts do not match the state dimension");
  if ((nodes_per_axis.array() < 2).any()) throw ConfigError("grids need >= 2 nodes per axis");
  GridSpec g;
  g.lo = system.constraint.box_lo().array() - delta;
  g.hi = system.constraint.box_hi().array() + delta;
  g.nodes = nodes_per_axis;
  return g;
}

// --- ValueTable ----------------------------------------------------------------

double ValueTable::interpolate(const VectorXd& y) const {
  std::vector<int> corners;
  std::vector<double> weights;
  if (!grid.locate(y, corners, weights))
    throw NumericalError("value query outside the table grid");
  double v = 0.0;
  for (std::size_t s = 0; s < corners.size(); ++s) {
    if (weights[s] <= 1e-14) continue;
    if (!valid[corners[s]])
      throw NumericalError("value query stencil touches a node outside Y^delta");
    v += weights[s] * values(corners[s]);
  }
  return v;
}

bool ValueTable::can_interpolate(const VectorXd& y) const {
  std::vector<int> corners;
  std::vector<double> weights;
  if (!grid.locate(y, corners, weights)) return false;
  for (std::size_t s = 0; s < corners.size(); ++s)
    if (weights[s] > 1e-14 && !valid[corners[s]]) return false;
  return true;
}

std::string ValueTable::csv(const SystemSpec& system) const {
  std::ostringstream out;
  for (const auto& v : system.state_vars) out << v << ",";
  out << "value\n";
  for (int i = 0; i < grid.node_count(); ++i) {
    if (!valid[i]) continue;
    const VectorXd y = grid.node(i);
    for (int a = 0; a < grid.dim(); ++a) out << format_double(y(a)) << ",";
    out << format_double(values(i)) << "\n";
  }
  return out.str();
}

// --- shared one-step transition precompute ------------------------------------

namespace {

// Precomputed one-step images for every (node, control): interpolation
// stencil of the RK4 image plus the stage cost. The transition structure is
// time-invariant, so both DP solvers sweep over this table.
struct TransitionTable {
  int node_count = 0;
  int control_count = 0;
  int stencil = 0;                  // 2^dim
  std::vector<std::uint8_t> valid;  // per node
  std::vector<std::uint8_t> admissible;  // per (node, control)
  std::vector<int> corner;              // per (node, control, stencil slot)
  std::vector<double> weight;
  std::vector<double> cost;  // k(y_i, u_j)

  int has_admissible(int node) const {
    for (int j = 0; j < control_count; ++j)
      if (admissible[node * control_count + j]) return true;
    return false;
  }
};

TransitionTable precompute_transitions(const SystemSpec& system, const GridSpec& grid,
                                       double delta, double h_t) {
  if (h_t <= 0.0) throw ConfigError("DP step h_t must be positive");
  TransitionTable t;
  t.node_count = grid.node_count();
  t.control_count = static_cast<int>(system.control_grid.size());
  t.stencil = 1 << grid.dim();
  t.valid.assign(t.node_count, 0);
  t.admissible.assign(static_cast<std::size_t>(t.node_count) * t.control_count, 0);
  t.corner.assign(t.admissible.size() * t.stencil, 0);
  t.weight.assign(t.admissible.size() * t.stencil, 0.0);
  t.cost.assign(t.admissible.size(), 0.0);

  std::vector<int> corners;
  std::vector<double> weights;
  for (int i = 0; i < t.node_count; ++i) {
    const VectorXd y = grid.node(i);
    t.valid[i] = system.constraint.distance(y) <= delta + 1e-12;
  }
  for (int i = 0; i < t.node_count; ++i) {
    if (!t.valid[i]) continue;
    const VectorXd y = grid.node(i);
    for (int j = 0; j < t.control_count; ++j) {
      const double u = system.control_grid(j);
      const std::size_t slot = static_cast<std::size_t>(i) * t.control_count + j;
      t.cost[slot] = system.k(y, u);
      const VectorXd image = rk4_step(system, y, u, h_t);
      if (system.constraint.distance(image) > delta + 1e-12) continue;
      if (!grid.locate(image, corners, weights)) continue;
      bool ok = true;
      for (int s = 0; s < t.stencil; ++s)
        if (weights[s] > 1e-14 && !t.valid[corners[s]]) {
          ok = false;
          break;
        }
      if (!ok) continue;
      t.admissible[slot] = 1;
      for (int s = 0; s < t.stencil; ++s) {
        t.corner[slot * t.stencil + s] = corners[s];
        t.weight[slot * t.stencil + s] = weights[s];
      }
    }
    if (!t.has_admissible(i)) {
      std::ostringstream msg;
      msg << "viability failure at grid scale: node (";
      for (int a = 0; a < grid.dim(); ++a) msg << (a ? ", " : "") << format_double(y(a));
      msg << ") has no control whose one-step image stays in Y^delta";
      throw NumericalError(msg.str());
    }
  }
  return t;
}

double sweep_value(const TransitionTable& t, std::size_t slot, const VectorXd& v) {
  const int st = t.stencil;
  double s = 0.0;
  for (int c = 0; c < st; ++c)
    s += t.weight[slot * st + c] * v(t.corner[slot * st + c]);
  return s;
}

}  // namespace

// --- Cesaro DP -----------------------------------------------------------------

ValueTable cesaro_value_dp(const SystemSpec& system, double T, double delta,
                           const GridSpec& grid, double h_t) {
  if (T <= 0.0) throw ConfigError("horizon T must be positive");
  const double steps_exact = T / h_t;
  const int steps = static_cast<int>(std::lround(steps_exact));
  if (steps < 1 || std::fabs(steps - steps_exact) > 1e-9 * std::max(1.0, steps_exact))
    throw ConfigError("T must be an integer multiple of h_t for the DP recursion");

  const TransitionTable t = precompute_transitions(system, grid, delta, h_t);
  VectorXd w = VectorXd::Zero(t.node_count), w_next(t.node_count);

  for (int step = 0; step < steps; ++step) {
    for (int i = 0; i < t.node_count; ++i) {
      if (!t.valid[i]) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < t.control_count; ++j) {
        const std::size_t slot = static_cast<std::size_t>(i) * t.control_count + j;
        if (!t.admissible[slot]) continue;
        const double cand = t.cost[slot] * h_t + sweep_value(t, slot, w);
        if (cand < best) best = cand;
      }
      w_next(i) = best;
    }
    std::swap(w, w_next);
  }

  ValueTable table;
  table.grid = grid;
  table.values = w / T;
  table.valid = t.valid;
  table.kind = ValueTable::Kind::Cesaro;
  table.horizon_T = T;
  table.delta = delta;
  table.h_t = h_t;
  table.control_grid = system.control_grid;
  for (int i = 0; i < t.node_count; ++i)
    if (!t.valid[i]) table.values(i) = std::numeric_limits<double>::quiet_NaN();
  return table;
}

// --- Abel fixed point ------------------------------------------------------------

ValueTable abel_value_dp(const SystemSpec& system, double lambda, double delta,
                         const GridSpec& grid, double h_t, double tol_vi, int max_iters) {
  if (lambda <= 0.0) throw ConfigError("discount rate lambda must be positive");
  const TransitionTable t = precompute_transitions(system, grid, delta, h_t);
  const double beta = std::exp(-lambda * h_t);
  const double stage = 1.0 - beta;  // lambda * integral of e^{-lambda s} over one step

  const int N = t.node_count;
  VectorXd v = VectorXd::Zero(N);
  std::vector<int> policy(N, -1);

  auto improve = [&](const VectorXd& value, std::vector<int>& pi) {
    bool changed = false;
    for (int i = 0; i < N; ++i) {
      if (!t.valid[i]) continue;
      double best = std::numeric_limits<double>::infinity();
      int best_j = -1;
      double q_old = std::numeric_limits<double>::infinity();
      for (int j = 0; j < t.control_count; ++j) {
        const std::size_t slot = static_cast<std::size_t>(i) * t.control_count + j;
        if (!t.admissible[slot]) continue;
        const double cand = t.cost[slot] * stage + beta * sweep_value(t, slot, value);
        if (j == pi[i]) q_old = cand;
        if (cand < best) {
          best = cand;
          best_j = j;
        }
      }
      // switch actions only on a strict improvement, so float ties between
      // equally good controls cannot make the policy cycle
      if (pi[i] < 0 || best < q_old - 1e-13 * (1.0 + std::fabs(q_old))) {
        if (pi[i] != best_j) {
          pi[i] = best_j;
          changed = true;
        }
      }
    }
    return changed;
  };

  // policy iteration with exact evaluation: converges in a handful of rounds
  // independent of the contraction factor
  std::vector<int> compact(N, -1);
  int active = 0;
  for (int i = 0; i < N; ++i)
    if (t.valid[i]) compact[i] = active++;

  improve(v, policy);
  const int max_policy_rounds = 500;
  for (int round = 0; round < max_policy_rounds; ++round) {
    // evaluate: (I - beta P_pi) v = stage * c_pi over valid nodes
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs(active);
    for (int i = 0; i < N; ++i) {
      if (!t.valid[i]) continue;
      const int row = compact[i];
      const std::size_t slot = static_cast<std::size_t>(i) * t.control_count + policy[i];
      rhs(row) = stage * t.cost[slot];
      trips.emplace_back(row, row, 1.0);
      for (int s = 0; s < t.stencil; ++s) {
        const double w = t.weight[slot * t.stencil + s];
        if (w <= 1e-14) continue;
        trips.emplace_back(row, compact[t.corner[slot * t.stencil + s]], -beta * w);
      }
    }
    Eigen::SparseMatrix<double> A(active, active);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
    if (lu.info() != Eigen::Success)
      throw NumericalError("policy evaluation system is singular");
    const Eigen::VectorXd sol = lu.solve(rhs);
    for (int i = 0; i < N; ++i)
      if (t.valid[i]) v(i) = sol(compact[i]);
    if (!improve(v, policy)) break;
    if (round + 1 == max_policy_rounds)
      throw NumericalError("discounted policy iteration did not converge");
  }

  // certify as the fixed point of the plain value-iteration operator
  VectorXd v_next = v;
  int iters = 0;
  for (;; ++iters) {
    if (iters >= max_iters)
      throw NumericalError("discounted value iteration did not reach tol_vi within max_iters");
    double change = 0.0;
    for (int i = 0; i < N; ++i) {
      if (!t.valid[i]) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < t.control_count; ++j) {
        const std::size_t slot = static_cast<std::size_t>(i) * t.control_count + j;
        if (!t.admissible[slot]) continue;
        const double cand = t.cost[slot] * stage + beta * sweep_value(t, slot, v);
        if (cand < best) best = cand;
      }
      change = std::max(change, std::fabs(best - v(i)));
      v_next(i) = best;
    }
    std::swap(v, v_next);
    if (change <= tol_vi) break;
  }

  ValueTable table;
  table.grid = grid;
  table.values = v;
  table.valid = t.valid;
  table.kind = ValueTable::Kind::Abel;
  table.lambda = lambda;
  table.delta = delta;
  table.h_t = h_t;
  table.control_grid = system.control_grid;
  for (int i = 0; i < N; ++i)
    if (!t.valid[i]) table.values(i) = std::numeric_limits<double>::quiet_NaN();
  return table;
}

// --- brute force oracle ----------------------------------------------------------

double brute_force_value(const SystemSpec& system, const VectorXd& y0, double T, double h_t,
                         int max_switches) {
  if (max_switches < 0) throw ConfigError("max_switches must be >= 0");
  const int slots = max_switches + 1;
  const int m = static_cast<int>(system.control_grid.size());
  if (slots * std::log(double(m)) > std::log(1e6))
    throw ConfigError("brute force budget exceeded: |U|^slots > 1e6");

  std::vector<double> breakpoints(slots);
  for (int s = 0; s < slots; ++s) breakpoints[s] = s * T / slots;

  std::vector<int> choice(slots, 0);
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (;;) {
    std::vector<double> values(slots);
    for (int s = 0; s < slots; ++s) values[s] = system.control_grid(choice[s]);
    const Trajectory traj = integrate(system, y0, ControlSignal(breakpoints, values), T, h_t,
                                      0.0, ViolationPolicy::Flag);
    if (traj.constraint_ok) {
      any = true;
      best = std::min(best, average_cost(system, traj));
    }
    int s = 0;
    while (s < slots && ++choice[s] == m) choice[s++] = 0;
    if (s == slots) break;
  }
  if (!any)
    throw NumericalError("brute force found no admissible control sequence from the given y0");
  return best;
}

// --- periodic orbits ----------------------------------------------------------------

double periodic_orbit_average(const SystemSpec& system, const PeriodicOrbit& orbit, double h_t) {
  if (orbit.period <= 0.0) throw ConfigError("orbit period must be positive");
  const Trajectory traj =
      integrate(system, orbit.start, orbit.control, orbit.period, h_t, 0.0);
  const double closure = (traj.state(traj.samples() - 1) - orbit.start).norm();
  if (closure > tol::orbit_closure)
    throw NumericalError("orbit fails the closure tolerance: |y(period) - y(0)| = " +
                         format_double(closure));
  return average_cost(system, traj);
}

double vper_search(const SystemSpec& system, const VectorXd& y0,
                   const std::vector<PeriodicOrbit>& family, double h_t) {
  if (family.empty()) throw ConfigError("vper_search needs a nonempty orbit family");
  double best = std::numeric_limits<double>::infinity();
  for (const PeriodicOrbit& orbit : family) {
    if (orbit.reach_control && orbit.reach_time > 0.0) {
      Trajectory reach;
      try {
        reach = integrate(system, y0, *orbit.reach_control, orbit.reach_time, h_t, 0.0);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string("orbit not FT-reachable from y0: ") + e.what());
      }
      if ((reach.state(reach.samples() - 1) - orbit.start).norm() > tol::orbit_closure)
        throw NumericalError("reaching control does not end at the orbit start (gap = " +
                             format_double((reach.state(reach.samples() - 1) - orbit.start).norm()) +
                             ")");
    } else if ((y0 - orbit.start).norm() > tol::orbit_closure) {
      throw NumericalError("orbit without a reaching control must start at y0");
    }
    best = std::min(best, periodic_orbit_average(system, orbit, h_t));
  }
  return best;
}

// --- DPP gradient diagnostic ----------------------------------------------------------

DppReport dpp_gradient_diagnostic(const ValueTable& table, const SystemSpec& system,
                                  double tol_dpp) {
  if (table.kind != ValueTable::Kind::Cesaro)
    throw ConfigError("the DPP gradient bound applies to Cesaro tables");
  DppReport report;
  report.tol = tol_dpp;
  report.min_margin = std::numeric_limits<double>::infinity();
  const GridSpec& g = table.grid;
  const double bound = 2.0 * system.M_k / table.horizon_T;
  report.bound = bound;

  VectorXd grad(g.dim()), f(g.dim());
  for (int i = 0; i < g.node_count(); ++i) {
    if (!table.valid[i]) continue;
    const VectorXi idx = g.unflatten(i);
    bool interior = true;
    for (int a = 0; a < g.dim() && interior; ++a)
      interior = idx(a) > 0 && idx(a) < g.nodes(a) - 1;
    if (!interior) continue;
    bool neighbors_valid = true;
    for (int a = 0; a < g.dim() && neighbors_valid; ++a) {
      VectorXi up = idx, dn = idx;
      up(a) += 1;
      dn(a) -= 1;
      neighbors_valid = table.valid[g.flatten(up)] && table.valid[g.flatten(dn)];
    }
    if (!neighbors_valid) continue;
    for (int a = 0; a < g.dim(); ++a) {
      VectorXi up = idx, dn = idx;
      up(a) += 1;
      dn(a) -= 1;
      grad(a) = (table.values(g.flatten(up)) - table.values(g.flatten(dn))) / (2.0 * g.step(a));
    }
    const VectorXd y = g.node(i);
    for (int j = 0; j < system.control_grid.size(); ++j) {
      system.f(y, system.control_grid(j), f);
      const double margin = grad.dot(f) + bound;
      if (margin < report.min_margin) {
        report.min_margin = margin;
        report.argmin_state = y;
        report.argmin_control = system.control_grid(j);
      }
    }
  }
  report.pass = report.min_margin >= -tol_dpp;
  return report;
}

}  // namespace occlp
