#pragma once

#include <optional>
#include <string>
#include <vector>

#include "occlp/common.hpp"
#include "occlp/dynamics.hpp"

namespace occlp {

// Uniform rectangular grid, row-major flattening with axis 0 slowest.
struct GridSpec {
  VectorXd lo, hi;
  VectorXi nodes;  // per-axis node counts, >= 2

  int dim() const { return static_cast<int>(nodes.size()); }
  int node_count() const;
  double step(int axis) const { return (hi(axis) - lo(axis)) / (nodes(axis) - 1); }
  VectorXd node(int flat) const;
  VectorXi unflatten(int flat) const;
  int flatten(const VectorXi& idx) const;

  // Multilinear interpolation stencil at y: up to 2^dim corner flats with
  // convex weights. Returns false when y lies outside the grid box.
  bool locate(const VectorXd& y, std::vector<int>& corners, std::vector<double>& weights) const;
};

/// Grid over the bounding box of Y^delta with the given nodes per axis.
GridSpec make_state_grid(const SystemSpec& system, double delta, int nodes_per_axis);
GridSpec make_state_grid(const SystemSpec& system, double delta, const VectorXi& nodes_per_axis);

// Value function on a state grid. `valid` marks nodes inside Y^delta; queries
// whose interpolation stencil touches an invalid node (with nonzero weight)
// are refused rather than extrapolated.
struct ValueTable {
  enum class Kind { Cesaro, Abel };

  GridSpec grid;
  VectorXd values;
  std::vector<std::uint8_t> valid;

  Kind kind = Kind::Cesaro;
  double horizon_T = 0.0;  // Cesaro
  double lambda = 0.0;     // Abel
  double delta = 0.0;
  double h_t = 0.0;
  VectorXd control_grid;
  std::string interpolation = "multilinear";

  double interpolate(const VectorXd& y) const;
  bool can_interpolate(const VectorXd& y) const;

  /// CSV rows: node coordinates then value (valid nodes only).
  std::string csv(const SystemSpec& system) const;
};

// Finite-horizon average-cost value V_T^delta by backward dynamic programming
// over steps of h_t: W(T,.) = 0, W(t,y) = min_u [ k(y,u) h_t + W(t+h_t, step(y,u)) ]
// with multilinear interpolation; one-step images leaving Y^delta are
// inadmissible for that (y,u). Returns W(0,.)/T. delta = 0 is the unrelaxed
// problem. T must be an integer multiple of h_t.
ValueTable cesaro_value_dp(const SystemSpec& system, double T, double delta,
                           const GridSpec& grid, double h_t);

// Discounted value h_lambda^delta as the fixed point of
//   v = min_u [ k(y,u) (1 - e^{-lambda h_t}) + e^{-lambda h_t} v(step(y,u)) ],
// iterated until the sup-norm change is <= tol_vi. (Policy iteration with
// exact evaluation accelerates the fixed-point search; the returned table is
// polished and certified by plain fixed-point sweeps.)
ValueTable abel_value_dp(const SystemSpec& system, double lambda, double delta,
                         const GridSpec& grid, double h_t, double tol_vi = 1e-9,
                         int max_iters = 200000);

// Exhaustive minimum of the average cost over piecewise-constant controls on
// max_switches+1 equal slots of [0, T], drawn from the control grid.
// An independent upper-bound oracle for V_T; requires
// |control_grid|^(max_switches+1) <= 1e6. Constraint-violating sequences are
// skipped (delta = 0).
double brute_force_value(const SystemSpec& system, const VectorXd& y0, double T, double h_t,
                         int max_switches);

// A T-periodic admissible process: control over one period starting at
// `start`, plus optionally the control steering y0 to `start` in time
// reach_time. Without a reaching control the orbit is taken to start at y0.
struct PeriodicOrbit {
  double period = 0.0;
  ControlSignal control = ControlSignal::constant(0.0);
  VectorXd start;
  std::optional<ControlSignal> reach_control;
  double reach_time = 0.0;
};

/// Average cost over one orbit period; checks |y(period) - y(0)| <= closure tol.
double periodic_orbit_average(const SystemSpec& system, const PeriodicOrbit& orbit,
                              double h_t = 1e-2);

/// Minimum of periodic_orbit_average over the family, after verifying each
/// orbit is reachable from y0 (an upper bound on V_per(y0)).
double vper_search(const SystemSpec& system, const VectorXd& y0,
                   const std::vector<PeriodicOrbit>& family, double h_t = 1e-2);

// Check of the dynamic-programming gradient bound on a Cesaro table:
// central-difference gradients at interior nodes must satisfy
// grad V . f(y,u) >= -2 M_k / T - tol for every control.
struct DppReport {
  double min_margin = 0.0;  // min over nodes, controls of grad V . f + 2 M_k / T
  double bound = 0.0;       // 2 M_k / T
  VectorXd argmin_state;
  double argmin_control = 0.0;
  double tol = 0.0;
  bool pass = false;
};

DppReport dpp_gradient_diagnostic(const ValueTable& table, const SystemSpec& system,
                                  double tol_dpp = 0.1);

}  // namespace occlp
