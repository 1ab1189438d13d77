#pragma once

#include <functional>
#include <string>
#include <vector>

#include "occlp/basis.hpp"
#include "occlp/common.hpp"
#include "occlp/dynamics.hpp"

namespace occlp {

// Discrete measure on Y x U: atoms (y_i, u_i) with nonnegative weights.
// Probability kind keeps the total weight at 1 to within 1e-12.
struct OccMeasure {
  enum class Kind { Probability, Nonnegative };

  MatrixXd points;    // one atom per row
  VectorXd controls;  // atom controls
  VectorXd weights;   // atom weights, >= 0
  Kind kind = Kind::Nonnegative;

  int atoms() const { return static_cast<int>(weights.size()); }
  double total_mass() const { return weights.sum(); }

  static OccMeasure dirac(const VectorXd& y, double u);
  static OccMeasure from_atoms(const MatrixXd& points, const VectorXd& controls,
                               const VectorXd& weights, Kind kind);

  /// Throws NumericalError if weights are negative or a probability measure
  /// is off normalization by more than 1e-12.
  void validate() const;
};

/// Occupational measure of a trajectory over [0, T]: atoms at the samples,
/// trapezoid weights scaled by 1/T. Integrating q against it reproduces
/// (1/T) * integral of q(y(t), u(t)) up to O(h_t) quadrature error.
OccMeasure cesaro_measure(const Trajectory& traj);

/// Discounted occupational measure with density lambda * e^{-lambda t};
/// requires duration >= 10/lambda so the truncated tail mass is <= e^{-10}.
OccMeasure discounted_measure(const Trajectory& traj, double lambda);

/// Sum of w_i q(y_i, u_i).
double integrate_against(const OccMeasure& m,
                         const std::function<double(const VectorXd&, double)>& q);

// Truncation of the weak* metric: J Lipschitz test functions q_j with
// sup-norm <= 1 on Y x U, combined with weights 2^{-j}. The q_j here are
// monomials in (y, u) rescaled to the box; the choice is recorded in reports
// because the metric value depends on it.
struct MetricConfig {
  std::vector<std::string> names;
  std::vector<std::function<double(const VectorXd&, double)>> functions;

  int count() const { return static_cast<int>(functions.size()); }
};

/// Default metric: the first J rescaled (y, u)-monomials over y_box x U.
MetricConfig make_default_metric(const SystemSpec& system, int J = 16);

/// rho(m1, m2) = sum_j 2^{-j} |∫q_j dm1 - ∫q_j dm2|  (a pseudo-metric).
double rho_distance(const OccMeasure& m1, const OccMeasure& m2, const MetricConfig& cfg);

/// Feature vector (∫q_j dm)_j; rho is the 2^{-j}-weighted l1 distance of features.
VectorXd metric_features(const OccMeasure& m, const MetricConfig& cfg);

/// Stationarity residuals: per basis function, sum_i w_i ∇φ_b(y_i)·f(y_i, u_i).
/// The measure is W-feasible at tolerance tau iff the max |entry| <= tau.
VectorXd w_residual(const OccMeasure& m, const Basis& basis, const SystemSpec& system);

// One-sided empirical proxy for the Hausdorff distance between the convex
// hulls of two finite measure families: max over members of one list of the
// rho-distance to the best greedy convex combination (<= 64 components) of
// the other, symmetrized. A diagnostic trend only; it bounds nothing.
double hausdorff_diagnostic(const std::vector<OccMeasure>& sampled,
                            const std::vector<OccMeasure>& w_feasible,
                            const MetricConfig& cfg);

/// CSV export: y1..yn,u,w.
std::string measure_csv(const SystemSpec& system, const OccMeasure& m);

}  // namespace occlp
