#include "occlp/occupation.hpp"

#include <cmath>
#include <sstream>

namespace occlp {

// --- OccMeasure -------------------------------------------------------------

OccMeasure OccMeasure::dirac(const VectorXd& y, double u) {
  OccMeasure m;
  m.points = y.transpose();
  m.controls = VectorXd::Constant(1, u);
  m.weights = VectorXd::Constant(1, 1.0);
  m.kind = Kind::Probability;
  return m;
}

OccMeasure OccMeasure::from_atoms(const MatrixXd& points, const VectorXd& controls,
                                  const VectorXd& weights, Kind kind) {
  OccMeasure m;
  m.points = points;
  m.controls = controls;
  m.weights = weights;
  m.kind = kind;
  m.validate();
  return m;
}

void OccMeasure::validate() const {
  if (points.rows() != weights.size() || controls.size() != weights.size())
    throw NumericalError("measure atom arrays have mismatched lengths");
  if ((weights.array() < 0.0).any()) throw NumericalError("measure has a negative weight");
  if (kind == Kind::Probability && std::fabs(total_mass() - 1.0) > 1e-12)
    throw NumericalError("probability measure off normalization by " +
                         format_double(total_mass() - 1.0));
}

// --- construction from trajectories ----------------------------------------

OccMeasure cesaro_measure(const Trajectory& traj) {
  const int n = traj.samples();
  if (n < 2 || traj.duration() <= 0.0)
    throw NumericalError("occupational measure needs a trajectory of positive duration");
  OccMeasure m;
  m.points = traj.states;
  m.controls = traj.controls;
  m.weights.resize(n);
  // trapezoid weights: interior samples get the full step, endpoints half
  m.weights(0) = 0.5 * (traj.times(1) - traj.times(0));
  m.weights(n - 1) = 0.5 * (traj.times(n - 1) - traj.times(n - 2));
  for (int i = 1; i + 1 < n; ++i)
    m.weights(i) = 0.5 * (traj.times(i + 1) - traj.times(i - 1));
  m.weights /= m.weights.sum();
  m.kind = OccMeasure::Kind::Probability;
  m.validate();
  return m;
}

OccMeasure discounted_measure(const Trajectory& traj, double lambda) {
  if (lambda <= 0.0) throw ConfigError("discount rate lambda must be positive");
  if (traj.duration() < 10.0 / lambda)
    throw ConfigError("horizon " + format_double(traj.duration()) +
                      " too short for lambda = " + format_double(lambda) +
                      "; need T >= 10/lambda so the truncated tail mass is <= e^-10");
  const int n = traj.samples();
  OccMeasure m;
  m.points = traj.states;
  m.controls = traj.controls;
  m.weights.resize(n);
  m.weights(0) = 0.5 * (traj.times(1) - traj.times(0)) * lambda;
  m.weights(n - 1) = 0.5 * (traj.times(n - 1) - traj.times(n - 2)) *
                     lambda * std::exp(-lambda * traj.times(n - 1));
  for (int i = 1; i + 1 < n; ++i)
    m.weights(i) = 0.5 * (traj.times(i + 1) - traj.times(i - 1)) *
                   lambda * std::exp(-lambda * traj.times(i));
  m.weights /= m.weights.sum();  // absorbs the truncated tail into the normalization
  m.kind = OccMeasure::Kind::Probability;
  m.validate();
  return m;
}

double integrate_against(const OccMeasure& m,
                         const std::function<double(const VectorXd&, double)>& q) {
  double v = 0.0;
  for (int i = 0; i < m.atoms(); ++i)
    v += m.weights(i) * q(m.points.row(i), m.controls(i));
  return v;
}

// --- metric ------------------------------------------------------------------

MetricConfig make_default_metric(const SystemSpec& system, int J) {
  if (J < 1) throw ConfigError("metric needs J >= 1");
  const int n = system.state_dim;
  VectorXd lo(n + 1), hi(n + 1);
  lo.head(n) = system.constraint.box_lo();
  hi.head(n) = system.constraint.box_hi();
  lo(n) = system.control_grid(0);
  hi(n) = system.control_grid(system.control_grid.size() - 1);
  if (hi(n) <= lo(n)) {  // single-control system: give the u axis some width
    lo(n) -= 0.5;
    hi(n) += 0.5;
  }

  // rescaled (y, u)-monomials have sup-norm 1 on the box and are Lipschitz
  int degree = 1;
  Basis b = Basis::monomials(lo, hi, degree);
  while (b.size() < J) b = Basis::monomials(lo, hi, ++degree);

  MetricConfig cfg;
  for (int j = 0; j < J; ++j) {
    cfg.names.push_back(b[j].name);
    auto value = b[j].value;
    cfg.functions.push_back([value, n](const VectorXd& y, double u) {
      VectorXd z(n + 1);
      z.head(n) = y;
      z(n) = u;
      return value(z);
    });
  }
  return cfg;
}

VectorXd metric_features(const OccMeasure& m, const MetricConfig& cfg) {
  VectorXd f(cfg.count());
  for (int j = 0; j < cfg.count(); ++j) f(j) = integrate_against(m, cfg.functions[j]);
  return f;
}

namespace {

double weighted_l1(const VectorXd& a, const VectorXd& b) {
  double d = 0.0, w = 0.5;
  for (int j = 0; j < a.size(); ++j, w *= 0.5) d += w * std::fabs(a(j) - b(j));
  return d;
}

// distance in the rho metric from feature vector `target` to the convex hull
// of `candidates`, by greedy Frank-Wolfe style fitting with a line search
double greedy_hull_distance(const VectorXd& target, const std::vector<VectorXd>& candidates,
                            int max_components) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    double d = weighted_l1(target, candidates[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  VectorXd current = candidates[best];
  for (int it = 1; it < max_components; ++it) {
    double round_best = best_d;
    VectorXd round_point;
    for (const VectorXd& cand : candidates) {
      // line search over blends of the current fit with one more component
      for (int s = 1; s <= 16; ++s) {
        double t = s / 16.0;
        VectorXd blend = (1.0 - t) * current + t * cand;
        double d = weighted_l1(target, blend);
        if (d < round_best) {
          round_best = d;
          round_point = blend;
        }
      }
    }
    if (round_best >= best_d - 1e-15) break;
    best_d = round_best;
    current = round_point;
  }
  return best_d;
}

}  // namespace

double rho_distance(const OccMeasure& m1, const OccMeasure& m2, const MetricConfig& cfg) {
  if (m1.kind != OccMeasure::Kind::Probability || m2.kind != OccMeasure::Kind::Probability)
    throw ConfigError("rho_distance is defined for probability measures");
  return weighted_l1(metric_features(m1, cfg), metric_features(m2, cfg));
}

double hausdorff_diagnostic(const std::vector<OccMeasure>& sampled,
                            const std::vector<OccMeasure>& w_feasible,
                            const MetricConfig& cfg) {
  if (sampled.empty() || w_feasible.empty())
    throw ConfigError("hausdorff_diagnostic needs two nonempty measure lists");
  constexpr int kMaxComponents = 64;

  std::vector<VectorXd> fa, fb;
  for (const auto& m : sampled) fa.push_back(metric_features(m, cfg));
  for (const auto& m : w_feasible) fb.push_back(metric_features(m, cfg));

  double worst = 0.0;
  for (const auto& f : fa) worst = std::max(worst, greedy_hull_distance(f, fb, kMaxComponents));
  for (const auto& f : fb) worst = std::max(worst, greedy_hull_distance(f, fa, kMaxComponents));
  return worst;
}

std::string measure_csv(const SystemSpec& system, const OccMeasure& m) {
  std::ostringstream out;
  for (const auto& v : system.state_vars) out << v << ",";
  out << "u,w\n";
  for (int i = 0; i < m.atoms(); ++i) {
    for (int a = 0; a < m.points.cols(); ++a) out << format_double(m.points(i, a)) << ",";
    out << format_double(m.controls(i)) << "," << format_double(m.weights(i)) << "\n";
  }
  return out.str();
}

VectorXd w_residual(const OccMeasure& m, const Basis& basis, const SystemSpec& system) {
  if (m.kind != OccMeasure::Kind::Probability)
    throw ConfigError("w_residual is defined for probability measures");
  VectorXd residual = VectorXd::Zero(basis.size());
  VectorXd f(system.state_dim), g(system.state_dim);
  for (int i = 0; i < m.atoms(); ++i) {
    const VectorXd y = m.points.row(i);
    system.f(y, m.controls(i), f);
    for (int b = 0; b < basis.size(); ++b) {
      basis[b].gradient(y, g);
      residual(b) += m.weights(i) * g.dot(f);
    }
  }
  return residual;
}

}  // namespace occlp
