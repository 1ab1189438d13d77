#include <doctest.h>

#include <cmath>

#include "occlp/values.hpp"

using namespace occlp;

namespace {

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

SystemSpec flat_cost_system(double c) {
  return make_expression_system("flat", {"y1", "y2"}, {"0.2*u", "-0.1*u"}, format_double(c),
                                ConstraintSet::box(vec2(-1, -1), vec2(1, 1)),
                                uniform_control_grid(-1, 1, 5), 0.3, std::fabs(c) + 1.0, 0.1);
}

double closed_form_vt(double r, double th, double T) {
  return (1.0 - r) * (1.0 - r) + (2.0 * r / T) * std::fabs(th - std::sin(th));
}

}  // namespace

TEST_CASE("grid flattening and multilinear interpolation") {
  GridSpec g;
  g.lo = vec2(0.0, -1.0);
  g.hi = vec2(1.0, 1.0);
  g.nodes = VectorXi::Constant(2, 5);
  CHECK(g.node_count() == 25);
  for (int i = 0; i < 25; ++i) CHECK(g.flatten(g.unflatten(i)) == i);

  // a table equal to an affine function is interpolated exactly
  ValueTable t;
  t.grid = g;
  t.values.resize(25);
  t.valid.assign(25, 1);
  for (int i = 0; i < 25; ++i) {
    const VectorXd y = g.node(i);
    t.values(i) = 2.0 + 3.0 * y(0) - 0.5 * y(1);
  }
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const VectorXd y = vec2(rng.uniform(0.0, 1.0), rng.uniform(-1.0, 1.0));
    CHECK(t.interpolate(y) == doctest::Approx(2.0 + 3.0 * y(0) - 0.5 * y(1)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(t.interpolate(vec2(1.5, 0.0)), NumericalError);
  t.valid[12] = 0;  // poke a hole in the middle
  CHECK_FALSE(t.can_interpolate(vec2(0.55, 0.05)));
  CHECK(t.can_interpolate(vec2(0.1, -0.9)));
}

TEST_CASE("constant cost gives a constant Cesaro table") {
  const SystemSpec flat = flat_cost_system(2.5);
  const GridSpec grid = make_state_grid(flat, 0.0, 9);
  const ValueTable table = cesaro_value_dp(flat, 2.0, 0.0, grid, 1e-2);
  for (int i = 0; i < grid.node_count(); ++i)
    if (table.valid[i]) CHECK(table.values(i) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("rotation example: DP matches the closed-form V_T") {
  const SystemSpec polar = builtin_system("rotation-polar");
  const GridSpec grid = make_state_grid(polar, 0.0, 41);
  const ValueTable table = cesaro_value_dp(polar, 10.0, 0.0, grid, 1e-2);
  const double got = table.interpolate(vec2(0.5, 1.0));
  CHECK(std::fabs(got - closed_form_vt(0.5, 1.0, 10.0)) <= 5e-2);
  // spot-check a couple of other states
  CHECK(std::fabs(table.interpolate(vec2(0.75, -1.5)) - closed_form_vt(0.75, -1.5, 10.0)) <= 5e-2);
  CHECK(std::fabs(table.interpolate(vec2(1.0, 0.0)) - 0.0) <= 5e-2);
}

TEST_CASE("one-step DP equals the exhaustive control minimum") {
  // toy 1-D system on 3 nodes with a one-step horizon: the DP value is
  // min_u k(y, u) because the terminal value is zero
  const SystemSpec toy = make_expression_system(
      "toy", {"y1"}, {"u"}, "y1^2 + 0.3*u + 0.5", ConstraintSet::box(VectorXd::Constant(1, -1.0),
                                                                     VectorXd::Ones(1)),
      uniform_control_grid(-1, 1, 7), 1.0, 2.5, 0.1);
  GridSpec grid;
  grid.lo = VectorXd::Constant(1, -1.0);
  grid.hi = VectorXd::Ones(1);
  grid.nodes = VectorXi::Constant(1, 3);
  const double h = 0.5;
  const ValueTable table = cesaro_value_dp(toy, h, 0.0, grid, h);
  for (int i = 0; i < 3; ++i) {
    const VectorXd y = grid.node(i);
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < toy.control_grid.size(); ++j) {
      const double u = toy.control_grid(j);
      const VectorXd img = rk4_step(toy, y, u, h);
      if (toy.constraint.distance(img) > 1e-12) continue;  // same admissibility rule
      best = std::min(best, toy.k(y, u));
    }
    CHECK(table.values(i) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("DP agrees with the brute-force enumeration oracle") {
  // short horizons need a finer grid: the interpolation error of the backward
  // recursion scales with the curvature of V_T, which grows as T shrinks
  const SystemSpec polar = builtin_system("rotation-polar", 3);  // controls {-1, 0, 1}
  const GridSpec grid = make_state_grid(polar, 0.0, 161);
  const ValueTable table = cesaro_value_dp(polar, 2.0, 0.0, grid, 1e-2);
  Rng rng(2024);
  for (int trial = 0; trial < 8; ++trial) {
    const VectorXd y0 = vec2(0.1 + 0.2 * double(rng.below(5)), rng.uniform(-2.0, 2.0));
    const double oracle = brute_force_value(polar, y0, 2.0, 1e-2, 3);
    const double dp = table.interpolate(y0);
    CHECK_MESSAGE(std::fabs(dp - oracle) <= 5e-2, "y0 = (", y0(0), ", ", y0(1), ") dp = ", dp,
                  " oracle = ", oracle);
  }
}

TEST_CASE("brute force with constant cost and with a single control") {
  const SystemSpec flat = flat_cost_system(1.75);
  CHECK(brute_force_value(flat, vec2(0.0, 0.0), 1.0, 1e-2, 3) ==
        doctest::Approx(1.75).epsilon(1e-12));
  CHECK_THROWS_AS(brute_force_value(flat, vec2(0.0, 0.0), 1.0, 1e-2, 40), ConfigError);

  const SystemSpec polar = builtin_system("rotation-polar", 1);  // only u = 0
  const Trajectory traj =
      integrate(polar, vec2(0.5, 1.0), ControlSignal::constant(0.0), 2.0, 1e-2, 0.0);
  CHECK(brute_force_value(polar, vec2(0.5, 1.0), 2.0, 1e-2, 2) ==
        doctest::Approx(average_cost(polar, traj)).epsilon(1e-12));
}

TEST_CASE("constant cost gives a constant Abel table") {
  const SystemSpec flat = flat_cost_system(0.75);
  const GridSpec grid = make_state_grid(flat, 0.0, 9);
  const ValueTable table = abel_value_dp(flat, 0.5, 0.0, grid, 1e-2);
  for (int i = 0; i < grid.node_count(); ++i)
    if (table.valid[i]) CHECK(table.values(i) == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("Abel value vanishes at the zero-cost equilibrium") {
  const SystemSpec polar = builtin_system("rotation-polar");
  const GridSpec grid = make_state_grid(polar, 0.0, 41);
  for (double lambda : {0.5, 0.1}) {
    const ValueTable table = abel_value_dp(polar, lambda, 0.0, grid, 1e-2);
    CHECK(table.interpolate(vec2(1.0, 0.0)) <= 1e-6);
    CHECK(table.interpolate(vec2(1.0, 0.0)) >= -1e-12);
  }
}

TEST_CASE("Abel value matches the known optimal policy") {
  // steer to theta = 0 at full speed, then stay: the optimal process for
  // the rotation example; its discounted cost is an upper bound that the
  // DP table should match to interpolation accuracy
  const SystemSpec polar = builtin_system("rotation-polar");
  const GridSpec grid = make_state_grid(polar, 0.0, 41);
  const double lambda = 0.5;
  const ValueTable table = abel_value_dp(polar, lambda, 0.0, grid, 1e-2);
  const Trajectory opt = integrate(polar, vec2(0.5, 1.0), ControlSignal({0.0, 1.0}, {-1.0, 0.0}),
                                   10.0 / lambda, 1e-2, 0.0);
  const double reference = discounted_cost(polar, opt, lambda);
  CHECK(std::fabs(table.interpolate(vec2(0.5, 1.0)) - reference) <= 2e-2);
}

TEST_CASE("periodic orbit averages") {
  const SystemSpec polar = builtin_system("rotation-polar");

  PeriodicOrbit eq;
  eq.period = 1.0;
  eq.control = ControlSignal::constant(0.0);
  eq.start = vec2(0.3, 0.0);
  CHECK(periodic_orbit_average(polar, eq) == doctest::Approx(0.49).epsilon(1e-12));

  // full rotation at r = 0.5 from theta = -pi: average of 1.25 - cos(theta)
  PeriodicOrbit rot;
  rot.period = 2.0 * M_PI;
  rot.control = ControlSignal::constant(1.0);
  rot.start = vec2(0.5, -M_PI);
  CHECK(periodic_orbit_average(polar, rot) == doctest::Approx(1.25).epsilon(1e-4));

  const SystemSpec flat = flat_cost_system(3.25);
  PeriodicOrbit still;
  still.period = 2.0;
  still.control = ControlSignal({0.0, 1.0}, {1.0, -1.0});  // drifts out and back
  still.start = vec2(0.0, 0.0);
  CHECK(periodic_orbit_average(flat, still) == doctest::Approx(3.25).epsilon(1e-12));

  PeriodicOrbit broken = eq;
  broken.control = ControlSignal::constant(0.5);  // theta drifts, orbit does not close
  CHECK_THROWS_AS(periodic_orbit_average(polar, broken), NumericalError);
}

TEST_CASE("vper_search over equilibria and rotations") {
  const SystemSpec polar = builtin_system("rotation-polar");
  const VectorXd y0 = vec2(0.5, 1.0);

  PeriodicOrbit eq;
  eq.period = 1.0;
  eq.control = ControlSignal::constant(0.0);
  eq.start = vec2(0.5, 0.0);
  eq.reach_control = ControlSignal::constant(-1.0);  // -sgn(theta0)
  eq.reach_time = 1.0;                               // |theta0|

  PeriodicOrbit osc;  // 2-periodic oscillation through y0 itself
  osc.period = 2.0;
  osc.control = ControlSignal({0.0, 1.0}, {-1.0, 1.0});
  osc.start = y0;

  CHECK(vper_search(polar, y0, {eq}) == doctest::Approx(0.25).epsilon(1e-12));
  const double with_osc = vper_search(polar, y0, {eq, osc});
  CHECK(with_osc == doctest::Approx(0.25).epsilon(1e-12));  // min picks the equilibrium

  PeriodicOrbit unreachable = eq;
  unreachable.start = vec2(0.9, 0.0);  // the reach control cannot change r
  CHECK_THROWS_AS(vper_search(polar, y0, {unreachable}), NumericalError);
  CHECK_THROWS_AS(vper_search(polar, y0, {}), ConfigError);
}

TEST_CASE("DPP gradient diagnostic") {
  const SystemSpec polar = builtin_system("rotation-polar");
  const GridSpec grid = make_state_grid(polar, 0.0, 41);
  ValueTable table = cesaro_value_dp(polar, 10.0, 0.0, grid, 1e-2);

  const DppReport ok = dpp_gradient_diagnostic(table, polar);
  CHECK(ok.pass);
  CHECK(ok.min_margin >= -0.1);

  // test of the test: a spike in the table must trip the diagnostic
  VectorXi mid = grid.unflatten(0);
  mid(0) = 20;
  mid(1) = 20;
  table.values(grid.flatten(mid)) += 5.0;
  const DppReport bad = dpp_gradient_diagnostic(table, polar);
  CHECK_FALSE(bad.pass);

  // trivially constant table passes with margin exactly 2 M_k / T
  const SystemSpec flat = flat_cost_system(1.0);
  const GridSpec fgrid = make_state_grid(flat, 0.0, 9);
  const ValueTable ftable = cesaro_value_dp(flat, 2.0, 0.0, fgrid, 1e-2);
  const DppReport fr = dpp_gradient_diagnostic(ftable, flat);
  CHECK(fr.pass);
  CHECK(fr.min_margin == doctest::Approx(2.0 * flat.M_k / 2.0).epsilon(1e-9));
}

TEST_CASE("delta relaxation only lowers the value") {
  const SystemSpec polar = builtin_system("rotation-polar");
  const GridSpec g0 = make_state_grid(polar, 0.0, 41);
  const GridSpec g1 = make_state_grid(polar, 0.1, 41);
  const ValueTable v0 = cesaro_value_dp(polar, 5.0, 0.0, g0, 1e-2);
  const ValueTable v1 = cesaro_value_dp(polar, 5.0, 0.1, g1, 1e-2);
  int compared = 0;
  for (int i = 0; i < g0.node_count(); ++i) {
    if (!v0.valid[i]) continue;
    const VectorXd y = g0.node(i);
    // the rounded corners of Y^delta exclude a few stencils near the box corners
    if (!v1.can_interpolate(y)) continue;
    CHECK(v1.interpolate(y) <= v0.values(i) + 5e-2);
    ++compared;
  }
  CHECK(compared > 1600);  // nearly every node takes part
}
