#include <doctest.h>

#include <cmath>

#include "occlp/dynamics.hpp"

using namespace occlp;

namespace {

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("builtin rotation systems") {
  const SystemSpec polar = builtin_system("rotation-polar");
  CHECK(polar.state_dim == 2);
  CHECK(polar.k(vec2(1.0, 0.0), 0.3) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(polar.control_grid.size() == 11);
  CHECK(polar.control_grid(5) == 0.0);  // odd grid contains the zero control

  const SystemSpec cart = builtin_system("rotation-cartesian");
  VectorXd dy(2);
  cart.f(vec2(0.0, 0.0), 0.7, dy);
  CHECK(dy.norm() == 0.0);
  CHECK(cart.k(vec2(0.3, 0.4), 1.7) == doctest::Approx(0.65));

  CHECK_THROWS_AS(builtin_system("pendulum"), ConfigError);
}

TEST_CASE("bound validation rejects lies") {
  SystemSpec s = builtin_system("rotation-polar");
  s.M_k = 0.5;  // the true sup of |k| is > 4
  CHECK_THROWS_AS(validate_system(s), ConfigError);
}

TEST_CASE("polar constant rotation reaches theta = 0 exactly") {
  const SystemSpec polar = builtin_system("rotation-polar");
  const Trajectory traj =
      integrate(polar, vec2(0.5, 1.0), ControlSignal::constant(-1.0), 1.0, 1e-2, 0.0);
  const VectorXd end = traj.state(traj.samples() - 1);
  CHECK(std::fabs(end(0) - 0.5) <= 1e-10);
  CHECK(std::fabs(end(1) - 0.0) <= 1e-10);
}

TEST_CASE("zero field keeps the trajectory constant") {
  const SystemSpec still = make_expression_system(
      "still", {"y1", "y2"}, {"0", "0"}, "1 + y1^2", ConstraintSet::box(vec2(-1, -1), vec2(1, 1)),
      uniform_control_grid(-1, 1, 3), 0.5, 6.0, 0.1);
  const Trajectory traj = integrate(still, vec2(0.3, -0.2),
                                    ControlSignal({0.0, 0.5, 1.0}, {1.0, -1.0, 0.0}), 2.0, 0.05, 0.0);
  for (int i = 0; i < traj.samples(); ++i) {
    CHECK(traj.states(i, 0) == 0.3);
    CHECK(traj.states(i, 1) == -0.2);
  }
}

TEST_CASE("cartesian quarter turn matches the fine-step reference") {
  const SystemSpec cart = builtin_system("rotation-cartesian");
  const double T = M_PI / 2.0;
  const Trajectory coarse =
      integrate(cart, vec2(1.0, 0.0), ControlSignal::constant(1.0), T, 1e-2, 0.0);
  const Trajectory fine =
      integrate(cart, vec2(1.0, 0.0), ControlSignal::constant(1.0), T, 1e-4, 0.0);
  const VectorXd yc = coarse.state(coarse.samples() - 1);
  const VectorXd yf = fine.state(fine.samples() - 1);
  CHECK((yc - yf).norm() <= 1e-8);
  CHECK((yc - vec2(0.0, -1.0)).norm() <= 1e-8);  // u=1 rotates clockwise here
}

TEST_CASE("rotation invariant: |y|^2 is conserved") {
  const SystemSpec cart = builtin_system("rotation-cartesian");
  const ControlSignal sig({0.0, 0.7, 1.9, 3.1}, {1.0, -0.4, 0.8, -1.0});
  const Trajectory traj = integrate(cart, vec2(0.6, 0.3), sig, 5.0, 1e-2, 0.0);
  const double r2 = 0.6 * 0.6 + 0.3 * 0.3;
  for (int i = 0; i < traj.samples(); ++i) {
    const double v = traj.states(i, 0) * traj.states(i, 0) + traj.states(i, 1) * traj.states(i, 1);
    CHECK(std::fabs(v - r2) <= tol::conservation);
  }
}

TEST_CASE("polar radius is constant to 1e-12") {
  const SystemSpec polar = builtin_system("rotation-polar");
  const ControlSignal sig({0.0, 0.5, 1.5}, {1.0, -1.0, 0.5});
  const Trajectory traj = integrate(polar, vec2(0.7, 0.0), sig, 3.0, 1e-2, 0.0);
  for (int i = 0; i < traj.samples(); ++i) CHECK(std::fabs(traj.states(i, 0) - 0.7) <= 1e-12);
}

TEST_CASE("RK4 order: halving the step cuts the endpoint error ~16x") {
  const SystemSpec cart = builtin_system("rotation-cartesian");
  const VectorXd y0 = vec2(0.5, 0.3);
  const ControlSignal u = ControlSignal::constant(0.7);
  auto endpoint = [&](double h) {
    const Trajectory t = integrate(cart, y0, u, 1.0, h, 0.0);
    return VectorXd(t.state(t.samples() - 1));
  };
  const VectorXd ref = endpoint(1e-4);
  const double e1 = (endpoint(0.08) - ref).norm();
  const double e2 = (endpoint(0.04) - ref).norm();
  CHECK(e1 / e2 > 12.0);
  CHECK(e1 / e2 < 20.0);
}

TEST_CASE("integration errors") {
  const SystemSpec polar = builtin_system("rotation-polar");
  // initial state outside Y^delta
  CHECK_THROWS_AS(integrate(polar, vec2(1.2, 0.0), ControlSignal::constant(0.0), 1.0, 1e-2, 0.0),
                  NumericalError);
  // step larger than the control breakpoint spacing
  CHECK_THROWS_AS(integrate(polar, vec2(0.5, 0.0), ControlSignal({0.0, 0.005}, {1.0, -1.0}), 1.0,
                            1e-2, 0.0),
                  ConfigError);
  // running into the theta wall reports the first violating time
  CHECK_THROWS_AS(integrate(polar, vec2(0.5, 3.0), ControlSignal::constant(1.0), 1.0, 1e-2, 0.0),
                  NumericalError);
  const Trajectory flagged = integrate(polar, vec2(0.5, 3.0), ControlSignal::constant(1.0), 1.0,
                                       1e-2, 0.0, ViolationPolicy::Flag);
  CHECK_FALSE(flagged.constraint_ok);
  CHECK(flagged.first_violation_time == doctest::Approx(M_PI - 3.0 + 1e-2).epsilon(0.5));
}

TEST_CASE("trajectory increments respect the speed bound") {
  const SystemSpec cart = builtin_system("rotation-cartesian");
  const Trajectory traj =
      integrate(cart, vec2(0.9, 0.0), ControlSignal::constant(-1.0), 2.0, 1e-2, 0.0);
  for (int i = 0; i + 1 < traj.samples(); ++i) {
    const double step = (traj.state(i + 1) - traj.state(i)).norm();
    CHECK(step <= cart.M_f * traj.h_t * (1.0 + 1e-6));
  }
}

TEST_CASE("enforce_viability") {
  const SystemSpec polar = builtin_system("rotation-polar");
  CHECK(enforce_viability(polar, vec2(0.5, 0.2), 0.0) == vec2(0.5, 0.2));
  CHECK(enforce_viability(polar, vec2(1.05, 0.0), 0.1) == vec2(1.05, 0.0));
  const VectorXd repaired = enforce_viability(polar, vec2(1.2, 0.0), 0.1);
  CHECK(polar.constraint.distance(repaired) <= 0.1 + 1e-9);
  CHECK(repaired(1) == 0.0);
  CHECK_THROWS_AS(enforce_viability(polar, vec2(1.5, 0.0), 0.1), NumericalError);
}

TEST_CASE("disk distance and projection") {
  const ConstraintSet disk = ConstraintSet::disk(VectorXd::Zero(2), 1.0);
  CHECK(disk.distance(vec2(0.0, 0.0)) == doctest::Approx(-1.0));
  CHECK(disk.distance(vec2(2.0, 0.0)) == doctest::Approx(1.0));
  CHECK((disk.project(vec2(2.0, 0.0), 0.5) - vec2(1.5, 0.0)).norm() <= 1e-14);
}

TEST_CASE("expression system matches the builtin") {
  const SystemSpec builtin = builtin_system("rotation-polar");
  const SystemSpec expr = make_expression_system(
      "polar-expr", {"r", "th"}, {"0", "u"}, "1 - 2*r*cos(th) + r^2",
      ConstraintSet::box(vec2(0.0, -M_PI), vec2(1.0, M_PI)), uniform_control_grid(-1, 1, 11), 1.0,
      4.42, 0.1);
  Rng rng(11);
  VectorXd f1(2), f2(2);
  for (int i = 0; i < 50; ++i) {
    const VectorXd y = vec2(rng.uniform(0.0, 1.0), rng.uniform(-M_PI, M_PI));
    const double u = rng.uniform(-1.0, 1.0);
    builtin.f(y, u, f1);
    expr.f(y, u, f2);
    CHECK((f1 - f2).norm() <= 1e-15);
    CHECK(builtin.k(y, u) == doctest::Approx(expr.k(y, u)).epsilon(1e-14));
  }
}

TEST_CASE("partial final step covers a non-multiple horizon") {
  const SystemSpec polar = builtin_system("rotation-polar");
  const Trajectory traj =
      integrate(polar, vec2(0.5, 0.0), ControlSignal::constant(1.0), 0.123, 1e-2, 0.0);
  CHECK(traj.duration() == doctest::Approx(0.123).epsilon(1e-14));
  CHECK(traj.state(traj.samples() - 1)(1) == doctest::Approx(0.123).epsilon(1e-12));
}

TEST_CASE("cost integrals") {
  const SystemSpec polar = builtin_system("rotation-polar");
  // at (r, th) = (1, 0) with u = 0 the cost is identically zero
  const Trajectory still =
      integrate(polar, vec2(1.0, 0.0), ControlSignal::constant(0.0), 25.0, 1e-2, 0.0);
  CHECK(average_cost(polar, still) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(discounted_cost(polar, still, 0.5) == doctest::Approx(0.0).epsilon(1e-15));
  // constant cost: both averages equal it (discounted up to tail truncation)
  const SystemSpec flat = make_expression_system(
      "flat", {"y1"}, {"0"}, "3", ConstraintSet::box(VectorXd::Constant(1, -1.0), VectorXd::Ones(1)),
      uniform_control_grid(-1, 1, 3), 0.1, 3.5, 0.1);
  const Trajectory t2 =
      integrate(flat, VectorXd::Zero(1), ControlSignal::constant(0.0), 40.0, 1e-2, 0.0);
  CHECK(average_cost(flat, t2) == doctest::Approx(3.0).epsilon(1e-12));
  // trapezoid quadrature of the exponential weight leaves an O(h_t^2) error
  CHECK(discounted_cost(flat, t2, 0.5) == doctest::Approx(3.0).epsilon(1e-4));
}
