#include <cmath>
#include <sstream>

#include "doctest.h"
#include "dods/solver.hpp"

using namespace dods;

namespace {

double lambert_omega() {
  double w = 0.5;
  for (int i = 0; i < 50; ++i) w -= (w * std::exp(w) - 1.0) / (std::exp(w) * (1.0 + w));
  return w;
}

// y on [0, 3] for ẏ = y(x-1), y = 1 on [-1, 0], by hand method of steps.
double constant_delay_oracle(double x) {
  if (x <= 0) return 1.0;
  if (x <= 1) return 1.0 + x;
  if (x <= 2) return 1.0 + x + (x - 1) * (x - 1) / 2;
  const double u = x - 2;
  return 3.5 + 2 * u + u * u / 2 + u * u * u / 6;
}

}  // namespace

TEST_CASE("constant delay oracle") {
  auto sys = DODSystem::make("y_", "x - 1", {0, 3});
  auto sol = solve(sys, parse("1", {"x"}), {-1, 0}, 2.0);
  CHECK(std::abs(sol.evaluate(1.0).first - 2.0) <= 1e-8);
  CHECK(std::abs(sol.evaluate(1.5).first - 2.625) <= 1e-8);
  CHECK(std::abs(sol.evaluate(2.0).first - 3.5) <= 1e-8);

  auto at0 = sol.evaluate(0.0);
  CHECK(at0.first == 1.0);
  CHECK(at0.second == doctest::Approx(1.0));
  auto before = sol.evaluate(-0.5);
  CHECK(before.first == 1.0);
  CHECK(before.second == 0.0);
  CHECK_THROWS_AS(sol.evaluate(5.0), OutOfRange);
  CHECK(residual(sol, sys, 100) <= 1e-8);
}

TEST_CASE("breakpoints of a constant delay are x0 + n") {
  auto sys = DODSystem::make("y_", "x - 1", {0, 3});
  auto sol = solve(sys, parse("1", {"x"}), {-1, 0}, 3.0);
  REQUIRE(sol.breakpoints.size() == 4);
  for (int n = 0; n <= 3; ++n) CHECK(std::abs(sol.breakpoints[static_cast<std::size_t>(n)] - n) <= 1e-10);
  for (double x : {0.3, 1.7, 2.9}) CHECK(std::abs(sol.evaluate(x).first - constant_delay_oracle(x)) <= 1e-9);
  for (std::size_t n = 1; n + 1 < sol.breakpoints.size(); ++n) {
    const double b = sol.breakpoints[n];
    const double left = sol.evaluate(b - 1e-13).first, right = sol.evaluate(b).first;
    CHECK(std::abs(left - right) <= 1e-10);
  }
}

TEST_CASE("solution-dependent delay oracle") {
  auto sys = DODSystem::make("(y - y_)/(x - x_)", "x/2", {0.5, 2});
  auto sol = solve(sys, parse("x", {"x"}), {0.5, 1}, 2.0);
  CHECK(std::abs(sol.evaluate(2.0).first - 2.0) <= 1e-8);
  CHECK(residual(sol, sys, 100) <= 1e-8);
}

TEST_CASE("Lambert-W exponential is preserved") {
  const double omega = lambert_omega();
  CHECK(omega == doctest::Approx(0.5671432904).epsilon(1e-10));
  auto sys = DODSystem::make("y_", "x - 1", {0, 3});
  auto phi = Expr::parse("exp(w*x)", {"x", "w"}).bind({{"w", omega}});
  auto sol = solve(sys, phi, {-1, 0}, 3.0);
  const double exact = std::exp(3 * omega);
  CHECK(std::abs(sol.evaluate(3.0).first - exact) / exact <= 1e-6);
}

TEST_CASE("causality and compatibility errors") {
  CHECK_THROWS_AS(solve(DODSystem::make("y_", "x + 1", {0, 3}), parse("1", {"x"}), {-1, 0}, 1.0), CausalityError);
  CHECK_THROWS_AS(solve(DODSystem::make("y_", "x - 1", {0, 3}), parse("1", {"x"}), {-2, 0}, 1.0), CompatibilityError);
  SolverOptions forced;
  forced.force = true;
  // Negative control: x^2 on a mismatched interval gives a large residual near x0.
  auto sys = DODSystem::make("y_", "x - 1", {0, 3});
  auto sol = solve(sys, parse("x^2", {"x"}), {-1.5, 0}, 1.0, forced);
  CHECK_FALSE(sol.diagnostics.warnings.empty());
}

TEST_CASE("halving the step cap reduces the residual") {
  // On [0, 3] the exact solution is piecewise cubic and the dense output is
  // exact, so the run is extended to where higher-degree pieces appear.
  auto sys = DODSystem::make("y_", "x - 1", {0, 6});
  SolverOptions coarse;
  coarse.max_step = 0.1;
  SolverOptions fine = coarse;
  fine.max_step = 0.05;
  const double r1 = residual(solve(sys, parse("1", {"x"}), {-1, 0}, 6.0, coarse), sys, 200);
  const double r2 = residual(solve(sys, parse("1", {"x"}), {-1, 0}, 6.0, fine), sys, 200);
  CHECK(r1 / r2 >= 4.0);
}

TEST_CASE("causality of resolved delays along a state-dependent run") {
  auto sys = DODSystem::make("-y_", "x - 1 - 0.1*y^2/(1 + y^2)", {0, 4});
  // g(0, 1, 1) = -1.05 makes the initial data compatible.
  auto sol = solve(sys, parse("1", {"x"}), {-1.05, 0}, 4.0);
  CHECK(sol.x_end() == doctest::Approx(4.0));
  CHECK(residual(sol, sys, 200) <= 1e-8);
  for (std::size_t n = 1; n < sol.breakpoints.size(); ++n) CHECK(sol.breakpoints[n] > sol.breakpoints[n - 1]);
}

TEST_CASE("csv export") {
  auto sys = DODSystem::make("y_", "x - 1", {0, 3});
  auto sol = solve(sys, parse("1", {"x"}), {-1, 0}, 2.0);
  std::ostringstream os;
  write_csv(sol, os);
  const auto text = os.str();
  CHECK(text.rfind("x,y,ydot,segment_index\n", 0) == 0);
  const auto pos = text.find("\n2,");
  REQUIRE(pos != std::string::npos);
  CHECK(std::abs(std::stod(text.substr(pos + 3)) - 3.5) <= 1e-8);
  CHECK(breakpoints_json(sol).find("\"schema_version\": 1") != std::string::npos);
}
