#include <cmath>

#include "doctest.h"
#include "dods/core.hpp"

using namespace dods;

TEST_CASE("validate_system examples") {
  auto ok = validate_system(DODSystem::make("y_", "x - 1", {0, 5}), 200, 3);
  CHECK(ok.ok());

  auto nodep = validate_system(DODSystem::make("y", "x - 1", {0, 5}), 200, 3);
  CHECK_FALSE(nodep.ok());
  CHECK_FALSE(nodep.find(kCheckDelayDependence)->passed);
  CHECK(nodep.find(kCheckCausal)->passed);

  auto future = validate_system(DODSystem::make("y_", "x + 1", {0, 5}), 200, 3);
  CHECK_FALSE(future.find(kCheckCausal)->passed);
  CHECK(future.find(kCheckCausal)->witness.has_value());

  auto constant = validate_system(DODSystem::make("y_", "-1", {0, 5}), 200, 3);
  CHECK_FALSE(constant.find(kCheckNonConstantDelay)->passed);
  CHECK_THROWS_AS(validate_system(DODSystem::make("y_", "x - 1", {0, 5}), 5, 1), ConfigError);
}

TEST_CASE("jet_on_manifold examples") {
  auto s = DODSystem::make("(y - y_)/(x - x_)", "x/2", {0.5, 4});
  auto j = jet_on_manifold(s, 1, 2, 1);
  CHECK(j.x_minus == 0.5);
  CHECK(j.ydot == 2.0);

  auto c = DODSystem::make("y_", "x - 1", {0, 5});
  auto k = jet_on_manifold(c, 0, 7, 3);
  CHECK(k.x_minus == -1.0);
  CHECK(k.ydot == 3.0);
  CHECK(k.y_minus == 3.0);

  auto bad = DODSystem::make("y_", "x + 1", {0, 5});
  CHECK_THROWS_AS(jet_on_manifold(bad, 0.3, 1, 2), DelayOrderError);
}

TEST_CASE("manifold jets satisfy both residuals") {
  auto s = DODSystem::make("(y - y_)/(x - x_) + sin(y_)", "x/2 - 0.1*y_^2", {0.5, 4});
  for (const auto& j : sample_manifold(s, 100, 11)) {
    auto c = j.coords();
    CHECK(s.E1().evaluate<double>(std::span<const double>(c)) == 0.0);
    CHECK(s.E2().evaluate<double>(std::span<const double>(c)) == 0.0);
  }
}

TEST_CASE("implicit delay relation resolves the largest admissible root") {
  // (x - x_)^2 = 1 has roots x - 1 and x + 1; only x - 1 is admissible.
  auto s = DODSystem::with_implicit_delay(parse("y_", {"x", "y", "x_", "y_"}),
                                          parse("(x - x_)^2 - 1", {"x", "y", "x_", "y_"}), {0, 5});
  auto j = jet_on_manifold(s, 2.0, 0.0, 1.0);
  CHECK(j.x_minus == doctest::Approx(1.0).epsilon(1e-14));
  auto p = manifold_partials(s, j);
  CHECK(p.x_minus[0] == doctest::Approx(1.0));
  CHECK(p.ydot[2] == doctest::Approx(1.0));
}
