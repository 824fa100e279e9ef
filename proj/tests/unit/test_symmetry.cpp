#include <doctest.h>

#include <cmath>
#include <random>

#include "dods/errors.hpp"
#include "dods/symmetry.hpp"

using namespace dods;

namespace {
const JetPoint kJet{1, 2, 0.5, 1, 3};

void check_prolonged(const ProlongedField& p, std::array<double, 5> want) {
  const auto c = p.coords();
  for (int i = 0; i < 5; ++i) CHECK(c[i] == doctest::Approx(want[i]).epsilon(1e-14));
}

std::vector<VectorField> fields(std::initializer_list<std::pair<const char*, const char*>> l) {
  std::vector<VectorField> out;
  for (auto& [a, b] : l) out.push_back(VectorField::parse(a, b));
  return out;
}
}  // namespace

TEST_CASE("prolongation coefficients") {
  check_prolonged(prolong(VectorField::parse("0", "y"), kJet), {0, 2, 0, 1, 3});
  check_prolonged(prolong(VectorField::parse("x", "y"), kJet), {1, 2, 0.5, 1, 0});
  check_prolonged(prolong(VectorField::parse("x^2", "x*y"), kJet), {1, 2, 0.25, 0.5, -1});
}

TEST_CASE("prolongation is linear in the field") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2, 2);
  const auto X1 = VectorField::parse("x^2 + sin(y)", "x*y");
  const auto X2 = VectorField::parse("exp(x/3)", "y^2 - x");
  for (int t = 0; t < 50; ++t) {
    const double a = u(rng), b = u(rng);
    const JetPoint j{u(rng), u(rng), u(rng), u(rng), u(rng)};
    const auto c = prolong(linear_combination({a, b}, {X1, X2}), j).coords();
    const auto c1 = prolong(X1, j).coords(), c2 = prolong(X2, j).coords();
    for (int i = 0; i < 5; ++i) CHECK(c[i] == doctest::Approx(a * c1[i] + b * c2[i]).epsilon(1e-12));
  }
}

TEST_CASE("determining residuals") {
  const auto sys = DODSystem::make("(y - y_)/(x - x_)", "x/2", {0.1, 5});
  const auto jet = jet_on_manifold(sys, 1, 2, 1);
  auto r = determining_residual(VectorField::parse("x", "y"), sys, jet);
  CHECK(std::abs(r.r1) < 1e-14);
  CHECK(std::abs(r.r2) < 1e-14);
  r = determining_residual(VectorField::parse("1", "0"), sys, jet);
  CHECK(r.r2 == doctest::Approx(0.5));

  const auto lin = DODSystem::make("y_", "x - 1", {0, 5});
  for (double x : {0.3, 1.7, 4.0}) {
    r = determining_residual(VectorField::parse("1", "0"), lin, jet_on_manifold(lin, x, -1.2, 0.8));
    CHECK(std::abs(r.r1) < 1e-14);
    CHECK(std::abs(r.r2) < 1e-14);
  }
  JetPoint off = jet;
  off.ydot += 1e-6;
  CHECK_THROWS_AS(determining_residual(VectorField::parse("x", "y"), sys, off), ManifoldError);
}

TEST_CASE("weak and strong invariance verdicts") {
  const auto lin = DODSystem::make("y_", "x - 1", {0, 5});
  auto v = is_symmetry(VectorField::parse("0", "y"), lin);
  CHECK(v.verdict);
  CHECK(v.max_residual < 1e-12);
  CHECK(v.samples == 200);

  const auto sys = DODSystem::make("(y - y_)/(x - x_)", "x/2", {0.1, 5});
  v = is_symmetry(VectorField::parse("x", "y"), sys);
  CHECK(v.verdict);
  CHECK(v.max_residual < 1e-12);

  const auto pert = sys.with_rhs_shift(parse("0.1*y", state_variables()));
  v = is_symmetry(VectorField::parse("x", "y"), pert);
  CHECK_FALSE(v.verdict);
  // Along x d/dx + y d/dy the shift 0.1 y contributes 0.1 y to r1.
  CHECK(v.max_residual > 0.1);
  CHECK(v.max_residual < 0.1 * 10 + 1e-9);

  // Strong invariance: translation leaves ẏ - y_ and x_ - x + 1 unchanged off the manifold.
  v = is_symmetry(VectorField::parse("1", "0"), lin, 200, 1, 1e-9, InvarianceMode::Strong);
  CHECK(v.verdict);
  v = is_symmetry(VectorField::parse("x", "y"), sys, 200, 1, 1e-9, InvarianceMode::Strong);
  CHECK_FALSE(v.verdict);  // only weakly invariant: pr X (x_ - x/2) = x_ - x/2 ≠ 0 off M

  CHECK_THROWS_AS(is_symmetry(VectorField::parse("1", "0"), lin, 10), ConfigError);
  auto flat = lin;
  flat.box.y = {1, 1};
  CHECK_THROWS_AS(is_symmetry(VectorField::parse("1", "0"), flat, 50, 1, 1e-9, InvarianceMode::Strong), ConfigError);
}

TEST_CASE("rank of Z and invariant counts") {
  const JetPoint generic{0.7, -1.3, -0.4, 2.1, 0.9};
  const auto a11 = fields({{"0", "1"}});
  const auto a22 = fields({{"0", "1"}, {"x", "y"}});
  const auto a24 = fields({{"1", "0"}, {"0", "1"}});
  const auto a413 = fields({{"1", "0"}, {"0", "1"}, {"x", "y"}, {"y", "-x"}});
  CHECK(rank_Z(a11, generic) == 1);
  CHECK(rank_Z(a22, generic) == 2);
  CHECK(rank_Z(a413, generic) == 4);
  CHECK(invariant_count(a11) == 4);
  CHECK(invariant_count(a24) == 3);
  CHECK(invariant_count(a413) == 1);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 10; ++t) {
    std::vector<VectorField> mixed;
    for (std::size_t i = 0; i < a413.size(); ++i) {
      std::vector<double> c(a413.size());
      for (auto& v : c) v = u(rng);
      c[i] += 3.0;  // diagonally dominant, hence invertible
      mixed.push_back(linear_combination(c, a413));
    }
    CHECK(rank_Z(mixed, generic) == rank_Z(a413, generic));
  }
}

TEST_CASE("flows") {
  auto p = flow(VectorField::parse("0", "y"), 1.0, {1, 2});
  CHECK(p.first == doctest::Approx(1).epsilon(1e-12));
  CHECK(p.second == doctest::Approx(2 * std::exp(1.0)).epsilon(1e-12));
  p = flow(VectorField::parse("1", "0"), 0.7, {1, 2});
  CHECK(p.first == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(p.second == doctest::Approx(2).epsilon(1e-12));
  const auto proj = VectorField::parse("x^2", "x*y");
  p = flow(proj, 0.1, {1, 2});
  CHECK(p.first == doctest::Approx(1 / 0.9).epsilon(1e-12));
  CHECK(p.second == doctest::Approx(2 / 0.9).epsilon(1e-12));
  p = flow(proj, -0.3, {1, 2});
  CHECK(p.first == doctest::Approx(1 / 1.3).epsilon(1e-12));

  // slope action of the projective flow: y/x is preserved, so slope 2 stays 2
  auto j = flow_with_slope(proj, 0.1, 1, 2, 2);
  CHECK(j.slope == doctest::Approx(2).epsilon(1e-10));
  // scaling y by e^eps scales slopes
  j = flow_with_slope(VectorField::parse("0", "y"), 0.5, 1, 2, 3);
  CHECK(j.slope == doctest::Approx(3 * std::exp(0.5)).epsilon(1e-12));

  CHECK_THROWS_AS(flow(VectorField::parse("0", "y^2"), 1.0, {0, 2}), BlowUpError);
}

TEST_CASE("one-parameter group law") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const auto X = VectorField::parse("1 + y^2/4", "sin(x) + 0.3*y");
  for (int t = 0; t < 20; ++t) {
    const double e1 = u(rng), e2 = u(rng);
    const std::pair<double, double> q{u(rng), u(rng)};
    const auto a = flow(X, e1, flow(X, e2, q));
    const auto b = flow(X, e1 + e2, q);
    CHECK(std::abs(a.first - b.first) < 1e-10);
    CHECK(std::abs(a.second - b.second) < 1e-10);
  }
}

TEST_CASE("transformed solutions") {
  const auto sys = DODSystem::make("y_", "x - 1", {0, 3});
  const auto sol = solve(sys, parse("1", {"x"}), {-1, 0}, 3);
  REQUIRE(residual(sol, sys) < 1e-8);

  auto t = transform_solution(VectorField::parse("0", "y"), std::log(2.0), sol);
  for (double x : {-0.5, 0.5, 1.5, 2.5}) CHECK(t.evaluate(x).first == doctest::Approx(2 * sol.evaluate(x).first).epsilon(1e-10));
  CHECK(residual(t, sys) <= 1e-8);

  t = transform_solution(VectorField::parse("1", "0"), 1.0, sol);
  CHECK(t.start == doctest::Approx(1.0));
  CHECK(t.evaluate(3.0).first == doctest::Approx(sol.evaluate(2.0).first).epsilon(1e-10));
  CHECK(residual(t, sys) <= 1e-8);

  t = transform_solution(VectorField::parse("x", "0"), 0.5, sol);
  CHECK(residual(t, sys) > 1e-3);

  CHECK_THROWS_AS(transform_solution(VectorField::parse("-y", "0"), 1.0, sol).x.size(), NonGraphError);
}
