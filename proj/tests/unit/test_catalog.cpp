#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "dods/catalog.hpp"
#include "dods/errors.hpp"
#include "dods/numerics.hpp"
#include "dods/symmetry.hpp"

using namespace dods;

namespace {
double at(const VectorField& f, bool xi, double x, double y) { return (xi ? f.xi : f.eta)({x, y}); }
}  // namespace

TEST_CASE("algebra lookups") {
  const auto a22 = find_algebra("A2,2").basis();
  REQUIRE(a22.size() == 2);
  CHECK(at(a22[0], true, 0.3, 0.7) == 0.0);
  CHECK(at(a22[0], false, 0.3, 0.7) == 1.0);
  CHECK(at(a22[1], true, 0.3, 0.7) == doctest::Approx(0.3));
  CHECK(at(a22[1], false, 0.3, 0.7) == doctest::Approx(0.7));

  const auto a312 = find_algebra("A3,12").basis();
  REQUIRE(a312.size() == 3);
  CHECK(at(a312[0], true, 2, 3) == doctest::Approx(5));
  CHECK(at(a312[0], false, 2, 3) == doctest::Approx(6));

  int dim4 = 0;
  for (const auto& a : list_algebras()) dim4 += a.dim == 4;
  CHECK(dim4 == 22);
  CHECK(find_algebra("so31").basis().size() == 6);
  CHECK(find_algebra("A3,8alt").dim == 3);
  CHECK(find_algebra("A3,10alt").dim == 3);
  CHECK(find_algebra("A4,4").flagged);
  CHECK_THROWS_AS(find_algebra("A9,9"), UnknownFamily);
}

TEST_CASE("basis dimension matches the declared dimension") {
  for (const auto& a : list_algebras()) {
    CAPTURE(a.id);
    CHECK(static_cast<int>(a.basis().size()) == a.dim);
  }
}

TEST_CASE("invariant_family examples") {
  auto s = invariant_family("A2,4", {{"f", "z^2"}, {"g", "1 + w/2"}});
  // yd = (dy/dx)^2 with dx = 1 + dy/2: at (x, y, y_) = (3, 0.5, 0.1), dy = 0.4, dx = 1.2
  auto j = jet_on_manifold(s, 3, 0.5, 0.1);
  CHECK(j.x_minus == doctest::Approx(1.8));
  CHECK(j.ydot == doctest::Approx((0.4 / 1.2) * (0.4 / 1.2)));

  s = invariant_family("A3,2", {{"a", "2"}, {"C1", "4/3"}, {"C2", "1"}});
  j = jet_on_manifold(s, 5, 4, 0);
  CHECK(j.x_minus == doctest::Approx(3));  // dx = sqrt(4)
  CHECK(j.ydot == doctest::Approx(4.0 / 3.0 * 4 / 2));

  CHECK_THROWS_AS(invariant_family("A3,2", {{"a", "1"}, {"C1", "4/3"}, {"C2", "1"}}), DegenerateFamilyError);
  CHECK_THROWS_AS(invariant_family("A3,2", {{"a", "0"}}), ParamError);
  CHECK_THROWS_AS(invariant_family("A3,6", {{"b", "-1"}}), ParamError);
  CHECK_THROWS_AS(invariant_family("A3,8alt", {{"C2", "0"}}), ParamError);
  CHECK_THROWS_AS(invariant_family("A2,4", {{"h", "1"}}), ParamError);
  CHECK_THROWS_AS(invariant_family("A2,4", {{"f", "z^"}}), ParamError);
  CHECK_THROWS_AS(invariant_family("A4,1"), UnknownFamily);
}

TEST_CASE("elementary invariant examples") {
  CHECK(elementary_invariants("A3,4")[0](JetPoint{1, 1, 0, 0, 2}) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(elementary_invariants("A2,2")[0](JetPoint{1, 2, 0.5, 1, 2}) == doctest::Approx(0.5));
  CHECK(elementary_invariants("A3,8")[0](JetPoint{2, 3, 1, 1, 1}) == doctest::Approx(2));
}

TEST_CASE("every family instance validates and its algebra acts by symmetries") {
  for (const auto& fam : list_families()) {
    CAPTURE(fam.id);
    const auto sys = invariant_family(fam.id);
    const auto rep = validate_system(sys);
    CHECK(rep.ok());
    for (const auto& X : family_basis(fam.id)) {
      CAPTURE(X.label);
      const auto v = is_symmetry(X, sys, 200, 1, 1e-8);
      CHECK(v.samples == 200);
      CHECK(v.verdict);
      CHECK(v.max_residual <= 1e-8);
    }
  }
}

TEST_CASE("elementary invariants are annihilated by the prolonged algebra") {
  for (const auto& fam : list_families()) {
    CAPTURE(fam.id);
    const auto basis = family_basis(fam.id);
    const auto inv = elementary_invariants(fam.id);
    CHECK(invariant_count(basis) == static_cast<int>(inv.size()));
    // Jets near the family box with x_ below x; invariants must be finite there.
    HaltonSampler h(5, 42);
    const auto& b = fam.box;
    int used = 0;
    double worst = 0;
    for (int t = 0; t < 4000 && used < 200; ++t) {
      auto u = h.next();
      JetPoint j{fam.domain.lo + u[0] * fam.domain.width(), b.y.lo + u[1] * b.y.width(), 0,
                 b.y_minus.lo + u[3] * b.y_minus.width(), -2 + 4 * u[4]};
      j.x_minus = j.x - (0.1 + 0.9 * u[2]);
      bool finite = true;
      for (const auto& I : inv) finite = finite && std::isfinite(I(j));
      if (!finite) continue;
      ++used;
      for (const auto& X : basis)
        for (const auto& I : inv) {
          const double scale = 1.0 + std::abs(I(j));
          worst = std::max(worst, std::abs(apply_prolonged(X, I.expr, j)) / scale);
        }
    }
    CHECK(used == 200);
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("dimension-3 invariants are independent in (x_, yd)") {
  for (const auto& fam : list_families()) {
    if (find_algebra(fam.algebra).dim != 3) continue;
    CAPTURE(fam.id);
    const auto sys = invariant_family(fam.id);
    const auto inv = elementary_invariants(fam.id);
    REQUIRE(inv.size() == 2);
    const auto jets = sample_manifold(sys, 20, 3);
    int full = 0;
    for (const auto& j : jets) {
      Eigen::Matrix2d J;
      for (int r = 0; r < 2; ++r) {
        const auto c = j.coords();
        const double dxm[5] = {0, 0, 1, 0, 0}, dyd[5] = {0, 0, 0, 0, 1};
        J(r, 0) = directional(inv[r].expr, std::span<const double>(c), std::span<const double>(dxm, 5)).partial;
        J(r, 1) = directional(inv[r].expr, std::span<const double>(c), std::span<const double>(dyd, 5)).partial;
      }
      full += numerical_rank(J, 1e-9) == 2;
    }
    CHECK(full == static_cast<int>(jets.size()));
  }
}

TEST_CASE("catalog export") {
  const auto j = export_catalog();
  CHECK(j["schema_version"] == 1);
  CHECK(j["algebras"].size() == list_algebras().size());
  CHECK(j["families"].size() == list_families().size());
  CHECK(list_families().size() >= 12);
}
