// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "dods/catalog.hpp"
#include "dods/errors.hpp"
#include "dods/invariant_solutions.hpp"
#include "dods/linear.hpp"
#include "dods/solver.hpp"
#include "dods/symmetry.hpp"

using namespace dods;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int n, const char* title, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s %2d  %s  (%.2fs)%s\n", v.pass ? "PASS" : "FAIL", n, title, secs, v.detail.str().c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

double newton_omega() {
  double w = 0.5;
  for (int i = 0; i < 60; ++i) w -= (w * std::exp(w) - 1.0) / (std::exp(w) * (1.0 + w));
  return w;
}

std::string random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 12);
  std::uniform_real_distribution<double> lit(-2.0, 2.0);
  auto sub = [&] { return random_expr(rng, depth - 1); };
  switch (pick(rng)) {
    case 0: return "x";
    case 1: return "y";
    case 2: return std::to_string(lit(rng));
    case 3: return "(" + sub() + " + " + sub() + ")";
    case 4: return "(" + sub() + " - " + sub() + ")";
    case 5: return "(" + sub() + " * " + sub() + ")";
    case 6: return "(" + sub() + ") / (1.5 + (" + sub() + ")^2)";
    case 7: return "sin(" + sub() + ")";
    case 8: return "cos(" + sub() + ")";
    case 9: return "atan(" + sub() + ")";
    case 10: return "sqrt(1 + (" + sub() + ")^2)";
    case 11: return "log(2 + sin(" + sub() + "))";
    default: return "(" + sub() + ")^" + std::to_string(1 + static_cast<int>(rng() % 3));
  }
}

std::string sci(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2e", v);
  return b;
}

}  // namespace

int main() {
  criterion(1, "catalog annihilation", [](Verdict& v) {
    int instances = 0;
    double worst = 0;
    for (const auto& fam : list_families()) {
      const auto sys = invariant_family(fam.id);
      const auto basis = family_basis(fam.id);
      const auto inv = elementary_invariants(fam.id);
      const auto jets = sample_manifold(sys, 200, 11);
      v.require(jets.size() == 200, fam.id + " jet sample");
      for (const auto& j : jets)
        for (const auto& X : basis)
          for (const auto& I : inv) {
            const double r = std::abs(apply_prolonged(X, I.expr, j));
            worst = std::max(worst, std::isfinite(r) ? r : INFINITY);
          }
      ++instances;
    }
    v.detail << " instances " << instances << ", max |pr X(I)| " << sci(worst);
    v.require(instances >= 12, "at least 12 instances");
    v.require(worst <= 1e-8, "max |pr X(I)| <= 1e-8");
  });

  criterion(2, "symmetry verdicts", [](Verdict& v) {
    int pairs = 0, false_neg = 0, false_pos = 0;
    double weakest_break = INFINITY;
    for (const auto& fam : list_families()) {
      const auto sys = invariant_family(fam.id);
      const auto pert = sys.with_rhs_shift(parse("0.1*y", state_variables()));
      double broken = 0;
      for (const auto& X : family_basis(fam.id)) {
        if (!is_symmetry(X, sys, 200, 1, 1e-8).verdict) ++false_neg;
        const auto p = is_symmetry(X, pert, 200, 1, 1e-8);
        if (!p.verdict) broken = std::max(broken, p.max_residual);
      }
      // The perturbed system must lose the algebra: some basis field fails.
      if (broken < 1e-3) ++false_pos;
      weakest_break = std::min(weakest_break, broken);
      ++pairs;
    }
    v.detail << " pairs " << pairs << ", false negatives " << false_neg << ", false positives " << false_pos
             << ", smallest perturbed residual " << sci(weakest_break);
    v.require(false_neg == 0 && false_pos == 0, "zero false verdicts");
  });

  criterion(3, "invariant counts", [](Verdict& v) {
    auto count = [](const std::string& id) { return invariant_count(find_algebra(id).basis()); };
    v.require(count("A1,1") == 4, "A1,1 -> 4");
    for (const char* id : {"A2,1", "A2,2", "A2,3", "A2,4"}) v.require(count(id) == 3, std::string(id) + " -> 3");
    int dim3 = 0;
    for (const auto& fam : list_families()) {
      if (find_algebra(fam.algebra).dim != 3) continue;
      v.require(count(fam.algebra) == 2, fam.algebra + " -> 2");
      ++dim3;
    }
    v.require(count("A4,13") == 1, "A4,13 -> 1");
    const int so = count("so31");
    v.require(so <= 1, "so(3,1) -> <= 1");
    v.detail << " dim-3 family algebras " << dim3 << ", so(3,1) " << so;
  });

  criterion(4, "method-of-steps oracle", [](Verdict& v) {
    const auto sys = DODSystem::make("y_", "x - 1", {0, 3});
    const auto sol = solve(sys, parse("1", {"x"}), {-1, 0}, 3.0);
    const double e1 = std::abs(sol.evaluate(1.0).first - 2.0), e2 = std::abs(sol.evaluate(2.0).first - 3.5);
    const double omega = newton_omega();
    const auto ex = solve(sys, parse("exp(w*x)", {"x", "w"}).bind({{"w", omega}}), {-1, 0}, 3.0);
    const double exact = std::exp(3 * omega);
    const double rel = std::abs(ex.evaluate(3.0).first - exact) / exact;
    v.detail << " |y(1)-2| " << sci(e1) << ", |y(2)-3.5| " << sci(e2) << ", Omega " << omega << ", rel err " << sci(rel);
    v.require(e1 <= 1e-8 && e2 <= 1e-8, "step values");
    v.require(std::abs(omega - 0.5671432904) <= 1e-10, "Omega");
    v.require(rel <= 1e-6, "exponential preserved");
  });

  criterion(5, "solution-dependent delay oracle", [](Verdict& v) {
    const auto sys = DODSystem::make("(y - y_)/(x - x_)", "x/2", {0.5, 2});
    const auto sol = solve(sys, parse("x", {"x"}), {0.5, 1}, 2.0);
    const double e = std::abs(sol.evaluate(2.0).first - 2.0);
    v.detail << " |y(2)-2| " << sci(e);
    v.require(e <= 1e-8, "y(2) = 2");
  });

  criterion(6, "invariant-solution round trips", [](Verdict& v) {
    auto round_trip = [](const ClosedFormSolution& s, const DODSystem& sys) {
      // History on [k(x0), x0] with x0 the first point whose history is admissible.
      double x0 = s.domain.lo;
      for (int i = 0; i <= 400; ++i) {
        const double t = s.domain.lo + s.domain.width() * i / 400;
        if (s.jet(t).x_minus >= s.domain.lo + 1e-3 * s.domain.width()) {
          x0 = t;
          break;
        }
      }
      const double k0 = s.jet(x0).x_minus;
      const double x_end = std::min(x0 + 3 * (x0 - k0), s.domain.hi);
      const ScalarWithSlope phi = [&s](double x) {
        const auto j = s.jet(x);
        return std::pair<double, double>{j.y, j.ydot};
      };
      const auto num = solve(to_problem(sys), phi, {k0, x0}, x_end);
      double err = 0;
      for (int i = 0; i <= 200; ++i) {
        const double x = x0 + (x_end - x0) * i / 200;
        err = std::max(err, std::abs(num.evaluate(x).first - s.jet(x).y));
      }
      return err;
    };

    const ParamValues p24{{"f", "z^2"}, {"g", "1 + w/2"}};
    const auto& a24 = find_ansatz("A2,4", "X1+aX2");
    const auto r24 = solve_constraints(a24, p24, {{"A", 5.0}});
    v.require(r24.solutions.size() == 1, "A2,4 single solution");
    const auto& c24 = r24.solutions.at(0);
    v.require(std::abs(c24.values.at("a") - 1) <= 1e-12 && std::abs(c24.values.at("B") - 2) <= 1e-12, "a = 1, B = 2");
    v.require(c24.residual <= 1e-12, "A2,4 constraint residual");
    const double rt24 = round_trip(build_solution(a24, c24), invariant_family("A2,4", p24));

    const ParamValues p32{{"a", "2"}, {"C1", "4/3"}, {"C2", "1"}};
    const auto& a32 = find_ansatz("A3,2", "X3");
    const auto r32 = solve_constraints(a32, p32);
    v.require(r32.solutions.size() == 1, "A3,2 single solution");
    const auto& c32 = r32.solutions.at(0);
    v.require(std::abs(c32.values.at("A") - 1.0 / 3) <= 1e-12 && std::abs(c32.values.at("B") - 0.5) <= 1e-12,
              "A = 1/3, B = 1/2");
    const auto s32 = build_solution(a32, c32);
    double form = 0;
    for (double x : {1.5, 3.0, 7.0}) form = std::max(form, std::abs(s32.jet(x).y - x * x / 3));
    v.require(form <= 1e-12, "y = x^2/3");
    const auto sys32 = invariant_family("A3,2", p32);
    const double ver = verify(sys32, s32);
    v.require(ver <= 1e-12, "A3,2 verify");
    const double rt32 = round_trip(s32, sys32);
    v.detail << " A2,4 residual " << sci(c24.residual) << ", round trip " << sci(rt24) << "; A3,2 verify " << sci(ver)
             << ", round trip " << sci(rt32);
    v.require(rt24 <= 1e-7 && rt32 <= 1e-7, "solver reproduces closed forms");
  });

  criterion(7, "linear compatibility trichotomy", [](Verdict& v) {
    const auto plain = LinearDODS::parse("0", "1", "0", "x - 1", {1, 5});
    const auto z = extra_symmetry(plain);
    v.require(z.symmetry.has_value(), "(0,1,0,x-1) compatible");
    double zr = INFINITY;
    if (z.symmetry) {
      double dev = 0;
      for (double x : {1.0, 3.0, 5.0})
        dev = std::max({dev, std::abs(z.symmetry->xi({x}) - 1), std::abs(z.symmetry->A({x}))});
      v.require(dev <= 1e-12 && !z.symmetry->B, "Z = d/dx");
      zr = is_symmetry(z.symmetry->as_field, plain.system()).max_residual;
      v.require(zr <= 1e-7, "is_symmetry(Z) <= 1e-7");
    }

    const auto varb = LinearDODS::parse("0", "x", "0", "x - 1", {2, 5});
    const auto c = compatibility(varb, 200);
    double oracle = 0;
    for (int i = 0; i < 200; ++i) {
      const double x = 2 + 3.0 * i / 199;
      oracle = std::max(oracle, std::abs(1 / x - 1 / (x - 1)));
    }
    v.require(!c.holds && c.max_defect > 0, "(0,x,0,x-1) incompatible");
    v.require(std::abs(c.max_defect - oracle) <= 1e-10, "defect matches hand formula");
    v.require(!extra_symmetry(varb).symmetry, "no Z for (0,x,0,x-1)");

    const auto half = LinearDODS::parse("0", "1", "0", "x/2", {1, 5});
    const auto h = extra_symmetry(half);
    v.require(h.compatibility.max_defect == 0.0 && !h.symmetry, "(0,1,0,x/2) rejected by the functional equation");
    v.detail << " Z residual " << sci(zr) << ", defect " << c.max_defect << " vs " << oracle << ", x/2 functional defect "
             << h.functional_defect;
  });

  criterion(8, "superposition", [](Verdict& v) {
    const SolverOptions opts;
    const double bound = 10 * opts.rel_tol;
    const auto lin = LinearDODS::parse("0", "1", "0", "x - 1", {0, 4});
    const auto sys = lin.system();
    const auto u = solve(sys, parse("1", {"x"}), {-1, 0}, 4.0);
    const auto w = solve(sys, parse("cos(3*x)", {"x"}), {-1, 0}, 4.0);
    const auto a24 = invariant_family("A2,4");
    // y = a x on [-D, 0] meets the delay relation when D = 1/(1 - a/2).
    const auto n1 = solve(a24, parse("0.2*x", {"x"}), {-1 / 0.9, 0}, 2.0);
    const auto n2 = solve(a24, parse("0.4*x", {"x"}), {-1 / 0.8, 0}, 2.0);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> coef(-3, 3);
    double lin_worst = 0, nonlin_best = INFINITY;
    for (int d = 0; d < 5; ++d) {
      const double c1 = coef(rng), c2 = coef(rng);
      lin_worst = std::max(lin_worst, superposition_check(lin, {u, w}, {c1, c2}));
      nonlin_best = std::min(nonlin_best, superposition_check(a24, {n1, n2}, {c1, c2}));
    }
    v.detail << " linear max " << sci(lin_worst) << " (bound " << sci(bound) << "), A2,4 min " << sci(nonlin_best);
    v.require(lin_worst <= bound, "linear combinations solve the system");
    v.require(nonlin_best >= 1e6 * bound, "nonlinear control fails by 6 orders");
  });

  criterion(9, "group-orbit action", [](Verdict& v) {
    const auto sys = DODSystem::make("y_", "x - 1", {0, 4});
    const auto sol = solve(sys, parse("1", {"x"}), {-1, 0}, 3.0);
    const double ry = residual(transform_solution(VectorField::parse("0", "y"), std::log(2.0), sol), sys);
    const double rz = residual(transform_solution(VectorField::parse("1", "0"), 1.0, sol), sys);
    const double rx = residual(transform_solution(VectorField::parse("x", "0"), 0.5, sol), sys);
    v.detail << " Y " << sci(ry) << ", Z " << sci(rz) << ", x d/dx " << sci(rx);
    v.require(ry <= 1e-6 && rz <= 1e-6, "symmetries map solutions to solutions");
    v.require(rx >= 1e-2, "non-symmetry detected");
  });

  criterion(10, "expression and AD suite", [](Verdict& v) {
    std::mt19937_64 rng(20240517);
    std::uniform_real_distribution<double> pt(-1.0, 1.0);
    int ad_bad = 0, rt_bad = 0, n = 0;
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const auto e = parse(random_expr(rng, 4), {"x", "y"});
      const double x = pt(rng), y = pt(rng);
      const bool dx = trial % 2 == 0;
      const auto r = diff_eval(e, std::map<std::string, double>{{"x", x}, {"y", y}}, dx ? "x" : "y");
      const double h = 1e-6;
      const double fd = dx ? (e({x + h, y}) - e({x - h, y})) / (2 * h) : (e({x, y + h}) - e({x, y - h})) / (2 * h);
      const double rel = std::abs(r.partial - fd) / (1 + std::abs(r.partial));
      worst = std::max(worst, rel);
      if (!(rel <= 1e-6)) ++ad_bad;
      const auto text = e.to_string();
      const auto back = parse(text, {"x", "y"});
      const double a = e({x, y}), b = back({x, y});
      if (back.to_string() != text || std::memcmp(&a, &b, sizeof a) != 0) ++rt_bad;
      ++n;
    }
    v.detail << " expressions " << n << ", AD mismatches " << ad_bad << " (worst " << sci(worst)
             << "), round-trip failures " << rt_bad;
    v.require(ad_bad == 0, "AD vs central differences");
    v.require(rt_bad == 0, "parse round trip");
  });

  return failures == 0 ? 0 : 1;
}
