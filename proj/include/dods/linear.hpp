#pragma once

// Linear DODS  y' = alpha(x) y + beta(x) y_ + gamma(x),  x_ = g(x):
// the K-function and compatibility condition, the additional symmetry,
// homogenization, canonical forms and superposition checks.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dods/core.hpp"
#include "dods/solver.hpp"

namespace dods {

struct LinearDODS {
  Expr alpha, beta, gamma, g;  // over (x)
  Interval domain{1.0, 5.0};

  /// Validates beta != 0 on a sample, g(x) < x and g != const on the domain.
  /// Throws ConfigError.
  static LinearDODS make(Expr alpha, Expr beta, Expr gamma, Expr g, Interval domain = {1.0, 5.0});
  static LinearDODS parse(std::string_view alpha, std::string_view beta, std::string_view gamma, std::string_view g,
                          Interval domain = {1.0, 5.0});
  /// Reads the coefficients off an explicit system whose delay depends on x
  /// only and whose right-hand side is affine in (y, y_). Throws ConfigError.
  static LinearDODS from_system(const DODSystem& system, Interval domain);

  DODSystem system() const;
  bool homogeneous() const;
};

/// K = alpha - g' alpha(g) - beta'/beta. Throws DomainError where beta = 0.
double k_function(const LinearDODS& lin, double x);

struct CompatibilityReport {
  bool holds = false;
  double max_defect = 0.0;  // max |K(g) g'^2 - g'' - K g'| over the grid
  double worst_x = 0.0;
  int skipped = 0;          // grid points where K was not finite
};

/// Grid of `grid` equally spaced points including both ends of the domain.
CompatibilityReport compatibility(const LinearDODS& lin, int grid = 200, double tol = 1e-8);

struct ExtraSymmetry {
  Expr xi;      // over (x): exp of the integral of K, xi(domain.lo) = 1
  Expr A;       // over (x): xi alpha + A0
  double A0 = 0.0;
  std::optional<PiecewiseSolution> B;  // empty when gamma = 0 (then B = 0)
  VectorField as_field;
};

struct ExtraSymmetryReport {
  std::optional<ExtraSymmetry> symmetry;
  CompatibilityReport compatibility;
  double functional_defect = 0.0;  // max relative |xi(g) - g' xi|
  std::vector<std::string> diagnostics;
};

ExtraSymmetryReport extra_symmetry(const LinearDODS& lin, double tol = 1e-8, int grid = 200);

struct HomogenizedSystem {
  LinearDODS system;  // (alpha, beta, 0, g) in ybar = y - sigma
  Expr sigma;
  double residual = 0.0;
};

/// Throws NotAParticularSolution when sigma leaves a residual above 1e-8.
HomogenizedSystem homogenize(const LinearDODS& lin, const Expr& sigma, int grid = 200);

/// Strictly increasing map sampled on a grid, with cubic Hermite interpolants
/// in both directions.
class MonotoneMap {
 public:
  MonotoneMap() = default;
  /// Throws NonMonotoneTransform unless x and image are strictly increasing.
  MonotoneMap(std::vector<double> x, std::vector<double> image, std::vector<double> slope);
  double forward(double x) const;
  double inverse(double xbar) const;
  double slope(double x) const;
  Interval domain() const { return {x_.front(), x_.back()}; }
  Interval image() const { return {xb_.front(), xb_.back()}; }

 private:
  std::vector<double> x_, xb_, s_;
};

enum class CanonicalMode { Canonical2, Canonical3 };

struct CanonicalForm {
  std::string tag;   // "compatible" or "incompatible"
  std::string form;  // "canonical1", "canonical2" or "canonical3"
  LinearDODS system;  // over xbar; tabulated coefficients
  double C = 0.0;     // delay constant for canonical1/canonical2
  double coefficient = 1.0;  // constant coefficient of y_ before rescaling (canonical1)
  MonotoneMap x_map;  // x -> xbar
  Expr y_scale;       // over (x): ybar = y_scale(x) * y
  double coefficient_spread = 0.0;  // variation of the y_ coefficient that should be constant
  std::vector<std::string> diagnostics;
};

/// Throws NonMonotoneTransform when a required change of x is not monotone.
CanonicalForm canonical_form(const LinearDODS& lin, CanonicalMode mode = CanonicalMode::Canonical2,
                             double tol = 1e-8, int grid = 2001);

/// Residual of sum c_i y_i under a system, over the common range after the
/// initial point (breakpoints of every solution avoided).
double superposition_check(const DODSystem& system, const std::vector<PiecewiseSolution>& sols,
                           const std::vector<double>& coeffs, int n = 400);
double superposition_check(const LinearDODS& lin, const std::vector<PiecewiseSolution>& sols,
                           const std::vector<double>& coeffs, int n = 400);

}  // namespace dods
