#pragma once

// Group-invariant solutions of invariant DODS families: reduction by a
// one-dimensional subalgebra, constraint solving for the constants, orbit
// extension and independent verification.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dods/catalog.hpp"

namespace dods {

using Constants = std::map<std::string, double>;

struct InvariantAnsatz {
  std::string family_id;
  std::string subalgebra;  // e.g. "X3", "X1+X2"
  std::vector<std::string> unknowns;  // solved for
  Constants free_constants;           // arbitrary, with defaults
  // Reduction formulas over x and the constants (family constants allowed).
  std::string h, k;
  // Parametric ansatz: x(phi), y(phi); delayed point at phi - shift.
  bool parametric = false;
  std::string x_of_phi, y_of_phi, shift;
  // Numeric-only ansatz: k is defined implicitly by J2 = B.
  bool numeric_only = false;
  std::string J1, J2;  // over (x, y) and (x, y, x_, y_)
  std::vector<std::string> constraint_text;
  Constants orbit_identity;  // group parameters giving the identity map
  std::string orbit_h, orbit_k;
  std::string domain_note;

  /// Constraint residuals over `vars` (unknowns then free constants).
  std::function<std::vector<Expr>(const ResolvedParams&, const std::vector<std::string>& vars)> constraints;
  std::function<bool(const Constants&)> admissible;                     // filters on the constants
  std::function<Interval(const Constants&)> base_domain;                // in x (or phi)
  std::function<bool(double, const Constants&)> branch;                 // pointwise branch condition
};

/// det d(J1, J2)/d(y, x_) at a point; constants in J1, J2 are taken from
/// `values` (family constants default).
double jacobian_det(const InvariantAnsatz& ansatz, const ParamValues& family_params, const Constants& values,
                    double x, double y, double x_minus, double y_minus);

/// Representative one-dimensional subalgebras usable for reduction.
/// Throws UnknownFamily.
std::vector<InvariantAnsatz> subalgebra_catalog(std::string_view family_id);
const InvariantAnsatz& find_ansatz(std::string_view family_id, std::string_view subalgebra);

struct ConstantAssignment {
  Constants values;        // unknowns, free constants and family constants
  ParamValues family_params;
  double residual = 0.0;   // max-norm of the constraint residuals
};

struct ConstraintSolutions {
  std::vector<ConstantAssignment> solutions;
  std::vector<std::string> diagnostics;
};

/// Default seed grid {±2^j, j = -3..3}.
std::vector<double> default_seeds();

/// Damped Gauss-Newton from every seed combination; deduplicated and filtered
/// for admissibility. An empty list means no root was found (see diagnostics).
ConstraintSolutions solve_constraints(const InvariantAnsatz& ansatz, const ParamValues& family_params = {},
                                      const Constants& free_values = {},
                                      const std::vector<std::vector<double>>& seeds = {}, double tol = 1e-10);

struct ClosedFormSolution {
  std::string family_id;
  std::string subalgebra;
  ParamValues family_params;
  Constants constants;
  bool parametric = false;
  bool numeric_only = false;
  Expr y;       // y(x), or y(phi) when parametric
  Expr x_of;    // x(phi) when parametric
  Expr delay;   // x_(x); unused when parametric or numeric-only
  std::function<double(double)> delay_fn;  // numeric-only delay map
  double shift = 0.0;
  Interval domain;  // admissible x (or phi) range

  /// Manifold jet at parameter t (x, or phi when parametric).
  JetPoint jet(double t) const;
  std::string y_text() const;
  std::string delay_text() const;
};

/// Substitutes the constants into the reduction formulas and determines the
/// admissible domain. Throws NoRootFound if the admissible domain is empty.
ClosedFormSolution build_solution(const InvariantAnsatz& ansatz, const ConstantAssignment& constants);

/// Applies the recorded group orbit with the given parameters (missing ones
/// default to the identity) and re-checks the extended solution. Throws
/// ConstraintViolated when it no longer solves the family system.
ClosedFormSolution orbit_extend(const InvariantAnsatz& ansatz, const ClosedFormSolution& solution,
                                const Constants& group_params, double tol = 1e-10);

/// max |E1|, |E2| of the system along the solution on `grid` interior points.
double verify(const DODSystem& system, const ClosedFormSolution& solution, int grid = 200);

}  // namespace dods
