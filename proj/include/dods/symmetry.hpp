#pragma once

// Prolongation of point vector fields to the jet space and the resulting
// invariance tests.

#include <cstdint>
#include <utility>
#include <vector>

#include "dods/core.hpp"
#include "dods/solver.hpp"

namespace dods {

struct ProlongedField {
  double xi = 0, eta = 0, xi_minus = 0, eta_minus = 0, zeta = 0;
  std::array<double, 5> coords() const { return {xi, eta, xi_minus, eta_minus, zeta}; }
};

ProlongedField prolong(const VectorField& field, const JetPoint& jet);

/// pr X applied to a function I of the jet variables (x, y, x_, y_, yd).
double apply_prolonged(const VectorField& field, const Expr& invariant, const JetPoint& jet);

struct DeterminingResidual {
  double r1 = 0;  // DODE equation
  double r2 = 0;  // delay relation
};

/// Residuals of the determining equations at a manifold jet. Throws
/// ManifoldError if the jet is off the manifold by more than 1e-10.
DeterminingResidual determining_residual(const VectorField& field, const DODSystem& system, const JetPoint& jet);

enum class InvarianceMode { Weak, Strong };

struct SymmetryVerdict {
  bool verdict = false;
  double max_residual = 0;
  int samples = 0;
};

SymmetryVerdict is_symmetry(const VectorField& field, const DODSystem& system, int sample = 200,
                            std::uint64_t seed = 1, double tol = 1e-9, InvarianceMode mode = InvarianceMode::Weak);

int rank_Z(const std::vector<VectorField>& fields, const JetPoint& jet);

/// k = 5 - max rank of Z over `sample` generic jets.
int invariant_count(const std::vector<VectorField>& fields, int sample = 25, std::uint64_t seed = 1);

/// Group flow exp(epsilon X) applied to (x, y).
std::pair<double, double> flow(const VectorField& field, double epsilon, std::pair<double, double> point);

/// Flow of a point together with the induced action on the slope dy/dx.
struct FlowedJet {
  double x, y, slope;
};
FlowedJet flow_with_slope(const VectorField& field, double epsilon, double x, double y, double slope);

/// Image of a solution graph under exp(epsilon X), kept as a monotone table
/// with a cubic Hermite interpolant.
class TransformedSolution {
 public:
  std::vector<double> x, y, slope;  // breakpoint images appear twice (left/right slope)
  double start = 0;                  // image of x_0: the solution part begins here
  std::vector<double> breakpoint_images;
  double history_lo() const { return x.front(); }
  double x_end() const { return x.back(); }
  std::pair<double, double> evaluate(double at) const;
};

TransformedSolution transform_solution(const VectorField& field, double epsilon, const PiecewiseSolution& sol,
                                       int grid = 2001);

/// Residual of the transformed graph under a system, over the part of its
/// range whose delayed points stay inside the table.
double residual(const TransformedSolution& sol, const DODSystem& system, int n = 200);

}  // namespace dods
