#pragma once

// Shared domain types: jet points, vector fields and delay ordinary
// differential systems (DODS) ẏ = f, x₋ = g, possibly given implicitly.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dods/expr.hpp"

namespace dods {

/// Jet coordinates in evaluation order: x, y, x_, y_, yd.
const std::vector<std::string>& jet_variables();
/// Free coordinates of a DODS manifold: x, y, y_.
const std::vector<std::string>& state_variables();
/// Coordinates of the (x, y) plane.
const std::vector<std::string>& plane_variables();

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct JetPoint {
  double x = 0.0;
  double y = 0.0;
  double x_minus = 0.0;
  double y_minus = 0.0;
  double ydot = 0.0;

  double dx() const { return x - x_minus; }
  double dy() const { return y - y_minus; }
  std::array<double, 5> coords() const { return {x, y, x_minus, y_minus, ydot}; }
  static JetPoint from(const std::array<double, 5>& c) { return {c[0], c[1], c[2], c[3], c[4]}; }
};

struct VectorField {
  Expr xi;   // over (x, y)
  Expr eta;  // over (x, y)
  std::string label;

  static VectorField parse(std::string_view xi, std::string_view eta, std::string label = {});
  /// Human-readable form, e.g. "(x) d/dx + (y) d/dy".
  std::string to_string() const;
};

VectorField linear_combination(const std::vector<double>& coeffs, const std::vector<VectorField>& fields,
                               std::string label = {});

/// Sampling box for the free manifold coordinates (x, y, y₋).
struct SampleBox {
  Interval x{0.0, 1.0};
  Interval y{-10.0, 10.0};
  Interval y_minus{-10.0, 10.0};
};

/// A delay ordinary differential system.
///
/// Explicit systems carry ẏ = f(x, y, x_, y_) and x_ = g(x, y, y_); f may
/// reference x_, which stands for the delayed abscissa produced by g. Implicit
/// systems carry residuals E1(x, y, x_, y_, yd) = 0 and E2(x, y, x_, y_) = 0
/// and are resolved numerically.
class DODSystem {
 public:
  DODSystem() = default;

  static DODSystem make(const Expr& f, const Expr& g, Interval domain, std::string label = {});
  static DODSystem make(std::string_view f, std::string_view g, Interval domain, std::string label = {});
  /// Explicit DODE with a delay relation given in residual form G = 0.
  static DODSystem with_implicit_delay(const Expr& f, const Expr& G, Interval domain, std::string label = {});
  /// Both relations in residual form.
  static DODSystem implicit(const Expr& F, const Expr& G, Interval domain, std::string label = {});

  bool explicit_rhs() const { return f_.has_value(); }
  bool explicit_delay() const { return g_.has_value(); }
  /// ẏ = f over (x, y, x_, y_); requires explicit_rhs().
  const Expr& f() const;
  /// x_ = g over (x, y, y_); requires explicit_delay().
  const Expr& g() const;
  /// f with x_ replaced by g: a function of (x, y, y_). Requires both explicit.
  Expr f_composed() const;
  /// Residual forms over the jet variables.
  const Expr& E1() const { return E1_; }
  const Expr& E2() const { return E2_; }

  /// True when the delay relation involves y_ (the delayed abscissa then
  /// depends on the history through y(x_)).
  bool delay_uses_history() const;

  /// Residual of the delay relation with x_ = s and y_ = ys; zero at the
  /// delayed abscissa.
  double delay_residual(double x, double y, double s, double ys, EvalMode mode = EvalMode::Unchecked) const;
  /// Delayed abscissa for fixed (x, y, y_): largest admissible root below x.
  /// Throws DelayOrderError when none exists or g(x, y, y_) >= x.
  double resolve_delay(double x, double y, double y_minus, EvalMode mode = EvalMode::Checked) const;
  /// ẏ at a manifold point. Implicit DODEs pick the root nearest the secant
  /// slope Δy/Δx.
  double resolve_ydot(double x, double y, double x_minus, double y_minus, EvalMode mode = EvalMode::Checked) const;

  /// Same system with ẏ shifted by delta(x, y, y_) (delta over state variables).
  DODSystem with_rhs_shift(const Expr& delta) const;

  Interval domain;
  std::string label;
  SampleBox box;            // x range defaults to the domain
  double delta_max = 10.0;  // search window below x for implicit delays

 private:
  void build_residuals();

  std::optional<Expr> f_;
  std::optional<Expr> g_;
  Expr E1_;
  Expr E2_;
};

/// Point on the DODS manifold over the free coordinates (x, y, y₋).
JetPoint jet_on_manifold(const DODSystem& system, double x, double y, double y_minus);

/// Derivatives of the manifold coordinates x₋ and ẏ with respect to the free
/// coordinates (x, y, y₋), by implicit differentiation of E1, E2.
struct ManifoldPartials {
  std::array<double, 3> x_minus;
  std::array<double, 3> ydot;
};
ManifoldPartials manifold_partials(const DODSystem& system, const JetPoint& jet);

/// Rejection sampling of admissible manifold jets from the system's box.
std::vector<JetPoint> sample_manifold(const DODSystem& system, int count, std::uint64_t seed,
                                      int max_attempts_factor = 200);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
  std::optional<JetPoint> witness;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  int samples = 0;
  bool ok() const;
  const ValidationCheck* find(std::string_view name) const;
};

inline constexpr const char* kCheckDelayDependence = "df/dy_ != 0";
inline constexpr const char* kCheckCausal = "x_ < x";
inline constexpr const char* kCheckNonConstantDelay = "g != const";

ValidationReport validate_system(const DODSystem& system, int sample_size = 200, std::uint64_t seed = 1);

}  // namespace dods
