#pragma once

// Method-of-steps integration of a DODS with breakpoint tracking.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dods/core.hpp"

namespace dods {

struct SolverOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 1e-3;
  double initial_step = 1e-4;
  double min_step = 1e-13;
  double delay_root_tol = 1e-12;
  double compat_tol = 1e-8;
  bool force = false;  // downgrade CompatibilityError to a warning
  long max_steps = 20'000'000;
};

/// Value and derivative of a function of one variable.
using ScalarWithSlope = std::function<std::pair<double, double>(double)>;

/// Callable form of a delay problem, used both for Expr-based systems and for
/// auxiliary equations whose coefficients are numeric functions.
struct DelayProblem {
  /// ẏ given (x, y, x_, y_).
  std::function<double(double, double, double, double)> rhs;
  /// Explicit delay x_ = g(x, y, y_); empty when the relation is implicit.
  std::function<double(double, double, double)> delay;
  /// Residual G(x, y, s, y(s)) vanishing at the delayed abscissa.
  std::function<double(double, double, double, double)> delay_residual;
  bool delay_uses_history = false;
  double delta_max = 10.0;
};

DelayProblem to_problem(const DODSystem& system);

struct Segment {
  double x0, x1;
  double y0, y1;
  double f0, f1;
  int interval;  // n such that the segment lies in [x_n, x_{n+1}]
};

struct SolverDiagnostics {
  long accepted_steps = 0;
  long rejected_steps = 0;
  int max_root_multiplicity = 1;
  std::vector<std::string> warnings;
};

class PiecewiseSolution {
 public:
  Interval initial_interval;
  std::optional<Expr> phi_expr;
  ScalarWithSlope phi;
  std::vector<double> breakpoints;  // x_0 < x_1 < ... (x_0 is the initial point)
  std::vector<Segment> segments;
  SolverDiagnostics diagnostics;

  double x_begin() const { return initial_interval.lo; }
  double x_end() const { return segments.empty() ? initial_interval.hi : segments.back().x1; }
  /// (y, ydot); ydot is right-continuous at breakpoints and taken from the left
  /// at the final point. Throws OutOfRange outside [x_-1, x_N].
  std::pair<double, double> evaluate(double x) const;
  /// Index n of the breakpoint interval containing x (-1 on the initial interval).
  int interval_index(double x) const;
};

std::pair<double, double> evaluate(const PiecewiseSolution& sol, double x);

PiecewiseSolution solve(const DelayProblem& problem, ScalarWithSlope phi, Interval initial_interval, double x_end,
                        const SolverOptions& opts = {});
PiecewiseSolution solve(const DODSystem& system, const Expr& phi, Interval initial_interval, double x_end,
                        const SolverOptions& opts = {});

/// Initial function from an expression in x, with its derivative by AD.
ScalarWithSlope phi_from_expr(const Expr& phi);

/// Delayed abscissa at (x, y) for a given history y(.); `hint` speeds up the
/// search for implicit relations. Returns the largest admissible root.
double resolve_delayed_abscissa(const DelayProblem& problem, double x, double y,
                                const std::function<double(double)>& history, double lower,
                                std::optional<double> hint = std::nullopt, int* multiplicity = nullptr);

/// max |ẏ − f(x, y, y(x_))| over n grid points in (lo, hi), with x_ re-resolved
/// from the delay relation. Points whose x_ falls below `history_lo` are skipped.
double residual(const DelayProblem& problem, const ScalarWithSlope& sol, double history_lo, double lo, double hi,
                int n, const std::vector<double>& avoid = {});
double residual(const PiecewiseSolution& sol, const DODSystem& system, int n = 200);

/// CSV: header "x,y,ydot,segment_index" then one row per step node.
void write_csv(const PiecewiseSolution& sol, std::ostream& os, int initial_samples = 21);
/// Breakpoints and run metadata as JSON text.
std::string breakpoints_json(const PiecewiseSolution& sol);

}  // namespace dods
