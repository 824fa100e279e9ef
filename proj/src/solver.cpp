#include "dods/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "dods/numerics.hpp"
#include "json.hpp"

namespace dods {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Dormand-Prince 5(4).
constexpr double C[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double A[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double B5[7] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr double B4[7] = {5179.0 / 57600, 0.0, 7571.0 / 16695, 393.0 / 640, -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

double hermite_value(const Segment& s, double x) {
  const double h = s.x1 - s.x0;
  const double t = (x - s.x0) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * s.y0 + (t3 - 2 * t2 + t) * h * s.f0 + (-2 * t3 + 3 * t2) * s.y1 +
         (t3 - t2) * h * s.f1;
}

double hermite_slope(const Segment& s, double x) {
  const double h = s.x1 - s.x0;
  const double t = (x - s.x0) / h;
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * s.y0 + (-6 * t2 + 6 * t) * s.y1) / h + (3 * t2 - 4 * t + 1) * s.f0 +
         (3 * t2 - 2 * t) * s.f1;
}

}  // namespace

DelayProblem to_problem(const DODSystem& system) {
  DelayProblem p;
  auto sys = std::make_shared<const DODSystem>(system);
  p.rhs = [sys](double x, double y, double xm, double ym) { return sys->resolve_ydot(x, y, xm, ym, EvalMode::Unchecked); };
  if (system.explicit_delay()) {
    p.delay = [sys](double x, double y, double ym) {
      const double v[3] = {x, y, ym};
      return sys->g().evaluate<double>(std::span<const double>(v, 3), EvalMode::Unchecked);
    };
  }
  p.delay_residual = [sys](double x, double y, double s, double ys) { return sys->delay_residual(x, y, s, ys); };
  p.delay_uses_history = system.delay_uses_history();
  p.delta_max = system.delta_max;
  return p;
}

ScalarWithSlope phi_from_expr(const Expr& phi) {
  Expr e = phi.rebase({"x"});
  return [e](double x) {
    Dual<double> d{x, 1.0};
    auto r = e.evaluate<Dual<double>>(std::span<const Dual<double>>(&d, 1));
    return std::make_pair(r.value, r.partial);
  };
}

// ---------------------------------------------------------------------------

int PiecewiseSolution::interval_index(double x) const {
  if (breakpoints.empty() || x < breakpoints.front()) return -1;
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  return static_cast<int>(it - breakpoints.begin()) - 1;
}

std::pair<double, double> PiecewiseSolution::evaluate(double x) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(x));
  if (!(x >= initial_interval.lo - tol) || !(x <= x_end() + tol)) throw OutOfRange("x outside the solution interval");
  if (x < initial_interval.hi || segments.empty()) return phi(std::max(x, initial_interval.lo));
  auto it = std::upper_bound(segments.begin(), segments.end(), x, [](double v, const Segment& s) { return v < s.x0; });
  const Segment& s = it == segments.begin() ? segments.front() : *(it - 1);
  const double xx = std::min(x, s.x1);
  return {hermite_value(s, xx), hermite_slope(s, xx)};
}

std::pair<double, double> evaluate(const PiecewiseSolution& sol, double x) { return sol.evaluate(x); }

// ---------------------------------------------------------------------------

double resolve_delayed_abscissa(const DelayProblem& problem, double x, double y,
                                const std::function<double(double)>& history, double lower,
                                std::optional<double> hint, int* multiplicity) {
  if (multiplicity) *multiplicity = 1;
  if (problem.delay && !problem.delay_uses_history) return problem.delay(x, y, 0.0);

  const double hi = x - 1e-12 * std::max(1.0, std::abs(x));
  const double lo = std::max(lower, x - problem.delta_max);
  std::function<double(double)> h;
  if (problem.delay) {
    double s = hint ? *hint : problem.delay(x, y, y);
    for (int it = 0; it < 50; ++it) {
      if (!(s >= lower) || !(s < x)) break;
      const double next = problem.delay(x, y, history(s));
      if (!std::isfinite(next)) break;
      if (std::abs(next - s) <= 1e-14 * (1.0 + std::abs(s))) return next;
      s = next;
    }
    h = [&](double v) { return v - problem.delay(x, y, history(v)); };
  } else {
    h = [&](double v) { return problem.delay_residual(x, y, v, history(v)); };
  }
  if (hint && *hint >= lo && *hint <= hi) {
    // Roots move continuously along a solution: look near the previous one first.
    double width = 1e-9 * std::max(1.0, std::abs(*hint));
    while (width < problem.delta_max) {
      const double a = std::max(lo, *hint - width), b = std::min(hi, *hint + width);
      const double fa = h(a), fb = h(b);
      if (std::isfinite(fa) && std::isfinite(fb) && (fa == 0.0 || fb == 0.0 || (fa < 0) != (fb < 0)))
        return refine_root(h, a, b, fa, fb, 1e-15);
      if (a <= lo && b >= hi) break;
      width *= 4.0;
    }
  }
  if (!(lo < hi)) throw CausalityError("empty search window for the delayed abscissa");
  auto roots = bracket_roots(h, lo, hi, 400, 1e-15, true);
  if (roots.empty()) throw CausalityError("no admissible delayed abscissa below x");
  if (multiplicity) *multiplicity = static_cast<int>(roots.size());
  return roots.front();
}

// ---------------------------------------------------------------------------

namespace {

class Integrator {
 public:
  Integrator(const DelayProblem& p, const SolverOptions& o, PiecewiseSolution& s) : prob_(p), opts_(o), sol_(s) {}

  void run(double x_end);

 private:
  struct StepResult {
    double y_new = 0, f_new = 0, err = 0, xm_end = 0;
  };

  double committed(double s) const {
    const double x0 = sol_.initial_interval.hi;
    if (s < sol_.initial_interval.lo - 1e-12 * std::max(1.0, std::abs(s))) return kNaN;
    if (s <= x0 || sol_.segments.empty()) return sol_.phi(std::max(s, sol_.initial_interval.lo)).first;
    if (s > sol_.segments.back().x1) return kNaN;
    return sol_.evaluate(s).first;
  }

  double history(double s) const {
    if (prov_ && s > prov_->x0) return s <= prov_->x1 ? hermite_value(*prov_, s) : kNaN;
    return committed(s);
  }

  double delayed(double x, double y, std::optional<double> hint, bool record) {
    int mult = 1;
    const double xm = resolve_delayed_abscissa(
        prob_, x, y, [this](double s) { return history(s); }, sol_.initial_interval.lo, hint, &mult);
    if (record && mult > sol_.diagnostics.max_root_multiplicity) sol_.diagnostics.max_root_multiplicity = mult;
    const double scale = 1e-12 * std::max(1.0, std::abs(x));
    if (!(xm < x)) throw CausalityError("resolved delayed abscissa x_ >= x at x = " + std::to_string(x));
    if (xm < sol_.initial_interval.lo - scale)
      throw CausalityError("resolved delayed abscissa precedes the initial interval at x = " + std::to_string(x));
    return xm;
  }

  StepResult attempt(double x, double y, double f0, double h);

  const DelayProblem& prob_;
  const SolverOptions& opts_;
  PiecewiseSolution& sol_;
  std::optional<Segment> prov_;
  double last_xm_ = 0.0;
  double k_[7] = {};
};

Integrator::StepResult Integrator::attempt(double x, double y, double f0, double h) {
  StepResult r;
  prov_ = Segment{x, x + h, y, y + h * f0, f0, f0, 0};
  double prev_y_new = kNaN;
  double xm_stage[7];
  for (int iter = 0; iter < 50; ++iter) {
    bool inside = false;
    k_[0] = f0;
    xm_stage[0] = last_xm_;
    for (int i = 1; i < 7; ++i) {
      double yi = y;
      for (int j = 0; j < i; ++j) yi += h * A[i][j] * k_[j];
      const double xi = x + C[i] * h;
      const double xm = delayed(xi, yi, xm_stage[i - 1], false);
      if (xm > x) inside = true;
      xm_stage[i] = xm;
      k_[i] = prob_.rhs(xi, yi, xm, history(xm));
    }
    r.y_new = y;
    for (int i = 0; i < 7; ++i) r.y_new += h * B5[i] * k_[i];
    r.f_new = k_[6];
    r.xm_end = xm_stage[6];
    if (!inside) break;
    if (std::abs(r.y_new - prev_y_new) <= opts_.delay_root_tol * (1.0 + std::abs(r.y_new))) break;
    prev_y_new = r.y_new;
    prov_ = Segment{x, x + h, y, r.y_new, f0, r.f_new, 0};
  }
  double e = 0.0;
  for (int i = 0; i < 7; ++i) e += h * (B5[i] - B4[i]) * k_[i];
  const double sc = opts_.abs_tol + opts_.rel_tol * std::max(std::abs(y), std::abs(r.y_new));
  r.err = std::abs(e) / sc;
  if (!std::isfinite(r.y_new) || !std::isfinite(r.f_new)) r.err = std::numeric_limits<double>::infinity();
  return r;
}

void Integrator::run(double x_end) {
  const double x0 = sol_.initial_interval.hi;
  double x = x0;
  double y = sol_.phi(x0).first;
  last_xm_ = delayed(x0, y, sol_.initial_interval.lo, true);
  double f = prob_.rhs(x0, y, last_xm_, history(last_xm_));
  std::size_t target = 0;  // index into breakpoints of the next value x_ must reach
  double h = std::min(opts_.initial_step, opts_.max_step);
  long steps = 0;

  while (x < x_end) {
    if (++steps > opts_.max_steps) throw StiffnessError("step budget exhausted");
    h = std::min(h, opts_.max_step);
    bool to_end = false;
    if (x + h >= x_end - 1e-12 * std::max(1.0, std::abs(x_end))) {
      h = x_end - x;
      to_end = true;
    }
    StepResult r = attempt(x, y, f, h);
    if (r.err > 1.0) {
      prov_.reset();
      ++sol_.diagnostics.rejected_steps;
      h *= std::max(0.2, 0.9 * std::pow(r.err, -0.2));
      if (h < opts_.min_step) throw StiffnessError("step size underflow at x = " + std::to_string(x));
      continue;
    }
    const double tgt = sol_.breakpoints[target];
    const double ev_tol = opts_.delay_root_tol * std::max(1.0, std::abs(tgt));
    bool hit = false;
    if (r.xm_end > tgt + ev_tol) {
      // The delayed abscissa crossed the breakpoint inside this step: locate
      // the event on the step's dense output and shorten the step to it.
      const Segment trial{x, x + h, y, r.y_new, f, r.f_new, 0};
      prov_ = trial;
      double a = x, b = x + h;
      while (b - a > 1e-13 * std::max(1.0, std::abs(b))) {
        const double m = 0.5 * (a + b);
        const double xm = delayed(m, hermite_value(trial, m), r.xm_end, false);
        (xm > tgt ? b : a) = m;
      }
      h = b - x;
      r = attempt(x, y, f, h);
      hit = true;
      to_end = false;
    } else if (std::abs(r.xm_end - tgt) <= ev_tol) {
      hit = true;
    }
    if (hit) {
      // Secant polish of the step end onto the event; exact for linear delays.
      const double xm0 = last_xm_;
      for (int it = 0; it < 3 && r.xm_end != tgt; ++it) {
        const double slope = (r.xm_end - xm0) / h;
        if (!(slope > 0) || !std::isfinite(slope)) break;
        const double h_new = h + (tgt - r.xm_end) / slope;
        if (!(h_new > 0) || std::abs(h_new - h) > 1e-6 * h) break;
        StepResult rn = attempt(x, y, f, h_new);
        if (rn.err > 1.0 || std::abs(rn.xm_end - tgt) > std::abs(r.xm_end - tgt)) break;
        h = h_new;
        r = rn;
        to_end = false;
      }
    }
    prov_.reset();
    const double x_new = to_end ? x_end : x + h;
    const int interval = static_cast<int>(target);
    sol_.segments.push_back(Segment{x, x_new, y, r.y_new, f, r.f_new, interval});
    ++sol_.diagnostics.accepted_steps;
    x = x_new;
    y = r.y_new;
    f = r.f_new;
    last_xm_ = r.xm_end;
    if (hit) {
      sol_.breakpoints.push_back(x);
      ++target;
    }
    const double err = std::max(r.err, 1e-10);
    h = std::max(h, opts_.min_step) * std::min(5.0, 0.9 * std::pow(err, -0.2));
  }
}

}  // namespace

PiecewiseSolution solve(const DelayProblem& problem, ScalarWithSlope phi, Interval initial_interval, double x_end,
                        const SolverOptions& opts) {
  if (!(initial_interval.lo < initial_interval.hi)) throw ConfigError("initial interval must satisfy x_-1 < x_0");
  if (!(x_end > initial_interval.hi)) throw ConfigError("x_end must exceed x_0");
  if (!(opts.rel_tol > 0) || !(opts.abs_tol > 0) || !(opts.max_step > 0)) throw ConfigError("tolerances must be positive");

  PiecewiseSolution sol;
  sol.initial_interval = initial_interval;
  sol.phi = std::move(phi);
  sol.breakpoints = {initial_interval.hi};

  // Initial compatibility: x_-1 = g(x_0, phi(x_0), phi(x_-1)).
  const double x0 = initial_interval.hi, xm1 = initial_interval.lo;
  const double y0 = sol.phi(x0).first, ym1 = sol.phi(xm1).first;
  double defect;
  if (problem.delay) {
    const double g0 = problem.delay(x0, y0, ym1);
    if (!(g0 < x0)) throw CausalityError("delay relation gives x_ >= x at the initial point");
    defect = std::abs(g0 - xm1);
  } else {
    defect = std::abs(problem.delay_residual(x0, y0, xm1, ym1));
  }
  if (!(defect <= opts.compat_tol)) {
    const std::string msg = "initial data incompatible with the delay relation (defect " + std::to_string(defect) + ")";
    if (!opts.force) throw CompatibilityError(msg);
    sol.diagnostics.warnings.push_back(msg);
  }

  Integrator integ(problem, opts, sol);
  integ.run(x_end);
  if (sol.diagnostics.max_root_multiplicity > 1)
    sol.diagnostics.warnings.push_back("delay relation had " + std::to_string(sol.diagnostics.max_root_multiplicity) +
                                       " admissible roots; the largest was used");
  return sol;
}

PiecewiseSolution solve(const DODSystem& system, const Expr& phi, Interval initial_interval, double x_end,
                        const SolverOptions& opts) {
  auto sol = solve(to_problem(system), phi_from_expr(phi), initial_interval, x_end, opts);
  sol.phi_expr = phi;
  return sol;
}

// ---------------------------------------------------------------------------

double residual(const DelayProblem& problem, const ScalarWithSlope& sol, double history_lo, double lo, double hi, int n,
                const std::vector<double>& avoid) {
  if (n < 2) n = 2;
  double worst = 0.0;
  auto hist = [&](double s) { return s < history_lo - 1e-12 ? kNaN : sol(s).first; };
  std::optional<double> hint;
  for (int i = 0; i < n; ++i) {
    double x = lo + (hi - lo) * i / (n - 1);
    x = std::clamp(x, lo + 1e-9, hi - 1e-9);
    for (double b : avoid)
      if (std::abs(x - b) < 1e-9) x = b + 1e-9;
    const auto [y, yd] = sol(x);
    double xm;
    try {
      xm = resolve_delayed_abscissa(problem, x, y, hist, history_lo, hint);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
    hint = xm;
    if (xm < history_lo - 1e-12) continue;
    const double ym = sol(std::max(xm, history_lo)).first;
    const double f = problem.rhs(x, y, xm, ym);
    const double r = std::abs(yd - f);
    if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, r);
  }
  return worst;
}

double residual(const PiecewiseSolution& sol, const DODSystem& system, int n) {
  if (n < 10) throw ConfigError("residual needs n >= 10");
  const auto problem = to_problem(system);
  ScalarWithSlope ev = [&sol](double x) { return sol.evaluate(x); };
  return residual(problem, ev, sol.initial_interval.lo, sol.initial_interval.hi, sol.x_end(), n, sol.breakpoints);
}

void write_csv(const PiecewiseSolution& sol, std::ostream& os, int initial_samples) {
  char buf[128];
  os << "x,y,ydot,segment_index\n";
  auto row = [&](double x, double y, double yd, int idx) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", x, y, yd, idx);
    os << buf;
  };
  const auto& I = sol.initial_interval;
  for (int i = 0; i + 1 < initial_samples; ++i) {
    const double x = I.lo + I.width() * i / (initial_samples - 1);
    const auto [y, yd] = sol.phi(x);
    row(x, y, yd, -1);
  }
  if (sol.segments.empty()) return;
  row(sol.segments.front().x0, sol.segments.front().y0, sol.segments.front().f0, 0);
  for (const auto& s : sol.segments) row(s.x1, s.y1, s.f1, s.interval);
}

std::string breakpoints_json(const PiecewiseSolution& sol) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["initial_interval"] = {sol.initial_interval.lo, sol.initial_interval.hi};
  j["x_end"] = sol.x_end();
  j["breakpoints"] = sol.breakpoints;
  j["accepted_steps"] = sol.diagnostics.accepted_steps;
  j["rejected_steps"] = sol.diagnostics.rejected_steps;
  j["max_root_multiplicity"] = sol.diagnostics.max_root_multiplicity;
  j["warnings"] = sol.diagnostics.warnings;
  if (sol.phi_expr) j["phi"] = sol.phi_expr->to_string();
  return j.dump(2);
}

}  // namespace dods
