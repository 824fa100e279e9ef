#include "dods/linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "dods/errors.hpp"
#include "dods/numerics.hpp"

namespace dods {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const std::vector<std::string> kX{"x"};
const std::vector<std::string> kXY{"x", "y"};

double val(const Expr& e, double x) { return e.evaluate<double>(std::span<const double>(&x, 1)); }

double d1(const Expr& e, double x) {
  const Dual<double> v{x, 1.0};
  return e.evaluate<Dual<double>>(std::span<const Dual<double>>(&v, 1)).partial;
}

double d2(const Expr& e, double x) {
  using D2 = Dual<Dual<double>>;
  const D2 v{Dual<double>{x, 1.0}, Dual<double>{1.0, 0.0}};
  return e.evaluate<D2>(std::span<const D2>(&v, 1)).partial.partial;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return out;
}

/// Three-point slopes on a non-uniform grid.
std::vector<double> estimate_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : (i == n - 1 ? n - 3 : i - 1);
    const double x0 = x[a], x1 = x[a + 1], x2 = x[a + 2];
    const double t = x[i];
    // Derivative of the quadratic through the three points.
    s[i] = y[a] * (2 * t - x1 - x2) / ((x0 - x1) * (x0 - x2)) + y[a + 1] * (2 * t - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
           y[a + 2] * (2 * t - x0 - x1) / ((x2 - x0) * (x2 - x1));
  }
  return s;
}

using Hermite = boost::math::interpolators::cubic_hermite<std::vector<double>>;

/// Sampled function with a cubic Hermite interpolant; NaN outside the table.
class Tabulated : public ScalarFunction {
 public:
  Tabulated(std::string name, std::vector<double> x, std::vector<double> y, std::vector<double> s = {})
      : name_(std::move(name)), lo_(x.front()), hi_(x.back()) {
    if (s.empty()) s = estimate_slopes(x, y);
    h_ = std::make_shared<Hermite>(std::move(x), std::move(y), std::move(s));
  }
  double value(double t) const override {
    if (!(t >= lo_ - 1e-12 && t <= hi_ + 1e-12)) return kNaN;
    return (*h_)(std::clamp(t, lo_, hi_));
  }
  double slope(double t) const {
    if (!(t >= lo_ - 1e-12 && t <= hi_ + 1e-12)) return kNaN;
    return h_->prime(std::clamp(t, lo_, hi_));
  }
  std::shared_ptr<const ScalarFunction> derivative() const override;
  std::string name() const override { return name_; }
  Interval range() const { return {lo_, hi_}; }

 private:
  std::string name_;
  double lo_, hi_;
  std::shared_ptr<Hermite> h_;
};

/// Slope of a table; its own derivative by central differences.
class TabulatedSlope : public ScalarFunction {
 public:
  explicit TabulatedSlope(std::shared_ptr<const Tabulated> t) : t_(std::move(t)) {}
  double value(double x) const override { return t_->slope(x); }
  std::shared_ptr<const ScalarFunction> derivative() const override {
    struct Curv : ScalarFunction {
      std::shared_ptr<const Tabulated> t;
      double value(double x) const override {
        const auto r = t->range();
        const double h = 1e-5 * std::max(1.0, r.width());
        const double a = std::max(r.lo, x - h), b = std::min(r.hi, x + h);
        return (t->slope(b) - t->slope(a)) / (b - a);
      }
      std::string name() const override { return t->name() + "''"; }
    };
    auto c = std::make_shared<Curv>();
    c->t = t_;
    return c;
  }
  std::string name() const override { return t_->name() + "'"; }

 private:
  std::shared_ptr<const Tabulated> t_;
};

std::shared_ptr<const ScalarFunction> Tabulated::derivative() const {
  return std::make_shared<TabulatedSlope>(std::make_shared<Tabulated>(*this));
}

Expr table_expr(std::shared_ptr<const Tabulated> t) { return Expr::external(std::move(t), Expr::variable("x", kX)); }

/// Node grid on [a, hi] of about n points with `lo` as an exact node.
std::vector<double> nodes(double a, double lo, double hi, int n) {
  std::vector<double> out;
  const double w = hi - a;
  const int n1 = std::max(3, static_cast<int>(std::lround((n - 1) * (lo - a) / w)) + 1);
  const int n2 = std::max(3, n - n1 + 1);
  if (lo > a) out = linspace(a, lo, n1);
  const auto right = linspace(lo, hi, n2);
  out.insert(out.end(), right.begin() + (out.empty() ? 0 : 1), right.end());
  return out;
}

/// Integral of f from the node `anchor` to every node. Segments are short, so
/// a fixed 20-point Gauss rule per segment is enough.
std::vector<double> cumulative(const std::function<double(double)>& f, const std::vector<double>& x, double anchor) {
  std::vector<double> c(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) c[i] = c[i - 1] + boost::math::quadrature::gauss<double, 20>::integrate(f, x[i - 1], x[i]);
  const auto it = std::lower_bound(x.begin(), x.end(), anchor);
  const double base = c[static_cast<std::size_t>(it - x.begin())];
  for (double& v : c) v -= base;
  return c;
}

double lowest_delay(const Expr& g, double a, double b) {
  double m = a;
  for (double x : linspace(a, b, 401)) m = std::min(m, val(g, x));
  return m;
}

double safe_k(const LinearDODS& lin, double x) {
  try {
    return k_function(lin, x);
  } catch (const Error&) {
    return kNaN;
  }
}

class SolutionFunction : public ScalarFunction {
 public:
  SolutionFunction(std::shared_ptr<const PiecewiseSolution> s, bool slope) : s_(std::move(s)), slope_(slope) {}
  double value(double x) const override {
    try {
      const auto v = s_->evaluate(x);
      return slope_ ? v.second : v.first;
    } catch (const Error&) {
      return kNaN;
    }
  }
  std::shared_ptr<const ScalarFunction> derivative() const override {
    if (slope_) throw DomainError("second derivative of a numerical solution is not available");
    return std::make_shared<SolutionFunction>(s_, true);
  }
  std::string name() const override { return slope_ ? "B'" : "B"; }

 private:
  std::shared_ptr<const PiecewiseSolution> s_;
  bool slope_;
};

}  // namespace

// ---------------------------------------------------------------------------

LinearDODS LinearDODS::make(Expr alpha, Expr beta, Expr gamma, Expr g, Interval domain) {
  if (!(domain.hi > domain.lo)) throw ConfigError("linear DODS: empty domain");
  LinearDODS l;
  l.alpha = alpha.rebase(kX);
  l.beta = beta.rebase(kX);
  l.gamma = gamma.rebase(kX);
  l.g = g.rebase(kX);
  l.domain = domain;
  bool beta_nonzero = false;
  double gmin = std::numeric_limits<double>::infinity(), gmax = -gmin;
  for (double x : linspace(domain.lo, domain.hi, 101)) {
    const double b = val(l.beta, x);
    beta_nonzero = beta_nonzero || (std::isfinite(b) && b != 0.0);
    const double gx = val(l.g, x);
    if (!(gx < x)) {
      std::ostringstream os;
      os << "linear DODS: g(x) < x violated at x = " << x << " (g = " << gx << ")";
      throw ConfigError(os.str());
    }
    gmin = std::min(gmin, gx);
    gmax = std::max(gmax, gx);
  }
  if (!beta_nonzero) throw ConfigError("linear DODS: beta vanishes on the domain");
  if (gmax - gmin <= 1e-12) throw ConfigError("linear DODS: g is constant");
  return l;
}

LinearDODS LinearDODS::parse(std::string_view alpha, std::string_view beta, std::string_view gamma,
                             std::string_view g, Interval domain) {
  return make(Expr::parse(alpha, kX), Expr::parse(beta, kX), Expr::parse(gamma, kX), Expr::parse(g, kX), domain);
}

LinearDODS LinearDODS::from_system(const DODSystem& system, Interval domain) {
  if (!system.explicit_rhs() || !system.explicit_delay()) throw ConfigError("linear DODS: system must be explicit");
  if (system.g().depends_on("y") || system.g().depends_on("y_"))
    throw ConfigError("linear DODS: the delay must depend on x only");
  const std::vector<std::string> st{"x", "y", "y_"};
  const Expr f = system.f_composed();
  auto at = [&](double y, double ym) {
    return f.substitute({{"y", Expr::constant(y, kX)}, {"y_", Expr::constant(ym, kX)}}, kX);
  };
  const Expr gamma = at(0, 0);
  const Expr alpha = at(1, 0) - gamma;
  const Expr beta = at(0, 1) - gamma;
  const Expr g = system.g().substitute({{"y", Expr::constant(0, kX)}, {"y_", Expr::constant(0, kX)}}, kX);
  HaltonSampler h(3, 7);
  for (int i = 0; i < 40; ++i) {
    const auto u = h.next();
    const double x = domain.lo + domain.width() * u[0], y = 4 * u[1] - 2, ym = 4 * u[2] - 2;
    const double v[3] = {x, y, ym};
    const double full = f.evaluate<double>(std::span<const double>(v, 3));
    const double lin = val(alpha, x) * y + val(beta, x) * ym + val(gamma, x);
    if (!(std::abs(full - lin) <= 1e-9 * (1 + std::abs(full))))
      throw ConfigError("linear DODS: right-hand side is not affine in (y, y_)");
  }
  return make(alpha, beta, gamma, g, domain);
}

DODSystem LinearDODS::system() const {
  const std::vector<std::string> rv{"x", "y", "x_", "y_"};
  const Expr y = Expr::variable("y", rv), ym = Expr::variable("y_", rv);
  const Expr f = alpha.rebase(rv) * y + beta.rebase(rv) * ym + gamma.rebase(rv);
  return DODSystem::make(f, g.rebase({"x", "y", "y_"}), domain, "linear");
}

bool LinearDODS::homogeneous() const {
  for (double x : linspace(domain.lo, domain.hi, 51))
    if (val(gamma, x) != 0.0) return false;
  return true;
}

double k_function(const LinearDODS& lin, double x) {
  const double b = val(lin.beta, x);
  if (b == 0.0 || !std::isfinite(b)) {
    std::ostringstream os;
    os << "K undefined: beta(" << x << ") = " << b;
    throw DomainError(os.str());
  }
  const double gx = val(lin.g, x);
  return val(lin.alpha, x) - d1(lin.g, x) * val(lin.alpha, gx) - d1(lin.beta, x) / b;
}

CompatibilityReport compatibility(const LinearDODS& lin, int grid, double tol) {
  if (grid < 20) throw ConfigError("compatibility needs at least 20 grid points");
  CompatibilityReport r;
  for (double x : linspace(lin.domain.lo, lin.domain.hi, grid)) {
    const double gx = val(lin.g, x), gd = d1(lin.g, x), gdd = d2(lin.g, x);
    const double d = std::abs(safe_k(lin, gx) * gd * gd - gdd - safe_k(lin, x) * gd);
    if (!std::isfinite(d)) {
      ++r.skipped;
      continue;
    }
    if (d > r.max_defect) {
      r.max_defect = d;
      r.worst_x = x;
    }
  }
  r.holds = r.max_defect <= tol && r.skipped < grid;
  return r;
}

// ---------------------------------------------------------------------------

ExtraSymmetryReport extra_symmetry(const LinearDODS& lin, double tol, int grid) {
  ExtraSymmetryReport rep;
  rep.compatibility = compatibility(lin, grid, tol);
  if (!rep.compatibility.holds) {
    std::ostringstream os;
    os << "compatibility condition fails: max defect " << rep.compatibility.max_defect << " at x = "
       << rep.compatibility.worst_x;
    rep.diagnostics.push_back(os.str());
    return rep;
  }
  const double lo = lin.domain.lo, hi = lin.domain.hi;
  const double a = lowest_delay(lin.g, lo, hi);
  const auto xs = nodes(a, lo, hi, 4001);
  std::vector<double> kv(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    kv[i] = safe_k(lin, xs[i]);
    if (!std::isfinite(kv[i])) {
      std::ostringstream os;
      os << "K is not finite at x = " << xs[i] << "; xi cannot be integrated";
      rep.diagnostics.push_back(os.str());
      return rep;
    }
  }
  const auto I = cumulative([&](double x) { return safe_k(lin, x); }, xs, lo);
  std::vector<double> xv(xs.size()), xs_slope(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xv[i] = std::exp(I[i]);
    xs_slope[i] = kv[i] * xv[i];
  }
  auto xi_tab = std::make_shared<const Tabulated>("xi", xs, xv, xs_slope);

  // The ODE for xi does not imply the functional equation: check it.
  double worst = 0.0;
  for (double x : linspace(lo, hi, grid)) {
    const double lhs = xi_tab->value(val(lin.g, x)), rhs = d1(lin.g, x) * xi_tab->value(x);
    const double d = std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    worst = std::max(worst, std::isfinite(d) ? d : std::numeric_limits<double>::infinity());
  }
  rep.functional_defect = worst;
  if (!(worst <= tol)) {
    std::ostringstream os;
    os << "xi = exp(int K) violates xi(g(x)) = g'(x) xi(x): max relative defect " << worst
       << "; the equation is homogeneous in xi, so no rescaling repairs it";
    rep.diagnostics.push_back(os.str());
    return rep;
  }

  ExtraSymmetry z;
  z.xi = table_expr(xi_tab);
  z.A = z.xi * lin.alpha;
  Expr B = Expr::constant(0.0, kX);
  if (!lin.homogeneous()) {
    const LinearDODS l = lin;
    const Expr A = z.A;
    DelayProblem p;
    p.rhs = [l, xi_tab, A](double x, double b, double, double bm) {
      const double gam = val(l.gamma, x);
      return val(l.alpha, x) * b + val(l.beta, x) * bm + gam * xi_tab->slope(x) + d1(l.gamma, x) * xi_tab->value(x) -
             gam * val(A, x);
    };
    p.delay = [l](double x, double, double) { return val(l.g, x); };
    p.delay_residual = [l](double x, double, double s, double) { return s - val(l.g, x); };
    ScalarWithSlope zero = [](double) { return std::pair<double, double>{0.0, 0.0}; };
    auto sol = std::make_shared<const PiecewiseSolution>(solve(p, zero, {val(lin.g, lo), lo}, hi));
    z.B = *sol;
    B = Expr::external(std::make_shared<SolutionFunction>(sol, false), Expr::variable("x", kX));
    rep.diagnostics.push_back("B is the particular solution with B = 0 on the initial interval");
  }
  z.as_field.xi = z.xi.rebase(kXY);
  z.as_field.eta = z.A.rebase(kXY) * Expr::variable("y", kXY) + B.rebase(kXY);
  z.as_field.label = "Z";
  rep.symmetry = std::move(z);
  return rep;
}

HomogenizedSystem homogenize(const LinearDODS& lin, const Expr& sigma, int grid) {
  const Expr s = sigma.rebase(kX);
  double worst = 0.0;
  for (double x : linspace(lin.domain.lo, lin.domain.hi, grid)) {
    const double r = d1(s, x) - (val(lin.alpha, x) * val(s, x) + val(lin.beta, x) * val(s, val(lin.g, x)) +
                                 val(lin.gamma, x));
    worst = std::max(worst, std::isfinite(r) ? std::abs(r) : std::numeric_limits<double>::infinity());
  }
  if (!(worst <= 1e-8)) {
    std::ostringstream os;
    os << "sigma is not a particular solution: residual " << worst;
    throw NotAParticularSolution(os.str());
  }
  HomogenizedSystem h;
  h.system = LinearDODS::make(lin.alpha, lin.beta, Expr::constant(0.0, kX), lin.g, lin.domain);
  h.sigma = s;
  h.residual = worst;
  return h;
}

// ---------------------------------------------------------------------------

MonotoneMap::MonotoneMap(std::vector<double> x, std::vector<double> image, std::vector<double> slope)
    : x_(std::move(x)), xb_(std::move(image)), s_(std::move(slope)) {
  for (std::size_t i = 1; i < x_.size(); ++i) {
    if (!(x_[i] > x_[i - 1]) || !(xb_[i] > xb_[i - 1])) {
      std::ostringstream os;
      os << "change of variables is not strictly increasing near x = " << x_[i];
      throw NonMonotoneTransform(os.str());
    }
  }
}

namespace {
double hermite_at(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& s, double t,
                  bool invert) {
  // Invert by swapping roles; slopes become reciprocals.
  const auto& X = invert ? y : x;
  const auto& Y = invert ? x : y;
  if (!(t >= X.front() - 1e-12 && t <= X.back() + 1e-12)) return kNaN;
  t = std::clamp(t, X.front(), X.back());
  auto it = std::upper_bound(X.begin(), X.end(), t);
  std::size_t i = it == X.end() ? X.size() - 2 : static_cast<std::size_t>(it - X.begin()) - 1;
  const double h = X[i + 1] - X[i], u = (t - X[i]) / h;
  const double m0 = invert ? 1.0 / s[i] : s[i], m1 = invert ? 1.0 / s[i + 1] : s[i + 1];
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u), h01 = u * u * (3 - 2 * u),
               h11 = u * u * (u - 1);
  return h00 * Y[i] + h10 * h * m0 + h01 * Y[i + 1] + h11 * h * m1;
}
}  // namespace

double MonotoneMap::forward(double x) const { return hermite_at(x_, xb_, s_, x, false); }
double MonotoneMap::inverse(double xbar) const { return hermite_at(x_, xb_, s_, xbar, true); }
double MonotoneMap::slope(double x) const {
  if (!(x >= x_.front() - 1e-12 && x <= x_.back() + 1e-12)) return kNaN;
  std::vector<double> a = x_, b = xb_, c = s_;
  Hermite h(std::move(a), std::move(b), std::move(c));
  return h.prime(std::clamp(x, x_.front(), x_.back()));
}

// ---------------------------------------------------------------------------

CanonicalForm canonical_form(const LinearDODS& lin, CanonicalMode mode, double tol, int grid) {
  CanonicalForm out;
  const double lo = lin.domain.lo, hi = lin.domain.hi;
  const auto rep = extra_symmetry(lin, tol);
  out.tag = rep.symmetry ? "compatible" : "incompatible";
  out.diagnostics = rep.diagnostics;

  // Range needed for the history: g over the domain, and g of that for the
  // alpha integral evaluated at delayed points.
  const double a1 = lowest_delay(lin.g, lo, hi);
  const double a2 = lowest_delay(lin.g, a1, hi);
  const auto wide = nodes(a2, lo, hi, grid);
  const auto A = cumulative([&](double x) { return val(lin.alpha, x); }, wide, lo);
  std::vector<double> av(wide.size());
  for (std::size_t i = 0; i < wide.size(); ++i) av[i] = val(lin.alpha, wide[i]);
  auto a_tab = std::make_shared<const Tabulated>("a", wide, A, av);
  {
    std::vector<double> e(wide.size()), es(wide.size());
    for (std::size_t i = 0; i < wide.size(); ++i) {
      e[i] = std::exp(-A[i]);
      es[i] = -av[i] * e[i];
    }
    out.y_scale = table_expr(std::make_shared<const Tabulated>("exp(-int alpha)", wide, e, es));
  }
  // After ybar = exp(-int alpha) y:  ybar' = bt(x) ybar_ + gt(x).
  auto bt = [&](double x) {
    return val(lin.beta, x) * std::exp(a_tab->value(val(lin.g, x)) - a_tab->value(x));
  };
  auto gt = [&](double x) { return val(lin.gamma, x) * std::exp(-a_tab->value(x)); };

  const auto xs = nodes(a1, lo, hi, grid);
  const auto dom_begin = std::lower_bound(xs.begin(), xs.end(), lo) - xs.begin();
  auto sample_over_domain = [&](const std::function<double(std::size_t)>& f) {
    std::vector<double> xb, v;
    for (std::size_t i = static_cast<std::size_t>(dom_begin); i < xs.size(); ++i) {
      xb.push_back(out.x_map.forward(xs[i]));
      v.push_back(f(i));
    }
    return std::pair{xb, v};
  };
  auto finish = [&](Expr beta, Expr gamma, Expr g) {
    const Interval d{out.x_map.forward(lo), out.x_map.forward(hi)};
    out.system = LinearDODS::make(Expr::constant(0.0, kX), beta, gamma, g, d);
  };

  if (rep.symmetry) {
    const Expr& xi_e = rep.symmetry->xi;
    // The y_ coefficient after xbar = int dx/xi is xi bt, a constant.
    double mean = 0.0;
    std::vector<double> c;
    for (double x : linspace(lo, hi, 200)) c.push_back(val(xi_e, x) * bt(x));
    for (double v : c) mean += v / static_cast<double>(c.size());
    for (double v : c) out.coefficient_spread = std::max(out.coefficient_spread, std::abs(v - mean));
    out.coefficient = mean;
    const double lambda = std::abs(mean);
    const auto u = cumulative([&](double x) { return 1.0 / val(xi_e, x); }, xs, lo);
    std::vector<double> xb(xs.size()), sl(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      xb[i] = lo + lambda * u[i];
      sl[i] = lambda / val(xi_e, xs[i]);
    }
    out.x_map = MonotoneMap(xs, xb, sl);
    out.C = out.x_map.forward(lo) - out.x_map.forward(val(lin.g, lo));
    out.form = "canonical1";
    if (mean < 0) out.diagnostics.push_back("negative y_ coefficient kept as -1 (rescaling would reverse x)");
    auto [hx, hv] = sample_over_domain([&](std::size_t i) { return val(xi_e, xs[i]) * gt(xs[i]) / lambda; });
    std::ostringstream g;
    g.precision(17);
    g << "x - " << out.C;
    finish(Expr::constant(mean < 0 ? -1.0 : 1.0, kX), table_expr(std::make_shared<const Tabulated>("h", hx, hv)),
           Expr::parse(g.str(), kX));
    return out;
  }

  if (mode == CanonicalMode::Canonical2) {
    // Abel function phi(g(x)) = phi(x) - d, seeded on [g(lo), lo] by a cubic
    // whose end slopes make phi continuously differentiable at lo.
    const double g0 = val(lin.g, lo), d = lo - g0, gd0 = d1(lin.g, lo);
    for (double x : linspace(lo, hi, 400))
      if (!(d1(lin.g, x) > 0)) throw NonMonotoneTransform("delay straightening needs g' > 0 on the domain");
    const double p = 2.0 / (1.0 + gd0);
    const Hermite seed({g0, lo}, {g0, lo}, {p, p * gd0});
    std::function<std::pair<double, double>(double)> phi = [&](double x) -> std::pair<double, double> {
      if (x <= lo) {
        const double t = std::max(x, g0);
        return {seed(t), seed.prime(t)};
      }
      const auto [v, s] = phi(val(lin.g, x));
      return {v + d, s * d1(lin.g, x)};
    };
    std::vector<double> xb(xs.size()), sl(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) std::tie(xb[i], sl[i]) = phi(xs[i]);
    // Only [g(lo), hi] is covered by the construction.
    std::vector<double> xr, xbr, slr;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (xs[i] >= g0) {
        xr.push_back(xs[i]);
        xbr.push_back(xb[i]);
        slr.push_back(sl[i]);
      }
    out.x_map = MonotoneMap(xr, xbr, slr);
    out.C = d;
    out.form = "canonical2";
    auto [fx, fv] = sample_over_domain([&](std::size_t i) { return bt(xs[i]) / phi(xs[i]).second; });
    auto [hx, hv] = sample_over_domain([&](std::size_t i) { return gt(xs[i]) / phi(xs[i]).second; });
    std::ostringstream g;
    g.precision(17);
    g << "x - " << d;
    finish(table_expr(std::make_shared<const Tabulated>("f", fx, fv)),
           table_expr(std::make_shared<const Tabulated>("h", hx, hv)), Expr::parse(g.str(), kX));
    return out;
  }

  // Canonical3: xbar = int |bt| dx absorbs the y_ coefficient.
  double sign = 0.0;
  for (double x : xs) {
    const double b = bt(x);
    if (!std::isfinite(b) || b == 0.0) throw NonMonotoneTransform("beta vanishes: int beta dx is not monotone");
    if (sign == 0.0) sign = b > 0 ? 1.0 : -1.0;
    if (b * sign < 0) throw NonMonotoneTransform("beta changes sign: int beta dx is not monotone");
  }
  if (sign < 0) out.diagnostics.push_back("negative y_ coefficient kept as -1 (absorbing it would reverse x)");
  const auto u = cumulative([&](double x) { return std::abs(bt(x)); }, xs, lo);
  std::vector<double> xb(xs.size()), sl(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xb[i] = lo + u[i];
    sl[i] = std::abs(bt(xs[i]));
  }
  out.x_map = MonotoneMap(xs, xb, sl);
  out.form = "canonical3";
  auto [gx, gv] = sample_over_domain([&](std::size_t i) { return out.x_map.forward(val(lin.g, xs[i])); });
  auto [gx2, gs] = sample_over_domain([&](std::size_t i) {
    const double x = xs[i];
    return std::abs(bt(val(lin.g, x))) * d1(lin.g, x) / std::abs(bt(x));
  });
  auto [hx, hv] = sample_over_domain([&](std::size_t i) { return gt(xs[i]) / std::abs(bt(xs[i])); });
  auto gtab = std::make_shared<const Tabulated>("gbar", gx, gv, gs);
  finish(Expr::constant(sign, kX), table_expr(std::make_shared<const Tabulated>("h", hx, hv)), table_expr(gtab));
  return out;
}

// ---------------------------------------------------------------------------

double superposition_check(const DODSystem& system, const std::vector<PiecewiseSolution>& sols,
                           const std::vector<double>& coeffs, int n) {
  if (sols.empty() || sols.size() != coeffs.size()) throw ConfigError("superposition_check: one coefficient per solution");
  double history_lo = -std::numeric_limits<double>::infinity(), lo = history_lo;
  double hi = std::numeric_limits<double>::infinity();
  std::vector<double> avoid;
  for (const auto& s : sols) {
    history_lo = std::max(history_lo, s.initial_interval.lo);
    lo = std::max(lo, s.initial_interval.hi);
    hi = std::min(hi, s.x_end());
    avoid.insert(avoid.end(), s.breakpoints.begin(), s.breakpoints.end());
  }
  ScalarWithSlope combo = [&](double x) {
    double y = 0, yd = 0;
    for (std::size_t i = 0; i < sols.size(); ++i) {
      const auto [v, s] = sols[i].evaluate(x);
      y += coeffs[i] * v;
      yd += coeffs[i] * s;
    }
    return std::pair<double, double>{y, yd};
  };
  return residual(to_problem(system), combo, history_lo, lo, hi, n, avoid);
}

double superposition_check(const LinearDODS& lin, const std::vector<PiecewiseSolution>& sols,
                           const std::vector<double>& coeffs, int n) {
  return superposition_check(lin.system(), sols, coeffs, n);
}

}  // namespace dods
