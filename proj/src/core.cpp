#include "dods/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dods/numerics.hpp"

namespace dods {

const std::vector<std::string>& jet_variables() {
  static const std::vector<std::string> v{"x", "y", "x_", "y_", "yd"};
  return v;
}
const std::vector<std::string>& state_variables() {
  static const std::vector<std::string> v{"x", "y", "y_"};
  return v;
}
const std::vector<std::string>& plane_variables() {
  static const std::vector<std::string> v{"x", "y"};
  return v;
}

namespace {
const std::vector<std::string>& rhs_variables() {
  static const std::vector<std::string> v{"x", "y", "x_", "y_"};
  return v;
}
}  // namespace

VectorField VectorField::parse(std::string_view xi, std::string_view eta, std::string label) {
  return {Expr::parse(xi, plane_variables()), Expr::parse(eta, plane_variables()), std::move(label)};
}

std::string VectorField::to_string() const {
  return "(" + xi.to_string() + ") d/dx + (" + eta.to_string() + ") d/dy";
}

VectorField linear_combination(const std::vector<double>& coeffs, const std::vector<VectorField>& fields,
                               std::string label) {
  Expr xi = Expr::constant(0.0, plane_variables());
  Expr eta = Expr::constant(0.0, plane_variables());
  for (std::size_t i = 0; i < fields.size() && i < coeffs.size(); ++i) {
    if (coeffs[i] == 0.0) continue;
    Expr c = Expr::constant(coeffs[i], plane_variables());
    xi = xi + c * fields[i].xi.rebase(plane_variables());
    eta = eta + c * fields[i].eta.rebase(plane_variables());
  }
  return {xi, eta, std::move(label)};
}

// ---------------------------------------------------------------------------

DODSystem DODSystem::make(const Expr& f, const Expr& g, Interval domain, std::string label) {
  DODSystem s;
  s.f_ = f.rebase(rhs_variables());
  s.g_ = g.rebase(state_variables());
  s.domain = domain;
  s.box.x = domain;
  s.label = std::move(label);
  s.build_residuals();
  return s;
}

DODSystem DODSystem::make(std::string_view f, std::string_view g, Interval domain, std::string label) {
  return make(Expr::parse(f, rhs_variables()), Expr::parse(g, state_variables()), domain, std::move(label));
}

DODSystem DODSystem::with_implicit_delay(const Expr& f, const Expr& G, Interval domain, std::string label) {
  DODSystem s;
  s.f_ = f.rebase(rhs_variables());
  s.E2_ = G.rebase(jet_variables());
  s.domain = domain;
  s.box.x = domain;
  s.label = std::move(label);
  s.build_residuals();
  return s;
}

DODSystem DODSystem::implicit(const Expr& F, const Expr& G, Interval domain, std::string label) {
  DODSystem s;
  s.E1_ = F.rebase(jet_variables());
  s.E2_ = G.rebase(jet_variables());
  s.domain = domain;
  s.box.x = domain;
  s.label = std::move(label);
  s.build_residuals();
  return s;
}

void DODSystem::build_residuals() {
  const auto& jv = jet_variables();
  if (f_) E1_ = Expr::variable("yd", jv) - f_->rebase(jv);
  if (g_) E2_ = Expr::variable("x_", jv) - g_->rebase(jv);
  if (E2_.depends_on("yd")) throw ConfigError("delay relation must not involve yd");
}

const Expr& DODSystem::f() const {
  if (!f_) throw Error("system has an implicit DODE");
  return *f_;
}

const Expr& DODSystem::g() const {
  if (!g_) throw Error("system has an implicit delay relation");
  return *g_;
}

Expr DODSystem::f_composed() const {
  return f().substitute({{"x_", g()}}, state_variables());
}

bool DODSystem::delay_uses_history() const { return E2_.depends_on("y_"); }

double DODSystem::delay_residual(double x, double y, double s, double ys, EvalMode mode) const {
  const double v[5] = {x, y, s, ys, 0.0};
  return E2_.evaluate<double>(std::span<const double>(v, 5), mode);
}

double DODSystem::resolve_delay(double x, double y, double y_minus, EvalMode mode) const {
  if (g_) {
    const double v[3] = {x, y, y_minus};
    const double xm = g_->evaluate<double>(std::span<const double>(v, 3), mode);
    if (!(xm < x)) throw DelayOrderError("delay relation gives x_ >= x");
    return xm;
  }
  auto h = [&](double s) {
    try {
      return delay_residual(x, y, s, y_minus, EvalMode::Checked);
    } catch (const DomainError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  auto roots = bracket_roots(h, x - delta_max, x - 1e-12, 400, 1e-15, true);
  if (roots.empty()) throw DelayOrderError("no admissible root of the delay relation below x");
  const double xm = roots.front();
  if (mode == EvalMode::Checked) delay_residual(x, y, xm, y_minus, EvalMode::Checked);
  return xm;
}

double DODSystem::resolve_ydot(double x, double y, double x_minus, double y_minus, EvalMode mode) const {
  if (f_) {
    const double v[4] = {x, y, x_minus, y_minus};
    return f_->evaluate<double>(std::span<const double>(v, 4), mode);
  }
  auto F = [&](double u) {
    const double v[5] = {x, y, x_minus, y_minus, u};
    return E1_.evaluate<double>(std::span<const double>(v, 5), EvalMode::Unchecked);
  };
  // Scan the slope through its angle so that all real slopes are covered.
  auto H = [&](double theta) { return F(std::tan(theta)); };
  const double lim = M_PI / 2 - 1e-9;
  auto roots = bracket_roots(H, -lim, lim, 2000, 1e-15);
  if (roots.empty()) throw ManifoldError("implicit DODE has no real solution for ydot");
  const double secant = (y - y_minus) / (x - x_minus);
  double best = std::tan(roots.front());
  for (double r : roots) {
    const double u = std::tan(r);
    if (std::abs(u - secant) < std::abs(best - secant)) best = u;
  }
  // Polish in the slope variable itself.
  for (int it = 0; it < 3; ++it) {
    const double v[5] = {x, y, x_minus, y_minus, best};
    std::vector<Dual<double>> d(v, v + 5);
    d[4].partial = 1.0;
    auto r = E1_.evaluate<Dual<double>>(std::span<const Dual<double>>(d), EvalMode::Unchecked);
    if (!std::isfinite(r.partial) || r.partial == 0.0) break;
    const double step = r.value / r.partial;
    if (!std::isfinite(step) || std::abs(step) > 1e-6 * (1 + std::abs(best))) break;
    best -= step;
  }
  if (mode == EvalMode::Checked) {
    const double v[5] = {x, y, x_minus, y_minus, best};
    E1_.evaluate<double>(std::span<const double>(v, 5), EvalMode::Checked);
  }
  return best;
}

DODSystem DODSystem::with_rhs_shift(const Expr& delta) const {
  DODSystem s = *this;
  const auto& jv = jet_variables();
  Expr d = delta.rebase(jv);
  if (s.f_) {
    s.f_ = (*s.f_ + delta.rebase(rhs_variables())).rebase(rhs_variables());
  } else {
    s.E1_ = E1_.substitute({{"yd", Expr::variable("yd", jv) - d}}, jv);
  }
  s.build_residuals();
  return s;
}

// ---------------------------------------------------------------------------

JetPoint jet_on_manifold(const DODSystem& system, double x, double y, double y_minus) {
  JetPoint j;
  j.x = x;
  j.y = y;
  j.y_minus = y_minus;
  j.x_minus = system.resolve_delay(x, y, y_minus, EvalMode::Checked);
  j.ydot = system.resolve_ydot(x, y, j.x_minus, y_minus, EvalMode::Checked);
  if (!std::isfinite(j.ydot)) throw DomainError("non-finite ydot");
  return j;
}

ManifoldPartials manifold_partials(const DODSystem& system, const JetPoint& jet) {
  const auto c = jet.coords();
  auto grad = [&](const Expr& e) {
    std::array<double, 5> out{};
    for (std::size_t k = 0; k < 5; ++k) {
      std::array<Dual<double>, 5> d;
      for (std::size_t i = 0; i < 5; ++i) d[i] = Dual<double>{c[i], i == k ? 1.0 : 0.0};
      out[k] = e.evaluate<Dual<double>>(std::span<const Dual<double>>(d), EvalMode::Unchecked).partial;
    }
    return out;
  };
  const auto g1 = grad(system.E1());
  const auto g2 = grad(system.E2());
  // Free coordinates (x, y, y_) are jet indices 0, 1, 3.
  constexpr std::size_t free_idx[3] = {0, 1, 3};
  ManifoldPartials p{};
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t v = free_idx[k];
    p.x_minus[k] = -g2[v] / g2[2];
    p.ydot[k] = -(g1[v] + g1[2] * p.x_minus[k]) / g1[4];
  }
  return p;
}

std::vector<JetPoint> sample_manifold(const DODSystem& system, int count, std::uint64_t seed,
                                      int max_attempts_factor) {
  const auto& b = system.box;
  if (!(b.x.width() > 0) || !(b.y.width() > 0) || !(b.y_minus.width() > 0))
    throw ConfigError("degenerate sampling box");
  HaltonSampler halton(3, seed);
  std::vector<JetPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  const long max_attempts = static_cast<long>(count) * max_attempts_factor;
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
    auto u = halton.next();
    const double x = b.x.lo + u[0] * b.x.width();
    const double y = b.y.lo + u[1] * b.y.width();
    const double ym = b.y_minus.lo + u[2] * b.y_minus.width();
    try {
      JetPoint j = jet_on_manifold(system, x, y, ym);
      if (!std::isfinite(j.x_minus) || !std::isfinite(j.ydot)) continue;
      out.push_back(j);
    } catch (const DelayOrderError&) {
    } catch (const DomainError&) {
    } catch (const ManifoldError&) {
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

bool ValidationReport::ok() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

ValidationReport validate_system(const DODSystem& system, int sample_size, std::uint64_t seed) {
  if (sample_size < 10) throw ConfigError("validate_system needs at least 10 samples");
  ValidationReport report;
  const auto& b = system.box;
  HaltonSampler halton(3, seed);

  ValidationCheck causal{kCheckCausal, true, {}, std::nullopt};
  ValidationCheck dep{kCheckDelayDependence, false, {}, std::nullopt};
  ValidationCheck nonconst{kCheckNonConstantDelay, false, {}, std::nullopt};

  double max_dep = 0.0;
  bool first = true;
  double first_xm = 0.0;
  bool delay_varies = false;
  int used = 0;
  const int max_attempts = sample_size * 50;
  for (int attempt = 0; attempt < max_attempts && used < sample_size; ++attempt) {
    auto u = halton.next();
    const double x = b.x.lo + u[0] * b.x.width();
    const double y = b.y.lo + u[1] * b.y.width();
    const double ym = b.y_minus.lo + u[2] * b.y_minus.width();
    JetPoint j;
    if (system.explicit_delay()) {
      const double v[3] = {x, y, ym};
      double xm;
      try {
        xm = system.g().evaluate<double>(std::span<const double>(v, 3), EvalMode::Checked);
      } catch (const DomainError&) {
        continue;
      }
      if (!(xm < x)) {
        if (causal.passed) {
          causal.passed = false;
          causal.witness = JetPoint{x, y, xm, ym, 0.0};
          std::ostringstream os;
          os << "x_ < x violated: g = " << xm << " at x = " << x;
          causal.detail = os.str();
        }
        ++used;
        continue;
      }
      try {
        j = JetPoint{x, y, xm, ym, system.resolve_ydot(x, y, xm, ym, EvalMode::Checked)};
      } catch (const Error&) {
        continue;
      }
    } else {
      try {
        j = jet_on_manifold(system, x, y, ym);
      } catch (const Error&) {
        continue;
      }
    }
    ++used;
    auto p = manifold_partials(system, j);
    if (std::isfinite(p.ydot[2]) && std::abs(p.ydot[2]) > max_dep) {
      max_dep = std::abs(p.ydot[2]);
      dep.witness = j;
    }
    if (first) {
      first_xm = j.x_minus;
      first = false;
      nonconst.witness = j;
    } else if (std::abs(j.x_minus - first_xm) > 1e-12) {
      delay_varies = true;
    }
  }
  report.samples = used;
  dep.passed = max_dep > 1e-12;
  dep.detail = dep.passed ? "max |df/dy_| = " + std::to_string(max_dep) : "df/dy_ == 0 on the sample";
  nonconst.passed = delay_varies;
  nonconst.detail = delay_varies ? "g varies over the sample" : "g == const on the sample";
  if (causal.passed) causal.detail = "x_ < x at every sampled point";
  if (used == 0) {
    causal.passed = false;
    causal.detail = "no admissible sample point";
  }
  report.checks = {dep, causal, nonconst};
  return report;
}

}  // namespace dods
