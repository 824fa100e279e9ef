#include "dods/invariant_solutions.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "dods/errors.hpp"
#include "dods/numerics.hpp"

namespace dods {

namespace {

double get(const Constants& c, const std::string& k, double fallback = 0.0) {
  auto it = c.find(k);
  return it == c.end() ? fallback : it->second;
}

/// Parse `text` over `vars` plus every name in `c`, then bind those names.
Expr bound(const std::string& text, const std::vector<std::string>& vars, const Constants& c) {
  std::vector<std::string> all = vars;
  for (const auto& [k, _] : c)
    if (std::find(all.begin(), all.end(), k) == all.end()) all.push_back(k);
  Constants only;
  for (const auto& [k, v] : c)
    if (std::find(vars.begin(), vars.end(), k) == vars.end()) only.emplace(k, v);
  return Expr::parse(text, all).bind(only).rebase(vars);
}

/// Constraint residuals written as text over the unknowns, free constants and
/// family constants.
auto texts(std::vector<std::string> t) {
  return [t](const ResolvedParams& rp, const std::vector<std::string>& vars) {
    std::vector<Expr> out;
    for (const auto& s : t) out.push_back(bound(s, vars, rp.constants));
    return out;
  };
}

Expr apply_fn(const ResolvedParams& rp, const std::string& name, const Expr& arg) {
  const Expr& f = rp.functions.at(name);
  return f.substitute({{f.variables().at(0), arg}}, arg.variables());
}

Interval fixed(double lo, double hi) { return {lo, hi}; }

const std::vector<std::string>& rhs_vars() {
  static const std::vector<std::string> v{"x", "y", "x_", "y_"};
  return v;
}

InvariantAnsatz translation_ansatz(std::string family, std::vector<std::string> constraints,
                                   std::vector<std::string> text) {
  InvariantAnsatz a;
  a.family_id = std::move(family);
  a.subalgebra = "X1";
  a.unknowns = {"B"};
  a.free_constants = {{"A", 1.0}};
  a.h = "A";
  a.k = "x - B";
  a.J1 = "y";
  a.J2 = "x - x_";
  a.constraint_text = std::move(text);
  a.constraints = texts(std::move(constraints));
  a.admissible = [](const Constants& c) { return get(c, "B") > 0; };
  a.base_domain = [](const Constants&) { return fixed(0, 10); };
  return a;
}

InvariantAnsatz dilation_ansatz(std::string family, std::string sub, std::string h, std::string J1,
                                std::vector<std::string> constraints) {
  InvariantAnsatz a;
  a.family_id = std::move(family);
  a.subalgebra = std::move(sub);
  a.unknowns = {"A", "B"};
  a.h = std::move(h);
  a.k = "B*x";
  a.J1 = std::move(J1);
  a.J2 = "x_/x";
  a.constraint_text = constraints;
  a.constraints = texts(std::move(constraints));
  a.admissible = [](const Constants& c) { return get(c, "B") > 0 && get(c, "B") < 1; };
  a.base_domain = [](const Constants&) { return fixed(1, 10); };
  a.domain_note = "x > 0, 0 < B < 1";
  return a;
}

/// Ansatz for X1 + X3 of the sl(2) realizations: x_ = (x - B)/(1 + B x) on the
/// branch 1 + B x > 0.
InvariantAnsatz rotation_ansatz(std::string family, std::string h, std::string J1,
                                std::vector<std::string> constraints) {
  InvariantAnsatz a;
  a.family_id = std::move(family);
  a.subalgebra = "X1+X3";
  a.unknowns = {"A", "B"};
  a.h = std::move(h);
  a.k = "(x - B)/(1 + B*x)";
  a.J1 = std::move(J1);
  a.J2 = "(x - x_)/(1 + x*x_)";
  a.constraint_text = constraints;
  a.constraints = texts(std::move(constraints));
  a.admissible = [](const Constants& c) { return get(c, "B") > 0; };
  a.base_domain = [](const Constants&) { return fixed(0, 10); };
  a.branch = [](double x, const Constants& c) { return 1 + get(c, "B") * x > 0; };
  a.domain_note = "branch sign(1 + B x) = +1";
  return a;
}

std::vector<InvariantAnsatz> make_catalog(std::string_view id) {
  std::vector<InvariantAnsatz> out;
  if (id == "A2,2") {
    InvariantAnsatz a;
    a.family_id = "A2,2";
    a.subalgebra = "X2";
    a.unknowns = {"A", "B"};
    a.h = "A*x";
    a.k = "B*x";
    a.J1 = "y/x";
    a.J2 = "x_/x";
    a.constraint_text = {"A = f(A)", "B = g(A)"};
    a.constraints = [](const ResolvedParams& rp, const std::vector<std::string>& vars) {
      const Expr A = Expr::variable("A", vars), B = Expr::variable("B", vars);
      return std::vector<Expr>{A - apply_fn(rp, "f", A), B - apply_fn(rp, "g", A)};
    };
    a.admissible = [](const Constants& c) { return get(c, "B") > 0 && get(c, "B") < 1; };
    a.base_domain = [](const Constants&) { return fixed(1, 10); };
    a.orbit_identity = {{"alpha", 0.0}};
    a.orbit_h = "A*x + alpha";
    a.orbit_k = "B*x";
    a.domain_note = "x > 0, 0 < B < 1";
    out.push_back(a);
  } else if (id == "A2,4") {
    InvariantAnsatz a;
    a.family_id = "A2,4";
    a.subalgebra = "X1+aX2";
    a.unknowns = {"a", "B"};
    a.free_constants = {{"A", 0.0}};
    a.h = "a*x + A";
    a.k = "x - B";
    a.J1 = "y - a*x";
    a.J2 = "x - x_";
    a.constraint_text = {"a = f(a)", "B = g(B a)"};
    a.constraints = [](const ResolvedParams& rp, const std::vector<std::string>& vars) {
      const Expr av = Expr::variable("a", vars), B = Expr::variable("B", vars);
      return std::vector<Expr>{av - apply_fn(rp, "f", av), B - apply_fn(rp, "g", B * av)};
    };
    a.admissible = [](const Constants& c) { return get(c, "B") > 0; };
    a.base_domain = [](const Constants&) { return fixed(0, 10); };
    out.push_back(a);
  } else if (id == "A3,2") {
    out.push_back(translation_ansatz("A3,2", {"B"}, {"B = C2 * 0^(1/a) = 0"}));
    for (int sgn : {1, -1}) {
      InvariantAnsatz a;
      a.family_id = "A3,2";
      a.subalgebra = sgn > 0 ? "X1+X2" : "X1-X2";
      a.unknowns = {"B"};
      a.free_constants = {{"A", 0.0}};
      a.h = sgn > 0 ? "x + A" : "-x + A";
      a.k = "x - B";
      a.J1 = sgn > 0 ? "y - x" : "y + x";
      a.J2 = "x - x_";
      const std::string b = sgn > 0 ? "B - C2*B^(1/a)" : "B - C2*(-B)^(1/a)";
      a.constraint_text = {"C1 = 1", b + " = 0"};
      a.constraints = texts({"C1 - 1", b});
      a.admissible = [](const Constants& c) { return get(c, "B") > 0; };
      a.base_domain = [](const Constants&) { return fixed(0, 10); };
      a.orbit_identity = {{"alpha", static_cast<double>(sgn)}};
      a.orbit_h = "alpha*x + A";
      a.orbit_k = "x - B";
      out.push_back(a);
    }
    auto x3 = dilation_ansatz("A3,2", "X3", "A*x^a", "y/x^a",
                              {"a - C1*(1 - B^a)/(1 - B)", "(1 - B) - C2*(A*(1 - B^a))^(1/a)"});
    x3.orbit_identity = {{"alpha", 0.0}, {"beta", 0.0}};
    x3.orbit_h = "alpha + A*(x - beta)^a";
    x3.orbit_k = "beta + B*(x - beta)";
    x3.base_domain = [](const Constants& c) { return fixed(1 + get(c, "beta"), 10 + get(c, "beta")); };
    out.push_back(x3);
  } else if (id == "A3,4") {
    auto x1 = translation_ansatz("A3,4", {"C1", "B - C2"}, {"C1 = 0", "B = C2"});
    x1.orbit_identity = {{"alpha", 0.0}};
    x1.orbit_h = "A + alpha*x";
    x1.orbit_k = "x - B";
    out.push_back(x1);
    auto x3 = dilation_ansatz("A3,4", "X3", "x*log(abs(x)) + A*x", "y/x - log(abs(x))",
                              {"B*log(abs(B))/(1 - B) - (C1 - 1)", "(1 - B)*abs(B)^(B/(1 - B)) - C2*exp(A)"});
    x3.orbit_identity = {{"alpha", 0.0}, {"beta", 0.0}};
    x3.orbit_h = "alpha + (x - beta)*log(abs(x - beta)) + A*(x - beta)";
    x3.orbit_k = "beta + B*(x - beta)";
    x3.base_domain = [](const Constants& c) { return fixed(1 + get(c, "beta"), 10 + get(c, "beta")); };
    x3.domain_note = "branch x > 0 (x > beta after the orbit), 0 < B < 1";
    out.push_back(x3);
  } else if (id == "A3,6") {
    auto x1 = translation_ansatz("A3,6", {"C1", "B - C2"}, {"C1 = 0", "B = C2"});
    x1.free_constants = {{"A", 0.0}};
    out.push_back(x1);
    InvariantAnsatz a;
    a.family_id = "A3,6";
    a.subalgebra = "X3";
    a.unknowns = {"A", "B"};
    a.parametric = true;
    a.x_of_phi = "A*exp(-b*phi)*cos(phi)";
    a.y_of_phi = "A*exp(-b*phi)*sin(phi)";
    a.shift = "B";
    a.J1 = "exp(b*atan(y/x))*sqrt(x^2 + y^2)";
    a.J2 = "atan(y/x) - atan(y_/x_)";
    const std::string c1 = "b - (cos(B) - exp(-b*B) + C1*sin(B))/(sin(B) - C1*(cos(B) - exp(-b*B)))";
    const std::string c2 =
        "A*exp(b*atan(exp(b*B)*sin(B)/(1 - exp(b*B)*cos(B))))*sqrt(1 - 2*exp(b*B)*cos(B) + exp(2*b*B)) - C2";
    a.constraint_text = {c1 + " = 0", c2 + " = 0"};
    a.constraints = texts({c1, c2});
    a.admissible = [](const Constants& c) { return get(c, "A") > 0 && std::abs(get(c, "B")) < 2 * M_PI; };
    a.base_domain = [](const Constants&) { return fixed(-M_PI, M_PI); };
    a.branch = [](double phi, const Constants& c) {
      const double A = get(c, "A"), B = get(c, "B"), b = get(c, "b");
      auto X = [&](double t) { return A * std::exp(-b * t) * std::cos(t); };
      auto Y = [&](double t) { return A * std::exp(-b * t) * std::sin(t); };
      auto dX = [&](double t) { return A * std::exp(-b * t) * (-b * std::cos(t) - std::sin(t)); };
      const double dx = X(phi) - X(phi - B);
      if (!(dx > 0)) return false;
      const double s1 = dX(phi), s2 = dX(phi - B), s3 = dX(phi - B / 2);
      if (!(s1 * B > 0 && s2 * B > 0 && s3 * B > 0)) return false;
      // Principal branch of the chord angle, as assumed by the constraint.
      const double T = std::exp(b * B) * std::sin(B) / (1 - std::exp(b * B) * std::cos(B));
      const double chord = std::atan((Y(phi) - Y(phi - B)) / dx);
      return std::abs(chord - (phi + std::atan(T))) < 1e-9;
    };
    a.domain_note = "parametric in the polar angle phi; principal branch of the chord angle";
    out.push_back(a);
  } else if (id == "A3,8alt") {
    out.push_back(translation_ansatz("A3,8alt", {"C1/A", "B - C2*A^2"}, {"C1/A = 0", "B = C2 A^2"}));
    auto x2 = dilation_ansatz("A3,8alt", "X2", "A*sqrt(x)", "y/sqrt(x)",
                              {"A/2 - A/(1 + sqrt(B)) - C1/A", "1/sqrt(B) - sqrt(B) - C2*A^2"});
    out.push_back(x2);
    out.push_back(rotation_ansatz("A3,8alt", "A*sqrt(x^2 + 1)", "y/sqrt(1 + x^2)",
                                  {"(A/B)*(1 - sqrt(B^2 + 1)) + C1/A", "B - C2*A^2*sqrt(B^2 + 1)"}));
  } else if (id == "A3,9") {
    out.push_back(dilation_ansatz(
        "A3,9", "X2", "A*x", "y/x",
        {"A - (A^2*(1 - B)^2 + B^2 - 1 + 2*C1*A*(1 - B))/(2*A*(1 - B) - C1*(A^2*(1 - B)^2 + B^2 - 1))",
         "(A^2 + 1)*(1 - B)^2 - C2*B"}));
    InvariantAnsatz a;
    a.family_id = "A3,9";
    a.subalgebra = "X1+X3";
    a.unknowns = {"A", "B"};
    a.numeric_only = true;
    a.h = "sqrt(A*x - x^2 - 1)";
    a.J1 = "(y^2 + x^2 + 1)/x";
    a.J2 = "atan((y^2 + x^2 - 1)/(2*y)) - atan((y_^2 + x_^2 - 1)/(2*y_))";
    a.constraint_text = {"no closed form; check candidates with verify"};
    a.admissible = [](const Constants& c) { return get(c, "A") > 2; };
    a.base_domain = [](const Constants& c) {
      const double A = get(c, "A"), d = std::sqrt(std::max(0.0, A * A - 4));
      return fixed((A - d) / 2, (A + d) / 2);
    };
    a.domain_note = "upper arc y > 0 of the circle y^2 + x^2 + 1 = A x";
    out.push_back(a);
  } else if (id == "A3,10alt") {
    // Both conditions depend on A/B only, so A stays free.
    InvariantAnsatz x1;
    x1.family_id = "A3,10alt";
    x1.subalgebra = "X1";
    x1.unknowns = {"B"};
    x1.free_constants = {{"A", 1.0}};
    x1.h = "x + A";
    x1.k = "x - B";
    x1.J1 = "y - x";
    x1.J2 = "x - x_";
    x1.constraint_text = {"1 = C1 ((A + B)/B)^2", "B^2/A^2 = C2"};
    x1.constraints = texts({"1 - C1*((A + B)/B)^2", "B^2/A^2 - C2"});
    x1.admissible = [](const Constants& c) { return get(c, "B") > 0; };
    x1.base_domain = [](const Constants&) { return fixed(0, 10); };
    out.push_back(x1);
    out.push_back(dilation_ansatz("A3,10alt", "X2", "A*x", "y/x",
                                  {"A - C1*((A - B)/(1 - B))^2", "A*(1 - B)^2/((A - 1)^2*B) - C2"}));
    out.push_back(rotation_ansatz("A3,10alt", "(x + A)/(1 - A*x)", "(y - x)/(1 + x*y)",
                                  {"1 + A^2 - C1*(1 + A/B)^2", "(1 + A^2)*B^2/(A^2*(1 + B^2)) - C2"}));
  } else if (id == "A3,12") {
    out.push_back(rotation_ansatz("A3,12", "A*sqrt(1 + x^2)", "y/sqrt(1 + x^2)",
                                  {"(A/(1 + A^2))*(1 - 1/sqrt(1 + B^2)) - C1",
                                   "(1/sqrt(1 + B^2) + A^2)^2 - (1 - C2)*(1 + A^2)^2"}));
    out.back().subalgebra = "X1";
  }
  return out;
}

Constants family_constants(const ParamValues& params, const std::string& id) {
  return resolve_family_params(id, params).constants;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<InvariantAnsatz> subalgebra_catalog(std::string_view family_id) {
  find_family(family_id);  // UnknownFamily
  return make_catalog(family_id);
}

const InvariantAnsatz& find_ansatz(std::string_view family_id, std::string_view subalgebra) {
  static std::map<std::string, std::vector<InvariantAnsatz>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(std::string(family_id));
  if (it == cache.end()) it = cache.emplace(std::string(family_id), subalgebra_catalog(family_id)).first;
  for (const auto& a : it->second)
    if (a.subalgebra == subalgebra) return a;
  throw UnknownFamily("family " + std::string(family_id) + " has no ansatz for " + std::string(subalgebra));
}

double jacobian_det(const InvariantAnsatz& ansatz, const ParamValues& family_params, const Constants& values,
                    double x, double y, double x_minus, double y_minus) {
  Constants c = family_constants(family_params, ansatz.family_id);
  for (const auto& [k, v] : values) c[k] = v;
  const Expr J1 = bound(ansatz.J1, rhs_vars(), c);
  const Expr J2 = bound(ansatz.J2, rhs_vars(), c);
  const double p[4] = {x, y, x_minus, y_minus};
  auto partial = [&](const Expr& e, int idx) {
    const double d[4] = {idx == 0 ? 1.0 : 0.0, idx == 1 ? 1.0 : 0.0, idx == 2 ? 1.0 : 0.0, idx == 3 ? 1.0 : 0.0};
    return directional(e, std::span<const double>(p, 4), std::span<const double>(d, 4)).partial;
  };
  return partial(J1, 1) * partial(J2, 2) - partial(J1, 2) * partial(J2, 1);
}

std::vector<double> default_seeds() {
  std::vector<double> s;
  for (int j = -3; j <= 3; ++j) {
    s.push_back(std::ldexp(1.0, j));
    s.push_back(-std::ldexp(1.0, j));
  }
  return s;
}

// ---------------------------------------------------------------------------

JetPoint ClosedFormSolution::jet(double t) const {
  auto value_slope = [](const Expr& e, double at) {
    const Dual<double> v[1] = {Dual<double>{at, 1.0}};
    const auto r = e.evaluate<Dual<double>>(std::span<const Dual<double>>(v, 1));
    return std::pair<double, double>{r.value, r.partial};
  };
  JetPoint j;
  if (parametric) {
    const auto [X, dX] = value_slope(x_of, t);
    const auto [Y, dY] = value_slope(y, t);
    j.x = X;
    j.y = Y;
    j.ydot = dY / dX;
    j.x_minus = x_of({t - shift});
    j.y_minus = y({t - shift});
    return j;
  }
  const auto [Y, dY] = value_slope(y, t);
  j.x = t;
  j.y = Y;
  j.ydot = dY;
  j.x_minus = numeric_only ? delay_fn(t) : delay({t});
  j.y_minus = y({j.x_minus});
  return j;
}

std::string ClosedFormSolution::y_text() const { return y.to_string(); }
std::string ClosedFormSolution::delay_text() const {
  if (parametric) {
    std::ostringstream os;
    os.precision(17);
    os << "x(phi - " << shift << ")";
    return os.str();
  }
  return numeric_only ? std::string("numeric root of J2 = B") : delay.to_string();
}

namespace {

ClosedFormSolution assemble(const InvariantAnsatz& ansatz, const Constants& values, const ParamValues& fp,
                            const std::string& h, const std::string& k) {
  ClosedFormSolution s;
  s.family_id = ansatz.family_id;
  s.subalgebra = ansatz.subalgebra;
  s.family_params = fp;
  s.constants = values;
  s.parametric = ansatz.parametric;
  s.numeric_only = ansatz.numeric_only;
  if (ansatz.parametric) {
    s.x_of = bound(ansatz.x_of_phi, {"phi"}, values);
    s.y = bound(ansatz.y_of_phi, {"phi"}, values);
    s.shift = get(values, ansatz.shift);
  } else {
    s.y = bound(h, {"x"}, values);
    if (ansatz.numeric_only) {
      const Expr J2 = bound(ansatz.J2, rhs_vars(), values);
      const double B = get(values, "B");
      const Expr y = s.y;
      const Interval base = ansatz.base_domain(values);
      s.delay_fn = [J2, B, y, base](double x) {
        const double yx = y({x});
        auto res = [&](double xm) {
          const double p[4] = {x, yx, xm, y({xm})};
          return J2.evaluate<double>(std::span<const double>(p, 4)) - B;
        };
        auto roots = bracket_roots(res, base.lo, x - 1e-12, 400, 1e-15, true);
        return roots.empty() ? std::numeric_limits<double>::quiet_NaN() : roots.front();
      };
    } else {
      s.delay = bound(k, {"x"}, values);
    }
  }
  // Admissible domain: the longest run of grid points with a finite, causal
  // jet on the requested branch.
  const Interval base = ansatz.base_domain(values);
  const int n = 2001;
  std::vector<char> ok(n, 0);
  for (int i = 0; i < n; ++i) {
    const double t = base.lo + base.width() * i / (n - 1);
    if (ansatz.branch && !ansatz.branch(t, values)) continue;
    JetPoint j;
    try {
      j = s.jet(t);
    } catch (const Error&) {
      continue;
    }
    const auto c = j.coords();
    bool good = j.x_minus < j.x;
    for (double v : c) good = good && std::isfinite(v) && std::abs(v) < 1e6;
    ok[static_cast<std::size_t>(i)] = good;
  }
  int best_lo = -1, best_len = 0;
  for (int i = 0; i < n;) {
    if (!ok[static_cast<std::size_t>(i)]) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && ok[static_cast<std::size_t>(j)]) ++j;
    if (j - i > best_len) {
      best_len = j - i;
      best_lo = i;
    }
    i = j;
  }
  if (best_len < 3) throw NoRootFound("empty admissible domain for " + ansatz.family_id + " " + ansatz.subalgebra);
  // Pull in by one grid step on sides that hit a failure (poles, branch ends).
  int lo = best_lo, hi = best_lo + best_len - 1;
  if (lo > 0) ++lo;
  if (hi < n - 1) --hi;
  s.domain = {base.lo + base.width() * lo / (n - 1), base.lo + base.width() * hi / (n - 1)};
  return s;
}

}  // namespace

ClosedFormSolution build_solution(const InvariantAnsatz& ansatz, const ConstantAssignment& constants) {
  Constants values = family_constants(constants.family_params, ansatz.family_id);
  for (const auto& [k, v] : ansatz.free_constants) values.emplace(k, v);
  for (const auto& [k, v] : constants.values) values[k] = v;
  return assemble(ansatz, values, constants.family_params, ansatz.h, ansatz.k);
}

double verify(const DODSystem& system, const ClosedFormSolution& solution, int grid) {
  double worst = 0.0;
  const Interval d = solution.domain;
  for (int i = 0; i < grid; ++i) {
    const double t = d.lo + d.width() * (i + 0.5) / grid;
    JetPoint j;
    try {
      j = solution.jet(t);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
    const auto c = j.coords();
    const double e1 = system.E1().evaluate<double>(std::span<const double>(c));
    const double e2 = system.E2().evaluate<double>(std::span<const double>(c));
    if (!std::isfinite(e1) || !std::isfinite(e2)) return std::numeric_limits<double>::infinity();
    worst = std::max({worst, std::abs(e1), std::abs(e2)});
  }
  return worst;
}

ClosedFormSolution orbit_extend(const InvariantAnsatz& ansatz, const ClosedFormSolution& solution,
                                const Constants& group_params, double tol) {
  if (ansatz.orbit_identity.empty()) {
    for (const auto& [k, v] : group_params)
      throw ConfigError("no group orbit recorded for " + ansatz.family_id + " " + ansatz.subalgebra + " (got " + k +
                        ")");
    return solution;
  }
  Constants values = solution.constants;
  for (const auto& [k, v] : ansatz.orbit_identity) values[k] = v;
  for (const auto& [k, v] : group_params) {
    if (!ansatz.orbit_identity.count(k)) throw ConfigError("unknown group parameter '" + k + "'");
    values[k] = v;
  }
  ClosedFormSolution out;
  try {
    out = assemble(ansatz, values, solution.family_params, ansatz.orbit_h, ansatz.orbit_k);
  } catch (const NoRootFound& e) {
    throw ConstraintViolated(std::string("orbit leaves no admissible domain: ") + e.what());
  }
  const auto sys = invariant_family(ansatz.family_id, solution.family_params);
  const double r = verify(sys, out);
  if (!(r <= tol)) {
    std::ostringstream os;
    os << "extended solution violates the system: max residual " << r;
    throw ConstraintViolated(os.str());
  }
  return out;
}

// ---------------------------------------------------------------------------

ConstraintSolutions solve_constraints(const InvariantAnsatz& ansatz, const ParamValues& family_params,
                                      const Constants& free_values,
                                      const std::vector<std::vector<double>>& seeds, double tol) {
  ConstraintSolutions out;
  const DODSystem sys = invariant_family(ansatz.family_id, family_params);
  if (ansatz.numeric_only) {
    out.diagnostics.push_back("numeric-only ansatz: constraints have no closed form; build candidates and verify");
    return out;
  }
  const ResolvedParams rp = resolve_family_params(ansatz.family_id, family_params);
  Constants free = ansatz.free_constants;
  for (const auto& [k, v] : free_values) {
    if (!free.count(k)) throw ConfigError("'" + k + "' is not a free constant of this ansatz");
    free[k] = v;
  }
  std::vector<std::string> vars = ansatz.unknowns;
  for (const auto& [k, _] : free) vars.push_back(k);
  std::vector<Expr> cons;
  for (const auto& e : ansatz.constraints(rp, vars)) cons.push_back(e.bind(free).rebase(ansatz.unknowns));

  const std::size_t n = ansatz.unknowns.size();
  auto residual = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(cons.size()));
    for (std::size_t i = 0; i < cons.size(); ++i)
      r(static_cast<Eigen::Index>(i)) = cons[i].evaluate<double>(std::span<const double>(u.data(), n));
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& u) {
    Eigen::MatrixXd J(static_cast<Eigen::Index>(cons.size()), static_cast<Eigen::Index>(n));
    std::vector<Dual<double>> d(n);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < n; ++i) d[i] = Dual<double>{u(static_cast<Eigen::Index>(i)), i == k ? 1.0 : 0.0};
      for (std::size_t i = 0; i < cons.size(); ++i)
        J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            cons[i].evaluate<Dual<double>>(std::span<const Dual<double>>(d)).partial;
    }
    return J;
  };

  std::vector<Eigen::VectorXd> found;
  std::vector<double> found_res;
  auto consider = [&](const Eigen::VectorXd& u, double res) {
    for (std::size_t i = 0; i < found.size(); ++i) {
      if ((found[i] - u).lpNorm<Eigen::Infinity>() <= 1e-6) {
        if (res < found_res[i]) {
          found[i] = u;
          found_res[i] = res;
        }
        return;
      }
    }
    found.push_back(u);
    found_res.push_back(res);
  };

  if (n == 0) {
    const double r = residual(Eigen::VectorXd()).lpNorm<Eigen::Infinity>();
    if (r <= tol) consider(Eigen::VectorXd(), r);
    else out.diagnostics.push_back("parameter conditions fail: residual " + std::to_string(r));
  } else {
    std::vector<std::vector<double>> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = i < seeds.size() && !seeds[i].empty() ? seeds[i] : default_seeds();
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
      Eigen::VectorXd u0(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) u0(static_cast<Eigen::Index>(i)) = grid[i][idx[i]];
      const auto res = gauss_newton(residual, jacobian, u0, 1e-14, 200);
      if (res.x.allFinite() && res.residual_norm <= tol) consider(res.x, res.residual_norm);
      std::size_t k = 0;
      while (k < n && ++idx[k] == grid[k].size()) idx[k++] = 0;
      if (k == n) break;
    }
    if (found.empty()) out.diagnostics.push_back("Gauss-Newton found no root from any seed");
  }

  const Constants fam = rp.constants;
  for (std::size_t i = 0; i < found.size(); ++i) {
    ConstantAssignment c;
    c.family_params = family_params;
    c.residual = found_res[i];
    for (std::size_t k = 0; k < n; ++k) c.values[ansatz.unknowns[k]] = found[i](static_cast<Eigen::Index>(k));
    for (const auto& [k, v] : free) c.values[k] = v;
    Constants all = fam;
    for (const auto& [k, v] : c.values) all[k] = v;
    std::ostringstream label;
    for (const auto& [k, v] : c.values) label << k << "=" << v << " ";
    if (ansatz.admissible && !ansatz.admissible(all)) {
      out.diagnostics.push_back("rejected (admissibility) " + label.str());
      continue;
    }
    ClosedFormSolution sol;
    try {
      sol = build_solution(ansatz, c);
    } catch (const NoRootFound&) {
      out.diagnostics.push_back("rejected (empty domain) " + label.str());
      continue;
    }
    // The DODE must genuinely involve y_ along the solution.
    const JetPoint j = sol.jet(0.5 * (sol.domain.lo + sol.domain.hi));
    const auto mp = manifold_partials(sys, j);
    if (!(std::abs(mp.ydot[2]) > 1e-12)) {
      out.diagnostics.push_back("rejected (df/dy_ = 0 along the solution) " + label.str());
      continue;
    }
    out.solutions.push_back(std::move(c));
  }
  return out;
}

}  // namespace dods
