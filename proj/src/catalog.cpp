#include "dods/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dods/errors.hpp"

namespace dods {

namespace {

ParamSpec constant(std::string name, std::string def, std::string range = {}) {
  return {std::move(name), false, {}, std::move(def), std::move(range)};
}
ParamSpec function(std::string name, std::vector<std::string> args, std::string def, std::string range = {}) {
  return {std::move(name), true, std::move(args), std::move(def), std::move(range)};
}

// Shorthands inside templates: {dx}, {dy}, {s} = dy/dx.
std::string expand(std::string t) {
  const std::pair<const char*, const char*> subs[] = {
      {"{dx}", "(x - x_)"}, {"{dy}", "(y - y_)"}, {"{s}", "((y - y_)/(x - x_))"}};
  for (auto [from, to] : subs) {
    for (std::size_t p = t.find(from); p != std::string::npos; p = t.find(from, p)) {
      t.replace(p, std::string(from).size(), to);
      p += std::string(to).size();
    }
  }
  return t;
}

struct Resolved {
  std::map<std::string, double> c;
  std::map<std::string, Expr> fn;
};

Resolved resolve(const std::vector<ParamSpec>& specs, const ParamValues& values, const std::string& owner) {
  for (const auto& [k, v] : values) {
    const bool known = std::any_of(specs.begin(), specs.end(), [&](const ParamSpec& p) { return p.name == k; });
    if (!known) throw ParamError(owner + ": unknown parameter '" + k + "'");
  }
  Resolved r;
  for (const auto& p : specs) {
    auto it = values.find(p.name);
    const std::string& text = it != values.end() ? it->second : p.default_value;
    try {
      if (p.function) {
        r.fn.emplace(p.name, Expr::parse(text, p.args));
      } else {
        const double v = Expr::parse(text, {}).evaluate<double>(std::span<const double>(), EvalMode::Checked);
        r.c.emplace(p.name, v);
      }
    } catch (const SyntaxError& e) {
      throw ParamError(owner + ": parameter '" + p.name + "': " + e.what());
    } catch (const UnknownIdentifier& e) {
      throw ParamError(owner + ": parameter '" + p.name + "': " + e.what());
    } catch (const DomainError& e) {
      throw ParamError(owner + ": parameter '" + p.name + "': " + e.what());
    }
  }
  return r;
}

std::vector<std::string> with_params(std::vector<std::string> base, const Resolved& r) {
  for (const auto& [k, _] : r.c) base.push_back(k);
  for (const auto& [k, _] : r.fn) base.push_back(k);
  return base;
}

/// Template over `vars` plus parameter names; constants bound, functions of x
/// (e.g. chi) substituted.
Expr instantiate(const std::string& tmpl, const std::vector<std::string>& vars, const Resolved& r) {
  Expr e = Expr::parse(expand(tmpl), with_params(vars, r));
  std::map<std::string, Expr> fsub;
  for (const auto& [k, f] : r.fn)
    if (e.depends_on(k)) fsub.emplace(k, f.rebase(vars));
  std::vector<std::string> keep = vars;
  for (const auto& [k, _] : r.c) keep.push_back(k);
  if (!fsub.empty()) e = e.substitute(fsub, keep);
  return e.bind(r.c).rebase(vars);
}

const std::vector<std::string>& rhs_vars() {
  static const std::vector<std::string> v{"x", "y", "x_", "y_"};
  return v;
}

Expr jet(const std::string& t, const Resolved& r) { return instantiate(t, jet_variables(), r); }
Expr rhs(const std::string& t, const Resolved& r) { return instantiate(t, rhs_vars(), r); }
Expr state(const std::string& t, const Resolved& r) { return instantiate(t, state_variables(), r); }

/// Free function parameter applied to argument expressions over rhs variables.
Expr apply(const Resolved& r, const std::string& name, const std::map<std::string, std::string>& args) {
  std::map<std::string, Expr> sub;
  for (const auto& [k, v] : args) sub.emplace(k, Expr::parse(expand(v), rhs_vars()));
  return r.fn.at(name).substitute(sub, rhs_vars());
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ParamError(what);
}

void require_nonzero_fn(const Resolved& r, const std::string& name, const std::string& id) {
  const Expr& f = r.fn.at(name);
  if (f.is_constant()) {
    std::vector<double> zeros(f.variables().size(), 0.0);
    require(f.evaluate<double>(std::span<const double>(zeros)) != 0.0, id + ": " + name + " must not vanish identically");
  }
}

struct FamilyImpl {
  InvariantFamily meta;
  std::function<DODSystem(const Resolved&)> build;
};

SampleBox box(Interval x, Interval y, Interval ym) { return {x, y, ym}; }

std::vector<FamilyImpl> make_families() {
  std::vector<FamilyImpl> out;
  auto add = [&](InvariantFamily m, std::function<DODSystem(const Resolved&)> b) {
    m.box.x = m.domain;
    out.push_back({std::move(m), std::move(b)});
  };

  add({"A1,1", "A1,1",
       {function("f", {"x", "z"}, "z + 0.1*x", "df/dz != 0"), function("g", {"x", "w"}, "1 + 0.1*w^2", "g > 0")},
       "yd = f(x, dy/dx)", "dx = g(x, dy)", false, false,
       {{"I1", "x"}, {"I2", "x_"}, {"I3", "{dy}"}, {"I4", "yd"}},
       {0, 5}, box({}, {-10, 10}, {-10, 10}), ""},
      [](const Resolved& r) {
        return DODSystem::make(apply(r, "f", {{"x", "x"}, {"z", "{s}"}}),
                               Expr::parse("x", rhs_vars()) - apply(r, "g", {{"x", "x"}, {"w", "{dy}"}}), {}, "A1,1");
      });

  add({"A2,1", "A2,1",
       {function("f", {"x"}, "1 + 0.5*sin(x)", "f != 0"), function("g", {"x"}, "x/2 - 1", "g(x) < x, g != const")},
       "yd = f(x) dy/dx", "x_ = g(x)", false, false,
       {{"I1", "x"}, {"I2", "x_"}, {"I3", "yd/{dy}"}},
       {0, 5}, box({}, {-10, 10}, {-10, 10}), ""},
      [](const Resolved& r) {
        require_nonzero_fn(r, "f", "A2,1");
        return DODSystem::make(apply(r, "f", {{"x", "x"}}) * Expr::parse(expand("{s}"), rhs_vars()),
                               apply(r, "g", {{"x", "x"}}), {}, "A2,1");
      });

  add({"A2,2", "A2,2",
       {function("f", {"z"}, "z^2", "df/dz != 0"), function("g", {"z"}, "1/(2 + z^2)", "0 < g < 1")},
       "yd = f(dy/dx)", "x_ = x g(dy/dx)", false, true,
       {{"I1", "{dx}/x"}, {"I2", "{s}"}, {"I3", "yd"}},
       {0.5, 5}, box({}, {-10, 10}, {-10, 10}), "x and x_ of the same sign"},
      [](const Resolved& r) {
        const Expr G = Expr::parse("x_", rhs_vars()) - Expr::parse("x", rhs_vars()) * apply(r, "g", {{"z", "{s}"}});
        return DODSystem::with_implicit_delay(apply(r, "f", {{"z", "{s}"}}), G, {}, "A2,2");
      });

  add({"A2,3", "A2,3",
       {function("f", {"x"}, "1 + x^2", "f != 0"), function("g", {"x"}, "x/2 - 1", "g(x) < x, g != const")},
       "yd = dy/dx + f(x)", "x_ = g(x)", false, false,
       {{"I1", "x"}, {"I2", "x_"}, {"I3", "yd - {s}"}},
       {0, 5}, box({}, {-10, 10}, {-10, 10}), ""},
      [](const Resolved& r) {
        require_nonzero_fn(r, "f", "A2,3");
        return DODSystem::make(Expr::parse(expand("{s}"), rhs_vars()) + apply(r, "f", {{"x", "x"}}),
                               apply(r, "g", {{"x", "x"}}), {}, "A2,3");
      });

  add({"A2,4", "A2,4",
       {function("f", {"z"}, "z^2", "df/dz != 0"), function("g", {"w"}, "1 + w/2", "g > 0 on the box")},
       "yd = f(dy/dx)", "dx = g(dy)", false, false,
       {{"I1", "{dx}"}, {"I2", "{dy}"}, {"I3", "yd"}},
       {0, 5}, box({}, {-0.9, 0.9}, {-0.9, 0.9}), "|dy| < 1.8 keeps 1 + dy/2 positive for the default g"},
      [](const Resolved& r) {
        return DODSystem::make(apply(r, "f", {{"z", "{s}"}}),
                               Expr::parse("x", rhs_vars()) - apply(r, "g", {{"w", "{dy}"}}), {}, "A2,4");
      });

  add({"A3,2", "A3,2",
       {constant("a", "2", "a != 0; a = 1 is degenerate"), constant("C1", "4/3", "C1 != 0"),
        constant("C2", "1", "C2 != 0")},
       "yd = C1 dy/dx", "dx = C2 dy^(1/a)", false, false,
       {{"I1", "{dy}/{dx}^a"}, {"I2", "yd*{dx}/{dy}"}},
       {1, 10}, box({}, {-10, 10}, {-10, 10}), "dy^(1/a) real"},
      [](const Resolved& r) {
        const double a = r.c.at("a");
        require(a != 0.0, "A3,2: a must be nonzero");
        if (a == 1.0) throw DegenerateFamilyError("A3,2 with a = 1 admits no invariant DODS (dy/dx = const)");
        require(r.c.at("C1") != 0.0, "A3,2: C1 must be nonzero");
        require(r.c.at("C2") != 0.0, "A3,2: C2 must be nonzero");
        return DODSystem::make(rhs("C1*{s}", r), state("x - C2*(y - y_)^(1/a)", r), {}, "A3,2");
      });

  add({"A3,4", "A3,4",
       {constant("C1", "1"), constant("C2", "0.5", "C2 != 0")},
       "yd = dy/dx + C1", "dx = C2 exp(dy/dx)", false, true,
       {{"I1", "exp({s})/{dx}"}, {"I2", "yd - {s}"}},
       {0, 5}, box({}, {0, 4}, {-4, 0}), "dx in (0, delta_max)"},
      [](const Resolved& r) {
        require(r.c.at("C2") != 0.0, "A3,4: C2 must be nonzero");
        return DODSystem::with_implicit_delay(rhs("{s} + C1", r), rhs("{dx} - C2*exp({s})", r), {}, "A3,4");
      });

  add({"A3,6", "A3,6",
       {constant("b", "0.5", "b >= 0"), constant("C1", "1"), constant("C2", "1", "C2 > 0")},
       "yd = (dy/dx + C1)/(1 - C1 dy/dx)", "dx exp(b atan(dy/dx)) sqrt(1 + (dy/dx)^2) = C2", false, true,
       {{"I1", "{dx}*exp(b*atan({s}))*sqrt(1 + {s}^2)"}, {"I2", "(yd - {s})/(1 + yd*{s})"}},
       {0, 5}, box({}, {-0.3, 0.3}, {-0.3, 0.3}), "branch dx > 0"},
      [](const Resolved& r) {
        require(r.c.at("b") >= 0.0, "A3,6: b must be >= 0");
        require(r.c.at("C2") != 0.0, "A3,6: C2 must be nonzero");
        return DODSystem::with_implicit_delay(rhs("({s} + C1)/(1 - C1*{s})", r),
                                              rhs("{dx}*exp(b*atan({s}))*sqrt(1 + {s}^2) - C2", r), {}, "A3,6");
      });

  add({"A3,8", "A3,8",
       {constant("C1", "1"), constant("C2", "0.25", "C2 != 0")},
       "yd = dy/(2x + C1 dy)", "x x_ = C2 dy^2", false, false,
       {{"I1", "{dy}^2/(x*x_)"}, {"I2", "1/yd - 2*x/{dy}"}},
       {1, 5}, box({}, {0, 0.9}, {-0.9, 0}), "x and x_ of the same sign"},
      [](const Resolved& r) {
        require(r.c.at("C2") != 0.0, "A3,8: C2 must be nonzero");
        return DODSystem::make(rhs("{dy}/(2*x + C1*{dy})", r), state("C2*(y - y_)^2/x", r), {}, "A3,8");
      });

  add({"A3,8alt", "A3,8alt",
       {constant("C1", "1"), constant("C2", "0.5", "C2 != 0")},
       "yd = dy/dx + C1/y", "dx = C2 y y_", false, false,
       {{"I1", "{dx}/(y*y_)"}, {"I2", "y*(yd - {s})"}},
       {0, 5}, box({}, {0.5, 3}, {0.5, 3}), "C2 y y_ > 0"},
      [](const Resolved& r) {
        require(r.c.at("C2") != 0.0, "A3,8alt: C2 must be nonzero");
        return DODSystem::make(rhs("{s} + C1/y", r), state("x - C2*y*y_", r), {}, "A3,8alt");
      });

  add({"A3,9", "A3,9",
       {constant("C1", "0.5"), constant("C2", "1", "C2 > 0")},
       "yd = (dy^2 + x_^2 - x^2 + 2 C1 x dy)/(2 x dy - C1 (dy^2 + x_^2 - x^2))", "dy^2 + dx^2 = C2 x x_", false,
       true,
       {{"I1", "({dy}^2 + {dx}^2)/(x*x_)"},
        {"I2", "(2*{dy}*x*yd - {dy}^2 - x_^2 + x^2)/(2*{dy}*x + ({dy}^2 + x_^2 - x^2)*yd)"}},
       {1, 5}, box({}, {-0.5, 0.5}, {-0.5, 0.5}), "x > 0, smaller root of the quadratic delay relation"},
      [](const Resolved& r) {
        require(r.c.at("C2") != 0.0, "A3,9: C2 must be nonzero");
        return DODSystem::with_implicit_delay(
            rhs("({dy}^2 + x_^2 - x^2 + 2*C1*x*{dy})/(2*x*{dy} - C1*({dy}^2 + x_^2 - x^2))", r),
            rhs("{dy}^2 + {dx}^2 - C2*x*x_", r), {}, "A3,9");
      });

  add({"A3,10", "A3,10",
       {constant("C1", "0.5"), constant("C2", "-1", "C2 != 0")},
       "yd = (dy^2 + x^2 - x_^2 + 2 C1 x dy)/(2 x dy + C1 (dy^2 + x^2 - x_^2))", "dy^2 - dx^2 = C2 x x_", false,
       true,
       {{"I1", "({dy}^2 - {dx}^2)/(x*x_)"},
        {"I2", "(2*{dy}*x*yd - {dy}^2 - x^2 + x_^2)/(2*{dy}*x - ({dy}^2 + x^2 - x_^2)*yd)"}},
       {1, 5}, box({}, {-0.4, 0.4}, {-0.4, 0.4}), "x > 0, smaller root of the quadratic delay relation"},
      [](const Resolved& r) {
        require(r.c.at("C2") != 0.0, "A3,10: C2 must be nonzero");
        return DODSystem::with_implicit_delay(
            rhs("({dy}^2 + x^2 - x_^2 + 2*C1*x*{dy})/(2*x*{dy} + C1*({dy}^2 + x^2 - x_^2))", r),
            rhs("{dy}^2 - {dx}^2 - C2*x*x_", r), {}, "A3,10");
      });

  add({"A3,10alt", "A3,10alt",
       {constant("C1", "1", "C1 C2 != 0"), constant("C2", "-1", "C1 C2 != 0")},
       "yd = C1 ((y - x_)/(x - x_))^2", "(y - y_)(x - x_)/((y - x)(y_ - x_)) = C2", false, false,
       {{"I1", "{dy}*{dx}/((y - x)*(y_ - x_))"}, {"I2", "({dx}/(y - x_))^2*yd"}},
       {0, 1}, box({}, {2, 3}, {-1, 0}), "y > x; the delay relation is linear in x_ and solved explicitly"},
      [](const Resolved& r) {
        require(r.c.at("C1") * r.c.at("C2") != 0.0, "A3,10alt: C1 C2 must be nonzero");
        return DODSystem::make(rhs("C1*((y - x_)/(x - x_))^2", r),
                               state("(C2*(y - x)*y_ - (y - y_)*x)/(C2*(y - x) - (y - y_))", r), {}, "A3,10alt");
      });

  const std::string a312_i1 =
      "{dx}^2*(1 + {s}^2 + (y - x*{s})^2)/((1 + x^2 + y^2)*(1 + x_^2 + y_^2))";
  const std::string a312_i2 = "{dx}*(yd - {s})/(sqrt(1 + yd^2 + (y - x*yd)^2)*sqrt(1 + x_^2 + y_^2))";
  add({"A3,12", "A3,12",
       {constant("C1", "0.1"), constant("C2", "0.05", "C2 > 0")},
       "I2 = C1", "I1 = C2", true, true,
       {{"I1", a312_i1}, {"I2", a312_i2}},
       {0, 2}, box({}, {-1, 1}, {-1, 1}), "both relations implicit"},
      [a312_i1, a312_i2](const Resolved& r) {
        require(r.c.at("C2") != 0.0, "A3,12: C2 must be nonzero");
        return DODSystem::implicit(jet(a312_i2 + " - C1", r), jet(a312_i1 + " - C2", r), {}, "A3,12");
      });

  return out;
}

const std::vector<FamilyImpl>& families_impl() {
  static const std::vector<FamilyImpl> f = make_families();
  return f;
}

const FamilyImpl& find_impl(std::string_view id) {
  for (const auto& f : families_impl())
    if (f.meta.id == id) return f;
  throw UnknownFamily("unknown family '" + std::string(id) + "'");
}

// ---------------------------------------------------------------------------

std::vector<AlgebraRealization> make_algebras() {
  using F = std::pair<std::string, std::string>;
  const F dx{"1", "0"}, dy{"0", "1"}, xdy{"0", "x"}, ydy{"0", "y"}, dil{"x", "y"};
  const ParamSpec chi = function("chi", {"x"}, "x^3", "chi'' != 0");
  std::vector<AlgebraRealization> a = {
      {"A1,1", 1, {dy}, {}, false, {}},
      {"A2,1", 2, {dy, ydy}, {}, false, {}},
      {"A2,2", 2, {dy, dil}, {}, false, {}},
      {"A2,3", 2, {dy, xdy}, {}, false, {}},
      {"A2,4", 2, {dx, dy}, {}, false, {}},
      {"A3,1", 3, {dy, xdy, dx}, {}, false, {}},
      {"A3,2", 3, {dx, dy, {"x", "a*y"}}, {constant("a", "0.5", "0 < |a| <= 1")}, false, {}},
      {"A3,3", 3, {dy, xdy, {"(1 - a)*x", "y"}}, {constant("a", "0.5", "0 < |a| <= 1")}, false, {}},
      {"A3,4", 3, {dx, dy, {"x", "x + y"}}, {}, false, {}},
      {"A3,5", 3, {dy, xdy, {"1", "y"}}, {}, false, {}},
      {"A3,6", 3, {dx, dy, {"b*x + y", "b*y - x"}}, {constant("b", "0.5", "b >= 0")}, false, {}},
      {"A3,7", 3, {dy, xdy, {"1 + x^2", "(x + b)*y"}}, {constant("b", "0.5", "b >= 0")}, false, {}},
      {"A3,8", 3, {dy, dil, {"2*x*y", "y^2"}}, {}, false, {}},
      {"A3,8alt", 3, {dx, {"2*x", "y"}, {"x^2", "x*y"}}, {}, false, "alternative realization of A3,8"},
      {"A3,9", 3, {dy, dil, {"2*x*y", "y^2 - x^2"}}, {}, false, {}},
      {"A3,10", 3, {dy, dil, {"2*x*y", "y^2 + x^2"}}, {}, false, {}},
      {"A3,10alt", 3, {{"1", "1"}, dil, {"x^2", "y^2"}}, {}, false, "alternative realization of A3,10"},
      {"A3,11", 3, {dy, ydy, {"0", "y^2"}}, {}, false, {}},
      {"A3,12", 3, {{"1 + x^2", "x*y"}, {"x*y", "1 + y^2"}, {"y", "-x"}}, {}, false, {}},
      {"A3,13", 3, {dx, dy, ydy}, {}, false, {}},
      {"A3,14", 3, {xdy, dy, dil}, {}, false, {}},
      {"A3,15", 3, {dy, xdy, {"0", "chi"}}, {chi}, false, {}},
      {"A4,1", 4, {dy, xdy, {"0", "x^2"}, dx}, {}, false, {}},
      {"A4,2", 4, {dy, xdy, {"0", "exp(x)"}, dx}, {}, false, {}},
      {"A4,3", 4, {dy, xdy, {"0", "x^2"}, {"1", "y"}}, {}, false, {}},
      {"A4,4", 4, {dy, xdy, {"0", "abs(x)^alpha"}, {"(1 - a)*x", "y"}},
       {constant("a", "0.5", "a in [-1, 0) or (0, 1)"), constant("alpha", "2.5", "alpha not in {0, 1/(1-a), 1}")},
       true, "further restrictions on a and alpha exist in the literature and are not encoded"},
      {"A4,5", 4, {dy, xdy, {"0", "chi"}, ydy}, {chi}, false, {}},
      {"A4,6", 4, {dy, xdy, {"0", "exp(a*x)"}, {"1", "y"}}, {constant("a", "2", "a != 0, 1")}, false, {}},
      {"A4,7", 4, {dy, {"0", "exp(alpha*x)*cos(beta*x)"}, {"0", "exp(alpha*x)*sin(beta*x)"}, {"1", "y"}},
       {constant("alpha", "0.5"), constant("beta", "1", "beta != 0")}, false, {}},
      {"A4,8", 4, {dy, dx, xdy, {"x", "0"}}, {}, false, {}},
      {"A4,9", 4, {dy, dx, xdy, {"x", "a*y"}}, {constant("a", "2", "a != 0, 1")}, false, {}},
      {"A4,10", 4, {dy, dx, xdy, {"x", "2*y + x^2"}}, {}, false, {}},
      {"A4,11", 4, {dy, dx, xdy, dil}, {}, false, {}},
      {"A4,12", 4, {dy, xdy, dx, ydy}, {}, false, {}},
      {"A4,13", 4, {dx, dy, dil, {"y", "-x"}}, {}, false, {}},
      {"A4,14", 4, {dy, xdy, ydy, {"1 + x^2", "x*y"}}, {}, false, {}},
      {"A4,15", 4, {{"0", "abs(x)^(1/(1 - a))"}, dy, xdy, {"(1 - a)*x", "y"}},
       {constant("a", "0.5", "a in [-1, 0) or (0, 1)")}, false, {}},
      {"A4,16", 4, {{"0", "exp(x)"}, dy, xdy, {"1", "y"}}, {}, false, {}},
      {"A4,17", 4, {dy, dx, {"0", "exp(alpha*x)*cos(x)"}, {"0", "exp(alpha*x)*sin(x)"}},
       {constant("alpha", "0.5", "alpha >= 0")}, false, {}},
      {"A4,18", 4, {dx, dy, ydy, {"0", "y^2"}}, {}, false, {}},
      {"A4,19", 4, {{"x", "0"}, dy, dil, {"2*x*y", "y^2"}}, {}, false, {}},
      {"A4,20", 4, {dx, {"x", "0"}, dy, ydy}, {}, false, {}},
      {"A4,21", 4, {dy, dil, xdy, {"x", "0"}}, {}, false, {}},
      {"A4,22", 4, {dy, xdy, {"0", "chi1"}, {"0", "chi2"}},
       {function("chi1", {"x"}, "x^3", "1, x, chi1, chi2 linearly independent"),
        function("chi2", {"x"}, "exp(x)", "1, x, chi1, chi2 linearly independent")},
       false, {}},
      {"so31", 6,
       {dx, dy, dil, {"y", "-x"}, {"x^2 - y^2", "2*x*y"}, {"2*x*y", "y^2 - x^2"}}, {}, false, "so(3,1)"},
  };
  return a;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<VectorField> AlgebraRealization::basis(const ParamValues& values) const {
  const Resolved r = resolve(params, values, id);
  std::vector<VectorField> out;
  int k = 1;
  for (const auto& [xi, eta] : fields) {
    out.push_back({instantiate(xi, plane_variables(), r), instantiate(eta, plane_variables(), r),
                   "X" + std::to_string(k++)});
  }
  return out;
}

const std::vector<AlgebraRealization>& list_algebras() {
  static const std::vector<AlgebraRealization> a = make_algebras();
  return a;
}

const AlgebraRealization& find_algebra(std::string_view id) {
  for (const auto& a : list_algebras())
    if (a.id == id) return a;
  throw UnknownFamily("unknown algebra '" + std::string(id) + "'");
}

double ElementaryInvariant::operator()(const JetPoint& j) const {
  const auto c = j.coords();
  return expr.evaluate<double>(std::span<const double>(c));
}

const std::vector<InvariantFamily>& list_families() {
  static const std::vector<InvariantFamily> f = [] {
    std::vector<InvariantFamily> v;
    for (const auto& i : families_impl()) v.push_back(i.meta);
    return v;
  }();
  return f;
}

const InvariantFamily& find_family(std::string_view id) { return find_impl(id).meta; }

DODSystem invariant_family(std::string_view id, const ParamValues& params) {
  const auto& impl = find_impl(id);
  const Resolved r = resolve(impl.meta.params, params, impl.meta.id);
  DODSystem sys = impl.build(r);
  sys.domain = impl.meta.domain;
  sys.box = impl.meta.box;
  sys.box.x = impl.meta.domain;
  const auto report = validate_system(sys);
  if (!report.ok()) {
    std::string why;
    for (const auto& c : report.checks)
      if (!c.passed) why += (why.empty() ? "" : "; ") + c.name + ": " + c.detail;
    throw ParamError(impl.meta.id + ": parameters give an invalid system (" + why + ")");
  }
  return sys;
}

std::vector<ElementaryInvariant> elementary_invariants(std::string_view id, const ParamValues& params) {
  const auto& impl = find_impl(id);
  const Resolved r = resolve(impl.meta.params, params, impl.meta.id);
  std::vector<ElementaryInvariant> out;
  for (const auto& [label, tmpl] : impl.meta.invariants) out.push_back({label, jet(tmpl, r)});
  return out;
}

ResolvedParams resolve_family_params(std::string_view id, const ParamValues& params) {
  const auto& impl = find_impl(id);
  Resolved r = resolve(impl.meta.params, params, impl.meta.id);
  return {std::move(r.c), std::move(r.fn)};
}

std::vector<VectorField> family_basis(std::string_view id, const ParamValues& params) {
  const auto& fam = find_family(id);
  const auto& alg = find_algebra(fam.algebra);
  ParamValues shared;
  for (const auto& p : alg.params) {
    auto it = params.find(p.name);
    if (it != params.end()) {
      shared.emplace(p.name, it->second);
    } else {
      for (const auto& q : fam.params)
        if (q.name == p.name) shared.emplace(p.name, q.default_value);
    }
  }
  return alg.basis(shared);
}

nlohmann::json export_catalog() {
  using nlohmann::json;
  auto params_json = [](const std::vector<ParamSpec>& ps) {
    json arr = json::array();
    for (const auto& p : ps) {
      json j{{"name", p.name}, {"kind", p.function ? "function" : "constant"}, {"default", p.default_value},
             {"range", p.range}};
      if (p.function) j["args"] = p.args;
      arr.push_back(j);
    }
    return arr;
  };
  json algebras = json::array();
  for (const auto& a : list_algebras()) {
    json basis = json::array();
    for (const auto& [xi, eta] : a.fields) basis.push_back({{"xi", xi}, {"eta", eta}});
    algebras.push_back({{"id", a.id},
                        {"dim", a.dim},
                        {"basis", basis},
                        {"params", params_json(a.params)},
                        {"flagged", a.flagged},
                        {"note", a.note}});
  }
  json families = json::array();
  for (const auto& f : list_families()) {
    json inv = json::array();
    for (const auto& [label, tmpl] : f.invariants) inv.push_back({{"label", label}, {"expr", expand(tmpl)}});
    families.push_back({{"id", f.id},
                        {"algebra", f.algebra},
                        {"params", params_json(f.params)},
                        {"dode", f.rhs_form},
                        {"delay", f.delay_form},
                        {"implicit_dode", f.implicit_rhs},
                        {"implicit_delay", f.implicit_delay},
                        {"invariants", inv},
                        {"domain", {f.domain.lo, f.domain.hi}},
                        {"box", {{"y", {f.box.y.lo, f.box.y.hi}}, {"y_", {f.box.y_minus.lo, f.box.y_minus.hi}}}},
                        {"domain_note", f.domain_note}});
  }
  return {{"schema_version", 1}, {"algebras", algebras}, {"families", families}};
}

}  // namespace dods
