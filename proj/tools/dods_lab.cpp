// dods_lab: batch front end for the delay ordinary differential system library.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "dods/catalog.hpp"
#include "dods/errors.hpp"
#include "dods/invariant_solutions.hpp"
#include "dods/linear.hpp"
#include "dods/solver.hpp"
#include "dods/symmetry.hpp"

using nlohmann::json;
using namespace dods;
namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;

enum Exit : int {
  kOk = 0,
  kConfig = 1,
  kCompatibility = 2,
  kCausality = 3,
  kNoRoots = 4,
  kCheckFailed = 5,
  kNumerical = 6,
};

/// Error carrying its exit code through the command layer.
struct Failure : std::runtime_error {
  int code;
  Failure(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// --- TOML access --------------------------------------------------------------

const toml::table* sub(const toml::table& t, std::string_view key) { return t[key].as_table(); }

double num(const toml::table& t, std::string_view key, double fallback) {
  const auto n = t[key];
  if (!n) return fallback;
  if (auto v = n.value<double>()) return *v;
  throw ConfigError(std::string(key) + ": expected a number");
}

std::string text(const toml::table& t, std::string_view key, std::string fallback = {}) {
  const auto n = t[key];
  if (!n) return fallback;
  if (auto v = n.value<std::string>()) return *v;
  if (auto v = n.value<double>()) return fmt(*v);
  throw ConfigError(std::string(key) + ": expected a string");
}

Interval interval(const toml::table& t, std::string_view key, std::optional<Interval> fallback = {}) {
  const auto* a = t[key].as_array();
  if (!a) {
    if (fallback) return *fallback;
    throw ConfigError(std::string(key) + ": missing [lo, hi]");
  }
  if (a->size() != 2) throw ConfigError(std::string(key) + ": expected [lo, hi]");
  const auto lo = (*a)[0].value<double>(), hi = (*a)[1].value<double>();
  if (!lo || !hi) throw ConfigError(std::string(key) + ": bounds must be numbers");
  return {*lo, *hi};
}

ParamValues params_of(const toml::table* t) {
  ParamValues out;
  if (!t) return out;
  for (const auto& [k, v] : *t) {
    if (auto s = v.value<std::string>())
      out[std::string(k.str())] = *s;
    else if (auto d = v.value<double>())
      out[std::string(k.str())] = fmt(*d);
    else
      throw ConfigError("parameter " + std::string(k.str()) + ": expected a number or expression string");
  }
  return out;
}

struct SystemSpec {
  DODSystem system;
  std::string family;  // empty for raw systems
  ParamValues params;
};

SystemSpec read_system(const toml::table& cfg) {
  const auto* s = sub(cfg, "system");
  if (!s) throw ConfigError("missing [system] table");
  SystemSpec spec;
  spec.family = text(*s, "family");
  if (!spec.family.empty()) {
    spec.params = params_of(sub(*s, "params"));
    spec.system = invariant_family(spec.family, spec.params);
    if ((*s)["domain"]) spec.system.domain = interval(*s, "domain");
    return spec;
  }
  const std::string f = text(*s, "f"), g = text(*s, "g"), G = text(*s, "delay_residual");
  if (f.empty()) throw ConfigError("[system] needs either family or f");
  if (g.empty() == G.empty()) throw ConfigError("[system] needs exactly one of g and delay_residual");
  const Interval d = interval(*s, "domain");
  const std::string label = text(*s, "label", "raw");
  if (!g.empty()) {
    spec.system = DODSystem::make(f, g, d, label);
  } else {
    spec.system = DODSystem::with_implicit_delay(parse(f, {"x", "y", "x_", "y_"}), parse(G, {"x", "y", "x_", "y_"}),
                                                 d, label);
  }
  if ((*s)["delta_max"]) spec.system.delta_max = num(*s, "delta_max", 10.0);
  return spec;
}

SolverOptions read_solver(const toml::table& cfg) {
  SolverOptions o;
  const auto* s = sub(cfg, "solver");
  if (!s) return o;
  o.rel_tol = num(*s, "rel_tol", o.rel_tol);
  o.abs_tol = num(*s, "abs_tol", o.abs_tol);
  o.max_step = num(*s, "max_step", o.max_step);
  o.initial_step = num(*s, "initial_step", o.initial_step);
  o.min_step = num(*s, "min_step", o.min_step);
  o.delay_root_tol = num(*s, "delay_root_tol", o.delay_root_tol);
  o.compat_tol = num(*s, "compat_tol", o.compat_tol);
  if (auto f = (*s)["force"].value<bool>()) o.force = *f;
  return o;
}

json solver_json(const SolverOptions& o) {
  return {{"rel_tol", o.rel_tol},       {"abs_tol", o.abs_tol},       {"max_step", o.max_step},
          {"initial_step", o.initial_step}, {"min_step", o.min_step}, {"delay_root_tol", o.delay_root_tol},
          {"compat_tol", o.compat_tol}, {"force", o.force},           {"max_steps", o.max_steps}};
}

/// Every numeric default a run can use, printed by --verbose.
json defaults_json() {
  return {{"solver", solver_json(SolverOptions{})},
          {"solve", {{"residual_tol", 1e-8}, {"residual_points", 400}, {"initial_samples", 21}}},
          {"check_symmetry", {{"sample", 200}, {"tol", 1e-9}, {"mode", "weak"}, {"seed", 1}}},
          {"invariant_solutions", {{"tol", 1e-10}, {"verify_grid", 200}, {"csv_samples", 201}}},
          {"classify_linear", {{"tol", 1e-8}, {"grid", 200}, {"canonical_grid", 2001}, {"mode", "canonical2"}}},
          {"threads", "DODS_LAB_THREADS or hardware concurrency"}};
}

std::optional<fs::path> out_dir(const toml::table& cfg) {
  const auto* o = sub(cfg, "output");
  if (!o) return std::nullopt;
  const std::string d = text(*o, "dir");
  if (d.empty()) return std::nullopt;
  fs::create_directories(d);
  return fs::path(d);
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + p.string());
  os << content;
}

// --- commands ----------------------------------------------------------------

struct Outcome {
  json report;
  int code = kOk;
};

Outcome cmd_solve(const toml::table& cfg) {
  const auto spec = read_system(cfg);
  const auto opts = read_solver(cfg);
  const auto* init = sub(cfg, "initial");
  if (!init) throw ConfigError("missing [initial] table");
  const Expr phi = parse(text(*init, "phi", "0"), {"x"});
  const Interval I = interval(*init, "interval");
  const double x_end = num(*init, "x_end", I.hi + 1.0);
  const double tol = num(*init, "residual_tol", 1e-8);

  const auto sol = solve(spec.system, phi, I, x_end, opts);
  const double res = residual(sol, spec.system, 400);
  Outcome out;
  out.report = {{"schema_version", kSchemaVersion},
                {"command", "solve"},
                {"system", spec.system.label},
                {"initial_interval", {I.lo, I.hi}},
                {"x_end", sol.x_end()},
                {"breakpoints", sol.breakpoints},
                {"y_end", sol.evaluate(sol.x_end()).first},
                {"residual", res},
                {"residual_tol", tol},
                {"accepted_steps", sol.diagnostics.accepted_steps},
                {"warnings", sol.diagnostics.warnings}};
  if (const auto dir = out_dir(cfg)) {
    std::ostringstream csv;
    csv.imbue(std::locale::classic());
    write_csv(sol, csv);
    write_file(*dir / "solution.csv", csv.str());
    write_file(*dir / "breakpoints.json", breakpoints_json(sol) + "\n");
    write_file(*dir / "report.json", out.report.dump(2) + "\n");
  }
  out.code = res <= tol ? kOk : kCheckFailed;
  return out;
}

Outcome cmd_check_symmetry(const toml::table& cfg) {
  const auto spec = read_system(cfg);
  std::vector<VectorField> fields;
  if (const auto* arr = cfg["fields"].as_array()) {
    for (const auto& node : *arr) {
      const auto* t = node.as_table();
      if (!t) throw ConfigError("[[fields]] entries must be tables");
      fields.push_back(VectorField::parse(text(*t, "xi", "0"), text(*t, "eta", "0"), text(*t, "label")));
    }
  } else if (!spec.family.empty()) {
    fields = family_basis(spec.family, spec.params);
  }
  if (fields.empty()) throw ConfigError("no fields to check: add [[fields]] or use a catalog family");

  int sample = 200;
  double tol = 1e-9;
  auto mode = InvarianceMode::Weak;
  if (const auto* s = sub(cfg, "symmetry")) {
    sample = static_cast<int>(num(*s, "sample", sample));
    tol = num(*s, "tol", tol);
    const std::string m = text(*s, "mode", "weak");
    if (m == "strong")
      mode = InvarianceMode::Strong;
    else if (m != "weak")
      throw ConfigError("symmetry.mode must be weak or strong");
  }
  const auto seed = static_cast<std::uint64_t>(num(cfg, "seed", 1));

  Outcome out;
  json rows = json::array();
  bool all = true;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto v = is_symmetry(fields[i], spec.system, sample, seed, tol, mode);
    all = all && v.verdict;
    const std::string label = fields[i].label.empty() ? "X" + std::to_string(i + 1) : fields[i].label;
    rows.push_back({{"label", label},
                    {"field", fields[i].to_string()},
                    {"verdict", v.verdict},
                    {"max_residual", v.max_residual},
                    {"samples", v.samples}});
  }
  out.report = {{"schema_version", kSchemaVersion},
                {"command", "check-symmetry"},
                {"system", spec.system.label},
                {"mode", mode == InvarianceMode::Weak ? "weak" : "strong"},
                {"tol", tol},
                {"seed", seed},
                {"fields", rows},
                {"all_pass", all}};
  if (const auto dir = out_dir(cfg)) write_file(*dir / "symmetry.json", out.report.dump(2) + "\n");
  out.code = all ? kOk : kCheckFailed;
  return out;
}

Outcome cmd_invariant_solutions(const toml::table& cfg) {
  const auto* s = sub(cfg, "system");
  if (!s || text(*s, "family").empty()) throw ConfigError("invariant-solutions needs [system] family");
  const std::string family = text(*s, "family");
  const ParamValues params = params_of(sub(*s, "params"));
  const DODSystem sys = invariant_family(family, params);

  std::string only;
  Constants free;
  double tol = 1e-10;
  int samples = 201;
  std::vector<std::vector<double>> seeds;
  if (const auto* t = sub(cfg, "invariant")) {
    only = text(*t, "subalgebra");
    tol = num(*t, "tol", tol);
    samples = static_cast<int>(num(*t, "csv_samples", samples));
    if (const auto* f = sub(*t, "free"))
      for (const auto& [k, v] : *f) free[std::string(k.str())] = v.value<double>().value_or(0.0);
    if (const auto* arr = (*t)["seeds"].as_array())
      for (const auto& row : *arr) {
        std::vector<double> r;
        if (const auto* ra = row.as_array())
          for (const auto& e : *ra) r.push_back(e.value<double>().value_or(0.0));
        seeds.push_back(r);
      }
  }

  const auto dir = out_dir(cfg);
  Outcome out;
  json results = json::array();
  std::size_t found = 0;
  for (const auto& ans : subalgebra_catalog(family)) {
    if (!only.empty() && ans.subalgebra != only) continue;
    json r{{"subalgebra", ans.subalgebra}, {"unknowns", ans.unknowns}, {"reduction", {{"h", ans.h}, {"k", ans.k}}}};
    r["numeric_only"] = ans.numeric_only;
    r["parametric"] = ans.parametric;
    const auto cs = solve_constraints(ans, params, free, seeds, tol);
    json sols = json::array();
    for (std::size_t i = 0; i < cs.solutions.size(); ++i) {
      const auto& a = cs.solutions[i];
      const auto built = build_solution(ans, a);
      json j{{"constants", a.values},
             {"constraint_residual", a.residual},
             {"y", built.y_text()},
             {"domain", {built.domain.lo, built.domain.hi}},
             {"verify", verify(sys, built)}};
      if (!built.parametric && !built.numeric_only) j["delay"] = built.delay_text();
      if (built.parametric) j["x"] = built.x_of.to_string();
      sols.push_back(j);
      if (dir) {
        std::ostringstream csv;
        csv.imbue(std::locale::classic());
        csv << (built.parametric ? "phi," : "") << "x,y,x_,y_,ydot\n";
        for (int k = 0; k < samples; ++k) {
          const double t = built.domain.lo + built.domain.width() * k / (samples - 1);
          const auto p = built.jet(t);
          if (built.parametric) csv << fmt(t) << ',';
          csv << fmt(p.x) << ',' << fmt(p.y) << ',' << fmt(p.x_minus) << ',' << fmt(p.y_minus) << ',' << fmt(p.ydot)
              << '\n';
        }
        std::string name = ans.subalgebra;
        std::replace(name.begin(), name.end(), '+', 'p');
        std::replace(name.begin(), name.end(), '-', 'm');
        write_file(*dir / ("invariant_" + name + "_" + std::to_string(i) + ".csv"), csv.str());
      }
    }
    found += cs.solutions.size();
    r["solutions"] = sols;
    r["diagnostics"] = cs.diagnostics;
    results.push_back(r);
  }
  if (results.empty()) throw ConfigError("no subalgebra " + only + " for " + family);
  out.report = {{"schema_version", kSchemaVersion},
                {"command", "invariant-solutions"},
                {"family", family},
                {"params", params},
                {"tol", tol},
                {"results", results}};
  if (dir) write_file(*dir / "invariant_solutions.json", out.report.dump(2) + "\n");
  out.code = found > 0 ? kOk : kNoRoots;
  return out;
}

/// Readable Z from samples: closed forms only for constant coefficients.
std::string describe_z(const ExtraSymmetry& z, Interval d) {
  auto constant_on = [&](const Expr& e, double& c) {
    c = e({d.lo});
    for (int i = 0; i <= 50; ++i)
      if (std::abs(e({d.lo + d.width() * i / 50}) - c) > 1e-9 * std::max(1.0, std::abs(c))) return false;
    return true;
  };
  double xi = 0, a = 0;
  std::string s;
  if (constant_on(z.xi, xi))
    s = std::abs(xi - 1) <= 1e-9 ? "d/dx" : fmt(xi) + " d/dx";
  else
    s = "xi(x) d/dx";
  const bool a_const = constant_on(z.A, a);
  if (z.B)
    s += a_const && a == 0 ? " + B(x) d/dy" : " + (A(x) y + B(x)) d/dy";
  else if (!a_const)
    s += " + A(x) y d/dy";
  else if (std::abs(a) > 1e-12)
    s += std::abs(a - 1) <= 1e-9 ? " + y d/dy" : " + " + fmt(a) + " y d/dy";
  return s;
}

Outcome cmd_classify_linear(const toml::table& cfg) {
  const auto* t = sub(cfg, "linear");
  if (!t) throw ConfigError("missing [linear] table");
  const auto lin = LinearDODS::parse(text(*t, "alpha", "0"), text(*t, "beta", "1"), text(*t, "gamma", "0"),
                                     text(*t, "g"), interval(*t, "domain", Interval{1, 5}));
  const double tol = num(*t, "tol", 1e-8);
  const int grid = static_cast<int>(num(*t, "grid", 200));
  const std::string mode_text = text(*t, "mode", "canonical2");
  CanonicalMode mode;
  if (mode_text == "canonical2")
    mode = CanonicalMode::Canonical2;
  else if (mode_text == "canonical3")
    mode = CanonicalMode::Canonical3;
  else
    throw ConfigError("linear.mode must be canonical2 or canonical3");

  const auto rep = extra_symmetry(lin, tol, grid);
  Outcome out;
  json j{{"schema_version", kSchemaVersion},
         {"command", "classify-linear"},
         {"tag", rep.symmetry ? "compatible" : "incompatible"},
         {"compatibility",
          {{"holds", rep.compatibility.holds},
           {"max_defect", rep.compatibility.max_defect},
           {"worst_x", rep.compatibility.worst_x},
           {"skipped", rep.compatibility.skipped}}},
         {"functional_defect", rep.functional_defect},
         {"diagnostics", rep.diagnostics}};
  if (rep.symmetry) {
    j["Z"] = describe_z(*rep.symmetry, lin.domain);
    json samples = json::array();
    for (int i = 0; i <= 10; ++i) {
      const double x = lin.domain.lo + lin.domain.width() * i / 10;
      json row{{"x", x}, {"xi", rep.symmetry->xi({x})}, {"A", rep.symmetry->A({x})}};
      row["B"] = rep.symmetry->B ? rep.symmetry->B->evaluate(x).first : 0.0;
      samples.push_back(row);
    }
    j["Z_samples"] = samples;
  } else {
    j["Z"] = nullptr;
  }
  try {
    const auto c = canonical_form(lin, mode, tol);
    json cj{{"form", c.form}, {"C", c.C}, {"coefficient", c.coefficient}, {"coefficient_spread", c.coefficient_spread}};
    const auto im = c.x_map.image();
    cj["xbar_range"] = {im.lo, im.hi};
    json samples = json::array();
    const auto& d = c.system.domain;
    for (int i = 0; i <= 10; ++i) {
      const double xb = d.lo + d.width() * i / 10;
      samples.push_back({{"xbar", xb},
                         {"x", c.x_map.inverse(xb)},
                         {"beta", c.system.beta({xb})},
                         {"gamma", c.system.gamma({xb})},
                         {"g", c.system.g({xb})}});
    }
    cj["samples"] = samples;
    cj["diagnostics"] = c.diagnostics;
    j["canonical"] = cj;
  } catch (const NonMonotoneTransform& e) {
    j["canonical"] = {{"form", nullptr}, {"error", e.what()}};
  }
  out.report = j;
  if (const auto dir = out_dir(cfg)) write_file(*dir / "classify_linear.json", j.dump(2) + "\n");
  return out;
}

// --- catalog and export ---------------------------------------------------------

bool is_alternative(const std::string& id) { return id.size() > 3 && id.ends_with("alt"); }

json catalog_listing(std::optional<int> dim, const std::string& id) {
  const json full = export_catalog();
  json classes = json::array();
  for (const auto& a : full["algebras"]) {
    const std::string aid = a["id"];
    if (dim && a["dim"] != *dim) continue;
    if (!id.empty() && aid != id && aid != id + "alt") continue;
    if (is_alternative(aid)) {
      // Alternative realizations attach to their class.
      const std::string base = aid.substr(0, aid.size() - 3);
      auto it = std::find_if(classes.begin(), classes.end(), [&](const json& c) { return c["id"] == base; });
      if (it != classes.end()) {
        (*it)["alternatives"].push_back(a);
        continue;
      }
    }
    json c = a;
    c["alternatives"] = json::array();
    c["families"] = json::array();
    classes.push_back(c);
  }
  for (auto& c : classes) {
    for (const auto& f : full["families"]) {
      const std::string alg = f["algebra"];
      if (alg == c["id"] || std::any_of(c["alternatives"].begin(), c["alternatives"].end(),
                                        [&](const json& a) { return a["id"] == alg; }))
        c["families"].push_back(f);
    }
  }
  return {{"schema_version", kSchemaVersion}, {"count", classes.size()}, {"classes", classes}};
}

void print_catalog_table(const json& listing, std::ostream& os) {
  os << listing["count"].get<std::size_t>() << " algebra classes\n";
  for (const auto& c : listing["classes"]) {
    os << c["id"].get<std::string>() << "  dim " << c["dim"].get<int>() << "  ";
    bool first = true;
    for (const auto& b : c["basis"]) {
      os << (first ? "" : ", ") << "(" << b["xi"].get<std::string>() << ")dx + (" << b["eta"].get<std::string>()
         << ")dy";
      first = false;
    }
    os << '\n';
    for (const auto& a : c["alternatives"]) os << "    alternative " << a["id"].get<std::string>() << '\n';
    for (const auto& f : c["families"])
      os << "    family " << f["id"].get<std::string>() << ": " << f["dode"].get<std::string>() << ";  "
         << f["delay"].get<std::string>() << '\n';
  }
}

// --- sweeps -------------------------------------------------------------------

struct Sweep {
  std::string key;
  double lo, hi;
  int n;
};

Sweep parse_sweep(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("--sweep expects key=lo:hi:n");
  Sweep s;
  s.key = spec.substr(0, eq);
  const std::string range = spec.substr(eq + 1);
  const auto c1 = range.find(':'), c2 = range.rfind(':');
  if (c1 == std::string::npos || c1 == c2) throw ConfigError("--sweep expects key=lo:hi:n");
  try {
    s.lo = std::stod(range.substr(0, c1));
    s.hi = std::stod(range.substr(c1 + 1, c2 - c1 - 1));
    s.n = std::stoi(range.substr(c2 + 1));
  } catch (const std::exception&) {
    throw ConfigError("--sweep: bad range " + range);
  }
  if (s.n < 1) throw ConfigError("--sweep: n must be positive");
  return s;
}

double sweep_value(const Sweep& s, int i) { return s.n == 1 ? s.lo : s.lo + (s.hi - s.lo) * i / (s.n - 1); }

/// Copy of `cfg` with the dotted key set; strings stay strings.
toml::table with_value(const toml::table& cfg, const std::string& key, double v) {
  toml::table out = cfg;
  toml::table* t = &out;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      const auto existing = (*t)[part];
      if (existing.is_string())
        t->insert_or_assign(part, fmt(v));
      else
        t->insert_or_assign(part, v);
      return out;
    }
    if (!(*t)[part].is_table()) t->insert_or_assign(part, toml::table{});
    t = (*t)[part].as_table();
    start = dot + 1;
  }
}

unsigned thread_cap() {
  if (const char* e = std::getenv("DODS_LAB_THREADS")) {
    const int v = std::atoi(e);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const Failure*>(&e)) return static_cast<const Failure&>(e).code;
  if (dynamic_cast<const CompatibilityError*>(&e)) return kCompatibility;
  if (dynamic_cast<const CausalityError*>(&e)) return kCausality;
  if (dynamic_cast<const NoRootFound*>(&e)) return kNoRoots;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParamError*>(&e) ||
      dynamic_cast<const SyntaxError*>(&e) || dynamic_cast<const UnknownIdentifier*>(&e) ||
      dynamic_cast<const UnknownFamily*>(&e) || dynamic_cast<const DegenerateFamilyError*>(&e) ||
      dynamic_cast<const DelayOrderError*>(&e) || dynamic_cast<const toml::parse_error*>(&e))
    return kConfig;
  return kNumerical;
}

Outcome run_guarded(const std::function<Outcome(const toml::table&)>& cmd, const toml::table& cfg) {
  try {
    return cmd(cfg);
  } catch (const std::exception& e) {
    Outcome o;
    o.code = exit_code_for(e);
    o.report = {{"schema_version", kSchemaVersion}, {"error", e.what()}, {"exit_code", o.code}};
    return o;
  }
}

/// Runs one config, or a grid of configs when sweeps are given.
Outcome dispatch(const std::function<Outcome(const toml::table&)>& cmd, const toml::table& cfg,
                 const std::vector<std::string>& sweep_specs) {
  if (sweep_specs.empty()) return run_guarded(cmd, cfg);

  std::vector<Sweep> sweeps;
  for (const auto& s : sweep_specs) sweeps.push_back(parse_sweep(s));
  std::size_t total = 1;
  for (const auto& s : sweeps) total *= static_cast<std::size_t>(s.n);

  std::string base_dir;
  if (const auto* o = sub(cfg, "output")) base_dir = text(*o, "dir");

  std::vector<toml::table> configs;
  std::vector<json> values;
  for (std::size_t r = 0; r < total; ++r) {
    toml::table c = cfg;
    json vals = json::object();
    std::size_t idx = r;
    for (const auto& s : sweeps) {
      const int i = static_cast<int>(idx % static_cast<std::size_t>(s.n));
      idx /= static_cast<std::size_t>(s.n);
      const double v = sweep_value(s, i);
      c = with_value(c, s.key, v);
      vals[s.key] = v;
    }
    if (!base_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "run_%04zu", r);
      c = [&] {
        toml::table t = c;
        if (!t["output"].is_table()) t.insert_or_assign("output", toml::table{});
        t["output"].as_table()->insert_or_assign("dir", (fs::path(base_dir) / name).string());
        return t;
      }();
    }
    configs.push_back(std::move(c));
    values.push_back(vals);
  }

  std::vector<Outcome> results(total);
  std::atomic<std::size_t> next{0};
  const unsigned n_threads = std::min<unsigned>(thread_cap(), static_cast<unsigned>(total));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < total;) results[i] = run_guarded(cmd, configs[i]);
    });
  for (auto& th : pool) th.join();

  Outcome out;
  json runs = json::array();
  for (std::size_t i = 0; i < total; ++i) {
    runs.push_back({{"index", i}, {"values", values[i]}, {"exit_code", results[i].code}, {"report", results[i].report}});
    out.code = std::max(out.code, results[i].code);
  }
  out.report = {{"schema_version", kSchemaVersion}, {"sweep", sweep_specs}, {"runs", runs}};
  return out;
}

// --- human tables ---------------------------------------------------------------

void print_table(const std::string& command, const json& r, std::ostream& os) {
  if (r.contains("error")) {
    os << "error: " << r["error"].get<std::string>() << '\n';
    return;
  }
  if (r.contains("runs")) {
    for (const auto& run : r["runs"]) {
      os << "run " << run["index"].get<std::size_t>() << " " << run["values"].dump() << " exit "
         << run["exit_code"].get<int>() << '\n';
      print_table(command, run["report"], os);
    }
    return;
  }
  if (command == "solve") {
    os << "x_end " << r["x_end"] << "  y(x_end) " << r["y_end"] << "  residual " << r["residual"] << '\n';
    os << "breakpoints " << r["breakpoints"].dump() << '\n';
  } else if (command == "check-symmetry") {
    for (const auto& f : r["fields"])
      os << (f["verdict"].get<bool>() ? "PASS " : "FAIL ") << f["label"].get<std::string>() << "  "
         << f["field"].get<std::string>() << "  max residual " << f["max_residual"] << '\n';
  } else if (command == "invariant-solutions") {
    for (const auto& res : r["results"]) {
      os << r["family"].get<std::string>() << " <" << res["subalgebra"].get<std::string>() << ">  "
         << res["solutions"].size() << " solution(s)\n";
      for (const auto& s : res["solutions"]) {
        os << "    y = " << s["y"].get<std::string>();
        if (s.contains("delay")) os << ",  x_ = " << s["delay"].get<std::string>();
        os << "  on [" << s["domain"][0] << ", " << s["domain"][1] << "]  verify " << s["verify"] << '\n';
      }
      for (const auto& d : res["diagnostics"]) os << "    note: " << d.get<std::string>() << '\n';
    }
  } else if (command == "classify-linear") {
    os << "tag " << r["tag"].get<std::string>() << "  defect " << r["compatibility"]["max_defect"]
       << "  functional defect " << r["functional_defect"] << '\n';
    if (!r["Z"].is_null()) os << "Z = " << r["Z"].get<std::string>() << '\n';
    if (r["canonical"].contains("form") && !r["canonical"]["form"].is_null())
      os << "canonical form " << r["canonical"]["form"].get<std::string>() << "  C " << r["canonical"]["C"] << '\n';
    for (const auto& d : r["diagnostics"]) os << "note: " << d.get<std::string>() << '\n';
  }
}

toml::table load_config(const std::string& path) {
  try {
    return toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << path << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(os.str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dods_lab: delay ordinary differential systems, symmetries and invariant solutions"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  std::string format = "json";
  app.add_flag("-v,--verbose", verbose, "Print every numeric default to stderr");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "table"}));

  auto* catalog = app.add_subcommand("catalog", "List algebra realizations and invariant families");
  std::optional<int> dim;
  std::string id;
  catalog->add_option("--dim", dim, "Algebra dimension");
  catalog->add_option("--id", id, "Algebra or family id, e.g. A3,4");

  auto* exporter = app.add_subcommand("export", "Write the full catalog as JSON");
  std::string export_path;
  exporter->add_option("-o,--out", export_path, "Output file (stdout when omitted)");

  struct ConfigCommand {
    CLI::App* app;
    std::function<Outcome(const toml::table&)> run;
  };
  std::string config_path;
  std::vector<std::string> sweeps;
  std::vector<ConfigCommand> config_commands;
  auto add_config_command = [&](const std::string& name, const std::string& help,
                                std::function<Outcome(const toml::table&)> fn) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("config", config_path, "TOML configuration")->required()->check(CLI::ExistingFile);
    c->add_option("--sweep", sweeps, "Parameter sweep key=lo:hi:n (dotted config key); repeatable");
    config_commands.push_back({c, std::move(fn)});
  };
  add_config_command("solve", "Integrate a system by the method of steps", cmd_solve);
  add_config_command("check-symmetry", "Check vector fields against the determining equations", cmd_check_symmetry);
  add_config_command("invariant-solutions", "Group-invariant solutions of a catalog family", cmd_invariant_solutions);
  add_config_command("classify-linear", "Compatibility, extra symmetry and canonical form of a linear system",
                     cmd_classify_linear);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  if (verbose) std::cerr << "defaults " << defaults_json().dump(2) << '\n';

  if (catalog->parsed()) {
    const json listing = catalog_listing(dim, id);
    if (format == "json")
      std::cout << listing.dump(2) << '\n';
    else
      print_catalog_table(listing, std::cout);
    return kOk;
  }
  if (exporter->parsed()) {
    const std::string s = export_catalog().dump(2) + "\n";
    if (export_path.empty()) {
      std::cout << s;
    } else {
      try {
        write_file(export_path, s);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
      }
    }
    return kOk;
  }

  for (const auto& c : config_commands) {
    if (!c.app->parsed()) continue;
    Outcome out;
    try {
      const toml::table cfg = load_config(config_path);
      out = dispatch(c.run, cfg, sweeps);
    } catch (const std::exception& e) {
      out.code = exit_code_for(e);
      out.report = {{"schema_version", kSchemaVersion}, {"error", e.what()}, {"exit_code", out.code}};
    }
    if (format == "json")
      std::cout << out.report.dump(2) << '\n';
    else
      print_table(c.app->get_name(), out.report, std::cout);
    if (format == "json" && out.report.contains("error")) std::cerr << "error: " << out.report["error"].get<std::string>() << '\n';
    return out.code;
  }
  return kConfig;
}
