#include "dods/symmetry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/numeric/odeint.hpp>

#include "dods/numerics.hpp"

namespace dods {

namespace {

struct PlaneJet {
  double xi, xi_x, xi_y, eta, eta_x, eta_y;
};

PlaneJet plane_derivatives(const VectorField& f, double x, double y) {
  const Expr xi = f.xi.rebase(plane_variables());
  const Expr eta = f.eta.rebase(plane_variables());
  std::array<Dual<double>, 2> dx{Dual<double>{x, 1.0}, Dual<double>{y, 0.0}};
  std::array<Dual<double>, 2> dy{Dual<double>{x, 0.0}, Dual<double>{y, 1.0}};
  auto a = xi.evaluate<Dual<double>>(std::span<const Dual<double>>(dx));
  auto b = xi.evaluate<Dual<double>>(std::span<const Dual<double>>(dy));
  auto c = eta.evaluate<Dual<double>>(std::span<const Dual<double>>(dx));
  auto d = eta.evaluate<Dual<double>>(std::span<const Dual<double>>(dy));
  return {a.value, a.partial, b.partial, c.value, c.partial, d.partial};
}

double eval_plane(const Expr& e, double x, double y) {
  const double v[2] = {x, y};
  return e.rebase(plane_variables()).evaluate<double>(std::span<const double>(v, 2));
}

}  // namespace

ProlongedField prolong(const VectorField& field, const JetPoint& jet) {
  const auto p = plane_derivatives(field, jet.x, jet.y);
  ProlongedField out;
  out.xi = p.xi;
  out.eta = p.eta;
  out.xi_minus = eval_plane(field.xi, jet.x_minus, jet.y_minus);
  out.eta_minus = eval_plane(field.eta, jet.x_minus, jet.y_minus);
  const double yd = jet.ydot;
  out.zeta = p.eta_x + yd * p.eta_y - yd * (p.xi_x + yd * p.xi_y);
  return out;
}

double apply_prolonged(const VectorField& field, const Expr& invariant, const JetPoint& jet) {
  const auto pr = prolong(field, jet).coords();
  const auto c = jet.coords();
  return directional(invariant.rebase(jet_variables()), std::span<const double>(c), std::span<const double>(pr)).partial;
}

DeterminingResidual determining_residual(const VectorField& field, const DODSystem& system, const JetPoint& jet) {
  const auto c = jet.coords();
  const double e1 = system.E1().evaluate<double>(std::span<const double>(c));
  const double e2 = system.E2().evaluate<double>(std::span<const double>(c));
  double scale = 1.0;
  for (double v : c) scale = std::max(scale, std::abs(v));
  if (!(std::abs(e1) <= 1e-10 * scale) || !(std::abs(e2) <= 1e-10 * scale))
    throw ManifoldError("jet is not on the system manifold");
  const auto pr = prolong(field, jet);
  const auto mp = manifold_partials(system, jet);
  DeterminingResidual r;
  r.r1 = pr.zeta - (pr.xi * mp.ydot[0] + pr.eta * mp.ydot[1] + pr.eta_minus * mp.ydot[2]);
  r.r2 = pr.xi_minus - (pr.xi * mp.x_minus[0] + pr.eta * mp.x_minus[1] + pr.eta_minus * mp.x_minus[2]);
  return r;
}

SymmetryVerdict is_symmetry(const VectorField& field, const DODSystem& system, int sample, std::uint64_t seed,
                            double tol, InvarianceMode mode) {
  if (sample < 20) throw ConfigError("is_symmetry needs at least 20 samples");
  SymmetryVerdict v;
  if (mode == InvarianceMode::Weak) {
    const auto jets = sample_manifold(system, sample, seed);
    if (jets.empty()) throw ConfigError("no admissible manifold jets in the sampling box");
    for (const auto& j : jets) {
      const auto r = determining_residual(field, system, j);
      const double m = std::max(std::abs(r.r1), std::abs(r.r2));
      if (!std::isfinite(m)) continue;
      v.max_residual = std::max(v.max_residual, m);
      ++v.samples;
    }
  } else {
    const auto& b = system.box;
    if (!(b.x.width() > 0) || !(b.y.width() > 0) || !(b.y_minus.width() > 0))
      throw ConfigError("degenerate sampling box");
    HaltonSampler h(5, seed);
    const double span = std::max(1.0, b.x.width());
    for (int attempt = 0; attempt < sample * 20 && v.samples < sample; ++attempt) {
      auto u = h.next();
      JetPoint j;
      j.x = b.x.lo + u[0] * b.x.width();
      j.y = b.y.lo + u[1] * b.y.width();
      j.x_minus = j.x - (0.05 + 0.95 * u[2]) * span;
      j.y_minus = b.y_minus.lo + u[3] * b.y_minus.width();
      j.ydot = b.y.lo + u[4] * b.y.width();
      const double a = apply_prolonged(field, system.E1(), j);
      const double c = apply_prolonged(field, system.E2(), j);
      const double m = std::max(std::abs(a), std::abs(c));
      if (!std::isfinite(m)) continue;
      v.max_residual = std::max(v.max_residual, m);
      ++v.samples;
    }
  }
  if (v.samples == 0) throw ConfigError("no finite residual samples");
  v.verdict = v.max_residual <= tol;
  return v;
}

int rank_Z(const std::vector<VectorField>& fields, const JetPoint& jet) {
  Eigen::MatrixXd Z(static_cast<Eigen::Index>(fields.size()), 5);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto c = prolong(fields[i], jet).coords();
    for (int k = 0; k < 5; ++k) Z(static_cast<Eigen::Index>(i), k) = c[static_cast<std::size_t>(k)];
  }
  if (!Z.allFinite()) return -1;
  return numerical_rank(Z, 1e-9);
}

int invariant_count(const std::vector<VectorField>& fields, int sample, std::uint64_t seed) {
  HaltonSampler h(5, seed);
  int best = 0, used = 0;
  for (int attempt = 0; attempt < sample * 20 && used < sample; ++attempt) {
    auto u = h.next();
    JetPoint j{-3 + 6 * u[0], -3 + 6 * u[1], -3 + 6 * u[2], -3 + 6 * u[3], -3 + 6 * u[4]};
    const int r = rank_Z(fields, j);
    if (r < 0) continue;
    best = std::max(best, r);
    ++used;
  }
  return 5 - best;
}

// ---------------------------------------------------------------------------

namespace {

using State4 = std::array<double, 4>;

State4 integrate_flow(const VectorField& field, double epsilon, State4 s) {
  if (epsilon == 0.0) return s;
  const Expr xi = field.xi.rebase(plane_variables());
  const Expr eta = field.eta.rebase(plane_variables());
  auto rhs = [&](const State4& q, State4& dq, double) {
    const auto p = plane_derivatives(field, q[0], q[1]);
    dq[0] = p.xi;
    dq[1] = p.eta;
    dq[2] = p.xi_x * q[2] + p.xi_y * q[3];
    dq[3] = p.eta_x * q[2] + p.eta_y * q[3];
  };
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled(1e-14, 1e-14, ode::runge_kutta_dopri5<State4>());
  try {
    ode::integrate_adaptive(stepper, rhs, s, 0.0, epsilon, epsilon / 64.0);
  } catch (const std::exception& e) {
    throw BlowUpError(std::string("flow integration failed: ") + e.what());
  }
  for (double v : s)
    if (!std::isfinite(v) || std::abs(v) > 1e150) throw BlowUpError("flow blew up");
  return s;
}

}  // namespace

std::pair<double, double> flow(const VectorField& field, double epsilon, std::pair<double, double> point) {
  auto s = integrate_flow(field, epsilon, {point.first, point.second, 0.0, 0.0});
  return {s[0], s[1]};
}

FlowedJet flow_with_slope(const VectorField& field, double epsilon, double x, double y, double slope) {
  auto s = integrate_flow(field, epsilon, {x, y, 1.0, slope});
  return {s[0], s[1], s[3] / s[2]};
}

std::pair<double, double> TransformedSolution::evaluate(double at) const {
  if (x.size() < 2 || at < x.front() - 1e-12 || at > x.back() + 1e-12) throw OutOfRange("outside transformed table");
  auto it = std::upper_bound(x.begin(), x.end(), at);
  std::size_t i = static_cast<std::size_t>(it - x.begin());
  i = std::clamp<std::size_t>(i, 1, x.size() - 1);
  while (i > 1 && x[i] == x[i - 1]) --i;
  const double x0 = x[i - 1], x1 = x[i];
  const double h = x1 - x0;
  const double t = (at - x0) / h, t2 = t * t, t3 = t2 * t;
  const double y0 = y[i - 1], y1 = y[i], f0 = slope[i - 1], f1 = slope[i];
  const double v = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * f0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * f1;
  const double d = ((6 * t2 - 6 * t) * y0 + (-6 * t2 + 6 * t) * y1) / h + (3 * t2 - 4 * t + 1) * f0 + (3 * t2 - 2 * t) * f1;
  return {v, d};
}

TransformedSolution transform_solution(const VectorField& field, double epsilon, const PiecewiseSolution& sol,
                                       int grid) {
  if (grid < 2) throw ConfigError("transform_solution needs at least 2 grid points");
  const double lo = sol.x_begin(), hi = sol.x_end();
  // Nodes: a uniform grid plus both one-sided limits at every breakpoint.
  struct Node {
    double x, y, slope;
  };
  std::vector<Node> nodes;
  std::vector<double> bps;
  for (double b : sol.breakpoints)
    if (b > lo && b < hi) bps.push_back(b);
  for (int i = 0; i < grid; ++i) {
    const double x = lo + (hi - lo) * i / (grid - 1);
    bool near_bp = false;
    for (double b : bps)
      if (std::abs(x - b) < 1e-12 * std::max(1.0, std::abs(b))) near_bp = true;
    if (near_bp) continue;
    auto [y, yd] = sol.evaluate(x);
    if (i == grid - 1) {
      auto left = sol.evaluate(std::nextafter(hi, lo));
      yd = left.second;
    }
    nodes.push_back({x, y, yd});
  }
  for (double b : bps) {
    const auto left = sol.evaluate(std::nextafter(b, lo));
    const auto right = sol.evaluate(b);
    nodes.push_back({b, right.first, left.second});
    nodes.push_back({std::nextafter(b, hi), right.first, right.second});
  }
  std::stable_sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.x < b.x; });

  TransformedSolution out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto f = flow_with_slope(field, epsilon, nodes[i].x, nodes[i].y, nodes[i].slope);
    // The two one-sided nodes of a breakpoint share an image abscissa.
    const bool paired = i > 0 && nodes[i].x == std::nextafter(nodes[i - 1].x, hi);
    out.x.push_back(paired ? out.x.back() : f.x);
    out.y.push_back(f.y);
    out.slope.push_back(f.slope);
    if (i > 0 && !paired && !(out.x[i] > out.x[i - 1])) throw NonGraphError("transformed abscissae are not increasing");
  }
  out.start = flow(field, epsilon, {sol.initial_interval.hi, sol.evaluate(sol.initial_interval.hi).first}).first;
  for (double b : bps) out.breakpoint_images.push_back(flow(field, epsilon, {b, sol.evaluate(b).first}).first);
  return out;
}

double residual(const TransformedSolution& sol, const DODSystem& system, int n) {
  const auto problem = to_problem(system);
  ScalarWithSlope ev = [&sol](double x) { return sol.evaluate(x); };
  return residual(problem, ev, sol.history_lo(), sol.start, sol.x_end(), n, sol.breakpoint_images);
}

}  // namespace dods
