#include "dods/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace dods {

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

double radical_inverse(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
  }
  return r;
}

}  // namespace

HaltonSampler::HaltonSampler(int dim, std::uint64_t seed) : dim_(dim), shift_(static_cast<std::size_t>(dim)) {
  if (dim < 1 || dim > static_cast<int>(std::size(kPrimes))) throw std::invalid_argument("HaltonSampler dimension");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& s : shift_) s = u(rng);
}

std::vector<double> HaltonSampler::next() {
  std::vector<double> out(static_cast<std::size_t>(dim_));
  for (int d = 0; d < dim_; ++d) {
    double v = radical_inverse(index_, kPrimes[d]) + shift_[static_cast<std::size_t>(d)];
    out[static_cast<std::size_t>(d)] = v - std::floor(v);
  }
  ++index_;
  return out;
}

double refine_root(const std::function<double(double)>& h, double a, double b, double fa, double fb, double tol) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (a > b) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  std::uintmax_t iters = 200;
  auto stop = [tol](double l, double r) { return std::abs(r - l) <= tol * std::max(1.0, std::abs(l)); };
  auto r = boost::math::tools::toms748_solve(h, a, b, fa, fb, stop, iters);
  return 0.5 * (r.first + r.second);
}

std::vector<double> bracket_roots(const std::function<double(double)>& h, double a, double b, int grid, double tol,
                                  bool log_spaced_near_b) {
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(2 * grid + 2));
  for (int i = 0; i <= grid; ++i) pts.push_back(b - (b - a) * i / grid);
  if (log_spaced_near_b) {
    const double span = b - a;
    for (int i = 0; i <= grid; ++i) {
      const double t = -12.0 + 12.0 * i / grid;  // 1e-12 .. 1 of the span
      pts.push_back(b - span * std::pow(10.0, t));
    }
  }
  std::sort(pts.begin(), pts.end(), std::greater<>());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  std::vector<double> roots;
  double prev_x = pts.front();
  double prev_h = h(prev_x);
  if (prev_h == 0.0) roots.push_back(prev_x);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double xi = pts[i];
    const double hi = h(xi);
    if (std::isfinite(prev_h) && std::isfinite(hi)) {
      if (hi == 0.0) {
        roots.push_back(xi);
      } else if (prev_h != 0.0 && (prev_h < 0) != (hi < 0)) {
        const double r = refine_root(h, xi, prev_x, hi, prev_h, tol);
        // Poles also flip sign; keep only genuine zeros.
        const double hr = h(r);
        const double scale = std::max({1.0, std::abs(hi), std::abs(prev_h)});
        if (std::isfinite(hr) && std::abs(hr) <= 1e-6 * scale) roots.push_back(r);
      }
    }
    prev_x = xi;
    prev_h = hi;
  }
  return roots;
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, rel_tol);
}

LeastSquaresResult gauss_newton(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                                const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian,
                                Eigen::VectorXd x0, double tol, int max_iter) {
  LeastSquaresResult out;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd r = residual(x);
  auto norm2 = [](const Eigen::VectorXd& v) {
    return v.allFinite() ? v.squaredNorm() : std::numeric_limits<double>::infinity();
  };
  double cost = norm2(r);
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    if (!std::isfinite(cost)) break;
    if (r.lpNorm<Eigen::Infinity>() <= tol) break;
    Eigen::MatrixXd J = jacobian(x);
    if (!J.allFinite()) break;
    Eigen::VectorXd dx = J.colPivHouseholderQr().solve(-r);
    if (!dx.allFinite()) break;
    double lambda = 1.0;
    bool improved = false;
    for (int k = 0; k < 30; ++k) {
      Eigen::VectorXd trial = x + lambda * dx;
      Eigen::VectorXd rt = residual(trial);
      double ct = norm2(rt);
      if (ct < cost) {
        x = trial;
        r = rt;
        cost = ct;
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) break;
    if ((lambda * dx).lpNorm<Eigen::Infinity>() <= 1e-16 * std::max(1.0, x.lpNorm<Eigen::Infinity>())) break;
  }
  out.x = x;
  out.residual_norm = std::isfinite(cost) ? r.lpNorm<Eigen::Infinity>() : std::numeric_limits<double>::infinity();
  out.converged = out.residual_norm <= tol;
  return out;
}

int numerical_rank(const Eigen::MatrixXd& m, double rel_threshold) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_threshold * s(0)) ++r;
  return r;
}

}  // namespace dods
