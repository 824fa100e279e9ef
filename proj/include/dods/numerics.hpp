#pragma once

// Small numerical helpers shared by several modules.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace dods {

/// Low-discrepancy points in [0,1)^dim: Halton sequence with a seeded
/// Cranley-Patterson rotation, so different seeds give different but equally
/// well-spread samples.
class HaltonSampler {
 public:
  HaltonSampler(int dim, std::uint64_t seed);
  std::vector<double> next();
  int dimension() const noexcept { return dim_; }

 private:
  int dim_;
  std::uint64_t index_ = 1;
  std::vector<double> shift_;
};

/// All sign changes of h on [a, b], refined by TOMS748 to `tol` in the
/// abscissa and returned in descending order. Non-finite samples break
/// brackets rather than produce spurious roots.
std::vector<double> bracket_roots(const std::function<double(double)>& h, double a, double b, int grid = 400,
                                  double tol = 1e-14, bool log_spaced_near_b = false);

/// Root of h on [a, b] given h(a), h(b) of opposite sign.
double refine_root(const std::function<double(double)>& h, double a, double b, double fa, double fb, double tol);

/// Adaptive Gauss-Kronrod quadrature of f over [a, b] (a > b allowed).
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-13);

struct LeastSquaresResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;  // max-norm of the residual at x
  int iterations = 0;
  bool converged = false;
};

/// Damped Gauss-Newton on r(x) = 0 (square or overdetermined) using the
/// supplied Jacobian; steps solve J dx = -r by column-pivoted QR.
LeastSquaresResult gauss_newton(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                                const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian,
                                Eigen::VectorXd x0, double tol = 1e-14, int max_iter = 100);

/// Numerical rank: singular values above rel_threshold * sigma_max.
int numerical_rank(const Eigen::MatrixXd& m, double rel_threshold = 1e-9);

}  // namespace dods
