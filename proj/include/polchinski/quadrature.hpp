#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace polchinski {

// Gauss-Hermite rule for weight e^{-x^2} (Golub-Welsch), cached per order.
// log_total_weight[i] = log(w_i e^{x_i^2}), computed from the orthonormal
// Hermite functions: Golub-Welsch weights at extreme nodes are rounding
// noise, which matters whenever the Gaussian factor is re-absorbed into the
// integrand (importance-shifted rules).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to sqrt(pi)
  std::vector<double> log_total_weight;

  static const GaussHermite& order(int n);
};

// E[f(z)] for z ~ N(mean, var) via an n-node rule.
double gauss_expect(const std::function<double(double)>& f, double mean, double var, int n = 160);

// Adaptive Simpson on [a,b] to absolute tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int max_depth = 30);

}  // namespace polchinski
