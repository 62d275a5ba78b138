#include "polchinski/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace polchinski {

namespace {

// log(w e^{x^2}) = -log(n psi_{n-1}(x)^2) with psi_k the orthonormal Hermite
// functions, evaluated with running rescaling so extreme nodes stay exact.
double log_total_weight_at(int n, double x) {
  double log_scale = -0.5 * x * x - 0.25 * std::log(M_PI);
  double p_prev = 0.0;
  double p = 1.0;  // psi_0 modulo the scale factor
  for (int k = 0; k < n - 1; ++k) {
    const double next =
        x * std::sqrt(2.0 / (k + 1)) * p - std::sqrt(double(k) / (k + 1)) * p_prev;
    p_prev = p;
    p = next;
    const double mag = std::abs(p);
    if (mag > 1e250 || (mag > 0 && mag < 1e-250)) {
      const double adj = std::log(mag);
      p /= mag;
      p_prev /= mag;
      log_scale += adj;
    }
  }
  return -std::log(static_cast<double>(n)) - 2.0 * (std::log(std::abs(p)) + log_scale);
}

GaussHermite build_rule(int n) {
  // Jacobi matrix of the (physicists') Hermite polynomials: zero diagonal,
  // off-diagonal sqrt(k/2).
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(0.5 * k);
    j(k, k - 1) = b;
    j(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(j);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("GaussHermite: Jacobi eigen-decomposition failed");
  GaussHermite rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  rule.log_total_weight.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()[i];
    rule.log_total_weight[i] = log_total_weight_at(n, rule.nodes[i]);
    rule.weights[i] =
        std::exp(rule.log_total_weight[i] - rule.nodes[i] * rule.nodes[i]);
  }
  return rule;
}

}  // namespace

const GaussHermite& GaussHermite::order(int n) {
  static std::mutex mutex;
  static std::map<int, GaussHermite> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

double gauss_expect(const std::function<double(double)>& f, double mean, double var, int n) {
  if (var < 0) throw std::invalid_argument("gauss_expect: negative variance");
  if (var == 0) return f(mean);
  const GaussHermite& rule = GaussHermite::order(n);
  const double s = std::sqrt(2.0 * var);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += rule.weights[i] * f(mean + s * rule.nodes[i]);
  return acc / std::sqrt(M_PI);
}

namespace {
double simpson(const std::function<double(double)>& f, double a, double fa, double b, double fb,
               double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a, double fa, double b,
                     double fb, double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, fa, m, fm, lm, flm);
  const double right = simpson(f, m, fm, b, fb, rm, frm);
  // The tolerance is not halved per level: below machine resolution the
  // Richardson test could otherwise never pass and the recursion explodes.
  const double local_tol = std::max(0.5 * tol, 1e-16 * std::abs(whole));
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * local_tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, local_tol, depth - 1) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, local_tol, depth - 1);
}
}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
  // Seed with a composite split so localised mass cannot slip between the
  // three initial probe points.
  const int panels = 32;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + (b - a) * k / panels;
    const double hi = a + (b - a) * (k + 1) / panels;
    const double m = 0.5 * (lo + hi);
    const double flo = f(lo), fhi = f(hi), fm = f(m);
    total += adaptive_step(f, lo, flo, hi, fhi, m, fm, simpson(f, lo, flo, hi, fhi, m, fm),
                           tol / panels, max_depth);
  }
  return total;
}

}  // namespace polchinski
