#include "polchinski/hamilton_jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polchinski {

namespace {

double golden_refine(const std::function<double(double)>& f, double lo, double hi, int iters) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int k = 0; k < iters; ++k) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

HopfLaxResult hopf_lax(const std::function<double(double)>& v0, double t, double phi,
                       const HopfLaxOptions& options) {
  if (!(t > 0)) {
    return HopfLaxResult{v0(phi), {phi}, false};
  }
  const auto objective = [&](double z) { return v0(z) + (phi - z) * (phi - z) / (2.0 * t); };

  // Coercivity check at the scan edges.
  const double edge = std::min(objective(-options.radius), objective(options.radius));
  double scan_min = std::numeric_limits<double>::infinity();
  const int m = options.scan_points;
  std::vector<double> values(m);
  for (int i = 0; i < m; ++i) {
    const double z = -options.radius + 2.0 * options.radius * i / (m - 1);
    values[i] = objective(z);
    scan_min = std::min(scan_min, values[i]);
  }
  if (edge <= scan_min + 1e-12)
    throw std::invalid_argument(
        "hopf_lax: objective not coercive on the scan domain (minimum at the edge)");

  // Refine every local minimum of the scan that is close to the optimum.
  HopfLaxResult res;
  res.value = std::numeric_limits<double>::infinity();
  std::vector<double> candidates;
  const double h = 2.0 * options.radius / (m - 1);
  for (int i = 1; i + 1 < m; ++i) {
    if (values[i] <= values[i - 1] && values[i] <= values[i + 1] &&
        values[i] <= scan_min + 10.0) {
      const double z0 = -options.radius + i * h;
      const double z = golden_refine(objective, z0 - h, z0 + h, 80);
      candidates.push_back(z);
      res.value = std::min(res.value, objective(z));
    }
  }
  std::sort(candidates.begin(), candidates.end());
  for (double z : candidates) {
    if (objective(z) > res.value + options.value_tol) continue;
    if (!res.minimisers.empty() &&
        std::abs(z - res.minimisers.back()) < options.separation_tol)
      continue;
    res.minimisers.push_back(z);
  }
  res.shock = res.minimisers.size() > 1;
  return res;
}

CharacteristicPath characteristics(const std::function<double(double)>& v0, double t,
                                   double phi_end, int steps, const HopfLaxOptions& options) {
  CharacteristicPath path;
  const auto grad_v = [&](double s, double phi, bool& shock) {
    const HopfLaxResult hl = hopf_lax(v0, s, phi, options);
    shock = hl.shock;
    return (phi - hl.minimisers.front()) / s;
  };

  double phi = phi_end;
  const double dt = t / steps;
  path.times.push_back(t);
  path.states.push_back(phi);
  bool shock = false;
  double g0 = grad_v(t, phi, shock);
  path.grad.push_back(g0);
  if (shock) {
    path.shock_crossed = true;
    return path;
  }

  for (int k = 0; k < steps; ++k) {
    const double s = t - k * dt;
    const double s_half = s - 0.5 * dt, s_next = s - dt;
    // RK4 down in time; fall back to the conserved slope below the HL floor.
    bool sh1 = false, sh2 = false, sh3 = false, sh4 = false;
    const double eps_t = 1e-6 * t;
    const auto g = [&](double ss, double pp, bool& sh) {
      if (ss < eps_t) {
        sh = false;
        return path.grad.back();
      }
      return grad_v(ss, pp, sh);
    };
    const double k1 = g(s, phi, sh1);
    const double k2 = g(s_half, phi - 0.5 * dt * k1, sh2);
    const double k3 = g(s_half, phi - 0.5 * dt * k2, sh3);
    const double k4 = g(s_next, phi - dt * k3, sh4);
    if (sh1 || sh2 || sh3 || sh4) {
      path.shock_crossed = true;
      break;
    }
    phi -= dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    path.times.push_back(s_next);
    path.states.push_back(phi);
    bool sh = false;
    path.grad.push_back(g(s_next, phi, sh));
    if (sh) {
      path.shock_crossed = true;
      break;
    }
  }
  for (double gv : path.grad)
    path.conservation_residual = std::max(path.conservation_residual, std::abs(gv - g0));
  return path;
}

double classical_variational(const std::function<double(double)>& v0, double t, double phi,
                             const std::function<double(double, double)>& drift, int steps) {
  double x = phi, cost = 0.0;
  const double dt = t / steps;
  for (int k = 0; k < steps; ++k) {
    const double s = t - k * dt;
    // RK4 for dx/ds = U_s(x) integrated downwards; cost by Simpson-in-step.
    const double k1 = drift(s, x);
    const double k2 = drift(s - 0.5 * dt, x - 0.5 * dt * k1);
    const double k3 = drift(s - 0.5 * dt, x - 0.5 * dt * k2);
    const double k4 = drift(s - dt, x - dt * k3);
    if (!std::isfinite(k1) || !std::isfinite(k4))
      throw std::runtime_error("classical_variational: drift integration failure");
    cost += dt / 6.0 * (k1 * k1 + 2 * k2 * k2 + 2 * k3 * k3 + k4 * k4) * 0.5;
    x -= dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return v0(x) + cost;
}

double curie_weiss_free_energy(long n_spins, double beta, double h) {
  if (n_spins < 1 || n_spins > 1000000)
    throw std::invalid_argument("curie_weiss_free_energy: N in [1, 10^6]");
  const double n = static_cast<double>(n_spins);
  // log-sum-exp over magnetisation sectors k = #up:
  //   log C(N,k) - N log 2 + N (beta m^2/2 + h m), m = 2k/N - 1.
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(n_spins + 1);
  for (long k = 0; k <= n_spins; ++k) {
    const double m = 2.0 * k / n - 1.0;
    const double log_binom =
        std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    terms[k] = log_binom - n * std::log(2.0) + n * (0.5 * beta * m * m + h * m);
    best = std::max(best, terms[k]);
  }
  double acc = 0.0;
  for (double v : terms) acc += std::exp(v - best);
  return -(best + std::log(acc)) / n;
}

double curie_weiss_free_energy_limit(double beta, double h, double* minimiser) {
  const auto f = [&](double phi) {
    return 0.5 * beta * phi * phi - std::log(std::cosh(beta * phi + h));
  };
  double best_x = 0.0, best = f(0.0);
  for (int i = 0; i <= 800; ++i) {
    const double x = -2.0 + 4.0 * i / 800.0;
    const double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  const double x = golden_refine(f, best_x - 0.01, best_x + 0.01, 120);
  if (minimiser) *minimiser = x;
  return f(x);
}

double curie_weiss_hj_residual(long n_spins, double beta, double h, double dh, double dbeta) {
  const auto f = [&](double b, double hh) { return curie_weiss_free_energy(n_spins, b, hh); };
  const double fb = (f(beta + dbeta, h) - f(beta - dbeta, h)) / (2.0 * dbeta);
  const double fh = (f(beta, h + dh) - f(beta, h - dh)) / (2.0 * dh);
  const double fhh = (f(beta, h + dh) - 2.0 * f(beta, h) + f(beta, h - dh)) / (dh * dh);
  return fb - (fhh / (2.0 * n_spins) - 0.5 * fh * fh);
}

double cw_clock(double alpha, double t) { return t / (alpha * (alpha - t)); }

double CwReducedResult::free_energy_at(double h, double alpha, double t) const {
  const double phi = h / (alpha - t);
  return grid.value_at(phi) - 0.5 * h * h / (alpha - t);
}

CwReducedResult cw_reduced_polchinski(long n_spins, double alpha, double t_end,
                                      double phi_radius, int grid_points) {
  if (!(alpha > t_end)) throw std::invalid_argument("cw_reduced_polchinski: needs t_end < alpha");
  const auto v0 = [alpha](double phi) {
    return 0.5 * alpha * phi * phi - std::log(std::cosh(alpha * phi));
  };
  CwReducedResult out;
  if (n_spins <= 0) {
    // HJ limit via Hopf-Lax on the reduced clock.
    const double tau = cw_clock(alpha, t_end);
    PdeGrid1d grid;
    grid.x.resize(grid_points);
    grid.v.resize(grid_points);
    for (int i = 0; i < grid_points; ++i) {
      grid.x[i] = -phi_radius + 2.0 * phi_radius * i / (grid_points - 1);
      grid.v[i] = hopf_lax(v0, tau, grid.x[i]).value;
    }
    grid.time = t_end;
    out.grid = std::move(grid);
  } else {
    Pde1dOptions opt;
    opt.radius = phi_radius;
    opt.points = grid_points;
    opt.godunov_flux = true;
    opt.cfl_safety = 0.4;
    out.grid = reduced_polchinski_solve(v0, t_end, alpha, 1.0 / n_spins, opt);
    // Pin the additive constant: V~_t(0) should equal F_N(t, 0).
    const double direct = curie_weiss_free_energy(n_spins, t_end, 0.0);
    out.offset_applied = direct - out.grid.value_at(0.0);
    for (auto& v : out.grid.v) v += out.offset_applied;
  }
  return out;
}

}  // namespace polchinski
