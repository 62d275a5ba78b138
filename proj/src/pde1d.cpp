#include "polchinski/pde1d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polchinski {

double PdeGrid1d::value_at(double phi) const {
  if (phi <= x.front()) return v.front();
  if (phi >= x.back()) return v.back();
  const double h = x[1] - x[0];
  const size_t i = std::min(x.size() - 2, static_cast<size_t>((phi - x.front()) / h));
  const double w = (phi - x[i]) / h;
  return (1.0 - w) * v[i] + w * v[i + 1];
}

namespace {

// March dV/dt = s(t) [ eta/2 V'' - 1/2 (V')^2 ] with forward Euler.
PdeGrid1d march(const std::function<double(double)>& v0, double t_end,
                const std::function<double(double)>& speed, double eta,
                const Pde1dOptions& opt) {
  if (opt.points < 16) throw std::invalid_argument("pde1d: too few grid points");
  const int m = opt.points;
  const double h = 2.0 * opt.radius / (m - 1);

  PdeGrid1d grid;
  grid.x.resize(m);
  grid.v.resize(m);
  for (int i = 0; i < m; ++i) {
    grid.x[i] = -opt.radius + i * h;
    grid.v[i] = v0(grid.x[i]);
  }

  // Speed bound over the time interval for the CFL pick.
  double s_max = 0.0;
  for (int k = 0; k <= 64; ++k) s_max = std::max(s_max, speed(t_end * k / 64.0));

  double grad_max = opt.max_gradient_hint;
  if (grad_max <= 0.0) {
    for (int i = 1; i < m; ++i)
      grad_max = std::max(grad_max, std::abs(grid.v[i] - grid.v[i - 1]) / h);
    grad_max = std::max(grad_max, 1.0);
  }

  double dt = std::numeric_limits<double>::infinity();
  if (eta > 0.0) dt = std::min(dt, opt.cfl_safety * h * h / (eta * s_max));
  dt = std::min(dt, opt.cfl_safety * h / (grad_max * s_max));
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(t_end / dt)));
  dt = t_end / steps;

  std::vector<double> next(m);
  double t = 0.0;
  for (long step = 0; step < steps; ++step) {
    const double s = speed(t);
    const auto at = [&](int i) -> double {
      // Quadratic extrapolation through the outermost three points.
      if (i < 0) return 3.0 * grid.v[0] - 3.0 * grid.v[1] + grid.v[2];
      if (i >= m) return 3.0 * grid.v[m - 1] - 3.0 * grid.v[m - 2] + grid.v[m - 3];
      return grid.v[i];
    };
    for (int i = 0; i < m; ++i) {
      const double vm = at(i - 1), vc = at(i), vp = at(i + 1);
      const double lap = (vp - 2.0 * vc + vm) / (h * h);
      double grad_sq;
      if (opt.godunov_flux) {
        const double pl = (vc - vm) / h;
        const double pr = (vp - vc) / h;
        const double pl_pos = std::max(pl, 0.0);
        const double pr_neg = std::min(pr, 0.0);
        grad_sq = std::max(pl_pos * pl_pos, pr_neg * pr_neg);
      } else {
        const double p = (vp - vm) / (2.0 * h);
        grad_sq = p * p;
      }
      next[i] = vc + dt * s * (0.5 * eta * lap - 0.5 * grad_sq);
      if (!std::isfinite(next[i]))
        throw std::runtime_error(
            "pde1d: instability detected (non-finite value); the step-size bound dt <= "
            "cfl * h^2 / (eta * cdot) was violated by the solution dynamics");
    }
    grid.v.swap(next);
    t += dt;
  }
  grid.time = t_end;
  grid.dt_used = dt;
  grid.steps = steps;
  return grid;
}

}  // namespace

PdeGrid1d polchinski_pde_solve_1d(const std::function<double(double)>& v0, double t_end,
                                  const Pde1dOptions& options) {
  return march(v0, t_end, options.c_dot, options.viscosity, options);
}

PdeGrid1d reduced_polchinski_solve(const std::function<double(double)>& v0, double t_end,
                                   double alpha, double eta, const Pde1dOptions& options) {
  if (t_end >= alpha) throw std::invalid_argument("reduced_polchinski_solve: needs t_end < alpha");
  const auto speed = [alpha](double t) {
    const double d = alpha - t;
    return 1.0 / (d * d);
  };
  return march(v0, t_end, speed, eta, options);
}

}  // namespace polchinski
