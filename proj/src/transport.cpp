#include "polchinski/transport.hpp"

#include <cmath>
#include <stdexcept>

namespace polchinski {

Eigen::MatrixXd scaling_matrix(const CovarianceSchedule& sched, double t) {
  return sched.coupling().apply([&](double a) {
    const double v = 1.0 - a * sched.scalar_c(a, t);
    if (v <= 0) throw std::domain_error("scaling_matrix: id - A C_t not positive definite");
    return 1.0 / std::sqrt(v);
  });
}

double scaling_scalar(const CovarianceSchedule& sched, double t) {
  const double a = sched.coupling().eigenvalues()[0];
  const double v = 1.0 - a * sched.scalar_c(a, t);
  if (v <= 0) throw std::domain_error("scaling_matrix: id - A C_t not positive definite");
  return 1.0 / std::sqrt(v);
}

namespace {

struct Phase {
  std::vector<double> s, jac;
};

// One RK4 step of the coupled (S, dS) system.
void rk4_step(const RenormEvaluator& flow, const RenormOptions& opts, double t, double dt,
              Phase& y) {
  const auto& sched = flow.schedule();
  const double a = sched.coupling().eigenvalues()[0];
  const size_t n = y.s.size();

  struct Deriv {
    std::vector<double> ds, dj;
  };
  const auto f = [&](double tt, const Phase& p) {
    Deriv d;
    d.ds.resize(n);
    d.dj.resize(n);
    const double dscale = scaling_scalar(sched, tt);
    const double cdot = sched.scalar_c_dot(a, tt);
    for (size_t i = 0; i < n; ++i) {
      const double x = p.s[i] / dscale;
      d.ds[i] = 0.5 * dscale * cdot * flow.grad1d(tt, x, opts);
      d.dj[i] = 0.5 * cdot * flow.hess1d(tt, x, opts) * p.jac[i];
    }
    return d;
  };

  const Deriv k1 = f(t, y);
  Phase y2 = y;
  for (size_t i = 0; i < n; ++i) {
    y2.s[i] = y.s[i] + 0.5 * dt * k1.ds[i];
    y2.jac[i] = y.jac[i] + 0.5 * dt * k1.dj[i];
  }
  const Deriv k2 = f(t + 0.5 * dt, y2);
  for (size_t i = 0; i < n; ++i) {
    y2.s[i] = y.s[i] + 0.5 * dt * k2.ds[i];
    y2.jac[i] = y.jac[i] + 0.5 * dt * k2.dj[i];
  }
  const Deriv k3 = f(t + 0.5 * dt, y2);
  for (size_t i = 0; i < n; ++i) {
    y2.s[i] = y.s[i] + dt * k3.ds[i];
    y2.jac[i] = y.jac[i] + dt * k3.dj[i];
  }
  const Deriv k4 = f(t + dt, y2);
  for (size_t i = 0; i < n; ++i) {
    y.s[i] += dt / 6.0 * (k1.ds[i] + 2 * k2.ds[i] + 2 * k3.ds[i] + k4.ds[i]);
    y.jac[i] += dt / 6.0 * (k1.dj[i] + 2 * k2.dj[i] + 2 * k3.dj[i] + k4.dj[i]);
  }
}

Phase integrate_to(const RenormEvaluator& flow, const RenormOptions& opts, const Phase& start,
                   double t0, double t1, int steps) {
  Phase y = start;
  const double dt = (t1 - t0) / steps;
  for (int k = 0; k < steps; ++k) rk4_step(flow, opts, t0 + k * dt, dt, y);
  return y;
}

double phase_distance(const Phase& a, const Phase& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.s.size(); ++i) {
    d = std::max(d, std::abs(a.s[i] - b.s[i]));
    d = std::max(d, std::abs(a.jac[i] - b.jac[i]));
  }
  return d;
}

}  // namespace

std::vector<TransportState> transport_flow(const RenormEvaluator& flow,
                                           const std::vector<double>& base_points,
                                           const std::vector<double>& t_grid,
                                           const TransportOptions& options) {
  if (flow.model().n_sites() != 1)
    throw std::invalid_argument("transport_flow: implemented for single-site models");
  std::vector<double> grid = t_grid;
  std::sort(grid.begin(), grid.end());
  if (!grid.empty() && grid.front() < 0)
    throw std::invalid_argument("transport_flow: negative time");

  Phase y;
  y.s = base_points;
  y.jac.assign(base_points.size(), 1.0);

  std::vector<TransportState> out;
  double t_prev = 0.0;
  for (double t : grid) {
    if (t > t_prev) {
      int steps = options.initial_steps;
      Phase coarse = integrate_to(flow, options.renorm, y, t_prev, t, steps);
      int halvings = 0;
      for (;;) {
        Phase fine = integrate_to(flow, options.renorm, y, t_prev, t, steps * 2);
        if (phase_distance(coarse, fine) <= options.halving_tol) {
          y = fine;
          break;
        }
        if (++halvings > options.max_halvings)
          throw std::runtime_error("transport_flow: ODE step rejection after 3 halvings");
        coarse = fine;
        steps *= 2;
      }
    }
    TransportState state;
    state.t = t;
    state.d_t = scaling_scalar(flow.schedule(), t);
    state.base = base_points;
    state.s = y.s;
    state.jacobian = y.jac;
    out.push_back(std::move(state));
    t_prev = t;
  }
  return out;
}

LipschitzReport lipschitz_monitor(const std::vector<TransportState>& states,
                                  const std::vector<double>& probes,
                                  const std::function<double(double)>& lambda_at,
                                  double slack_tol) {
  LipschitzReport rep;
  rep.implied_inverse_bound.reserve(states.size());
  for (const auto& st : states) {
    const double lam = lambda_at(st.t);
    rep.implied_inverse_bound.push_back(std::exp(-0.5 * lam));
    for (size_t i = 0; i < st.s.size(); ++i) {
      for (double f : probes) {
        const double lhs = st.d_t * st.jacobian[i] * f;
        const double slack = lhs * lhs - std::exp(lam) * f * f;
        if (slack < rep.min_slack) {
          rep.min_slack = slack;
          rep.worst_t = st.t;
          rep.worst_phi = st.base[i];
          rep.worst_probe = f;
        }
      }
    }
  }
  rep.passed = rep.min_slack >= -slack_tol;
  return rep;
}

}  // namespace polchinski
