#include "polchinski/sde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace polchinski {

DriftTable1d::DriftTable1d(const RenormEvaluator& flow, double t_end, int t_points,
                           int phi_points, double radius)
    : t_points_(t_points), phi_points_(phi_points), t_end_(t_end), radius_(radius) {
  if (t_points < 2 || phi_points < 2) throw std::invalid_argument("DriftTable1d: bad grid");
  dt_ = t_end / (t_points - 1);
  dphi_ = 2.0 * radius / (phi_points - 1);
  grad_.resize(static_cast<size_t>(t_points) * phi_points);
  value_.resize(grad_.size());

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int j = 0; j < t_points; ++j) {
    const double t = j * dt_;
    for (int i = 0; i < phi_points; ++i) {
      const double phi = -radius + i * dphi_;
      const size_t idx = static_cast<size_t>(j) * phi_points + i;
      grad_[idx] = flow.grad1d(t, phi);
      value_[idx] = flow.value1d(t, phi);
    }
  }
}

double DriftTable1d::lookup(const std::vector<double>& table, double t, double phi) const {
  const double tt = std::clamp(t, 0.0, t_end_);
  int j = std::min(t_points_ - 2, static_cast<int>(tt / dt_));
  j = std::max(j, 0);
  const double wt = (tt - j * dt_) / dt_;
  const auto v = [&](int jj, int ii) {
    return table[static_cast<size_t>(jj) * phi_points_ + ii];
  };
  const auto row = [&](int ii) { return (1 - wt) * v(j, ii) + wt * v(j + 1, ii); };

  // Linear extension in phi beyond the table edges.
  const double pp = std::clamp(phi, -radius_, radius_);
  double extend = 0.0;
  if (phi > radius_) {
    extend = (row(phi_points_ - 1) - row(phi_points_ - 2)) / dphi_ * (phi - radius_);
  } else if (phi < -radius_) {
    extend = (row(1) - row(0)) / dphi_ * (phi + radius_);
  }
  int i = std::min(phi_points_ - 2, static_cast<int>((pp + radius_) / dphi_));
  i = std::max(i, 0);
  const double wp = (pp - (-radius_ + i * dphi_)) / dphi_;
  return (1 - wp) * row(i) + wp * row(i + 1) + extend;
}

double DriftTable1d::grad(double t, double phi) const { return lookup(grad_, t, phi); }
double DriftTable1d::value(double t, double phi) const { return lookup(value_, t, phi); }

double FlowTrajectory::reconstruct_endpoint() const {
  double phi = states.front();
  for (size_t k = 0; k < drifts.size(); ++k) phi += -drifts[k] + noises[k];
  return phi;
}

std::vector<double> backward_time_grid(const CovarianceSchedule& sched, double t_start,
                                       int steps) {
  if (steps < 1) throw std::invalid_argument("backward_time_grid: steps >= 1");
  std::vector<double> grid(steps + 1);
  const bool cluster =
      sched.kind() == ScheduleKind::PauliVillars || sched.kind() == ScheduleKind::Ising;
  for (int k = 0; k <= steps; ++k) {
    const double u = static_cast<double>(steps - k) / steps;  // 1 -> 0
    grid[k] = cluster ? t_start * u * u : t_start * u;
  }
  return grid;
}

FlowTrajectory backward_sde_sample(const CovarianceSchedule& sched, const Drift1d& grad_v,
                                   double t_start, double phi_start, int steps,
                                   std::uint64_t seed) {
  if (steps < 100) throw std::invalid_argument("backward_sde_sample: needs >= 100 steps");
  const double a = sched.coupling().eigenvalues()[0];
  FlowTrajectory traj;
  traj.seed = seed;
  traj.times = backward_time_grid(sched, t_start, steps);
  traj.states.resize(steps + 1);
  traj.drifts.resize(steps);
  traj.noises.resize(steps);
  traj.states[0] = phi_start;

  Rng rng = Rng::stream(seed, 0);
  double phi = phi_start;
  for (int k = 0; k < steps; ++k) {
    const double t = traj.times[k];
    const double dt = traj.times[k] - traj.times[k + 1];
    const double cdot = sched.scalar_c_dot(a, t);
    const double g = grad_v(t, phi);
    if (!std::isfinite(g)) throw std::runtime_error("backward_sde_sample: drift evaluation failed");
    const double drift = cdot * g * dt;
    const double noise = std::sqrt(cdot * dt) * rng.normal();
    traj.cost += 0.5 * g * g * cdot * dt;
    phi += -drift + noise;
    if (!std::isfinite(phi)) throw std::runtime_error("backward_sde_sample: NaN state");
    traj.drifts[k] = drift;
    traj.noises[k] = noise;
    traj.states[k + 1] = phi;
  }
  return traj;
}

SdeEnsemble localization_sample(const CovarianceSchedule& sched, const Drift1d& grad_v,
                                int count, int steps, std::uint64_t seed, double t_start,
                                double phi_start, bool sample_start_gaussian) {
  if (t_start < 0) t_start = sched.t_end();
  const double a = sched.coupling().eigenvalues()[0];
  const std::vector<double> grid = backward_time_grid(sched, t_start, steps);
  std::vector<double> cdots(steps), dts(steps);
  for (int k = 0; k < steps; ++k) {
    dts[k] = grid[k] - grid[k + 1];
    cdots[k] = sched.scalar_c_dot(a, grid[k]);
  }
  double start_sd = 0.0;
  if (sample_start_gaussian && sched.infinite_horizon())
    start_sd = std::sqrt(std::max(0.0, sched.scalar_c_tail(a, t_start)));

  SdeEnsemble out;
  out.phi0.resize(count);
  out.gamma0.resize(count);
  out.costs.resize(count);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
    double phi = phi_start + start_sd * rng.normal();
    double gamma = 0.0, cost = 0.0;
    for (int k = 0; k < steps; ++k) {
      const double g = grad_v(grid[k], phi);
      const double noise = std::sqrt(cdots[k] * dts[k]) * rng.normal();
      cost += 0.5 * g * g * cdots[k] * dts[k];
      phi += -cdots[k] * g * dts[k] + noise;
      gamma += noise;
    }
    out.phi0[i] = phi;
    out.gamma0[i] = gamma;
    out.costs[i] = cost;
  }
  return out;
}

double gaussian_reference_entropy(const RenormEvaluator& flow) {
  // H(nu_0 | gamma_0) = V_end(0) - E_{nu_0}[V0].
  const double v_end = flow.value1d(flow.schedule().t_end(), 0.0);
  const double mean_v0 = nu_t_expect(flow, 0.0, [&](double phi) {
    Eigen::VectorXd p(1);
    p[0] = phi;
    return flow.v0(p);
  });
  return v_end - mean_v0;
}

CostReport follmer_cost(const SdeEnsemble& ensemble, const RenormEvaluator& flow) {
  const size_t n = ensemble.costs.size();
  if (n < 2) throw std::invalid_argument("follmer_cost: empty ensemble");
  double mean = 0.0;
  for (double c : ensemble.costs) mean += c;
  mean /= n;
  double var = 0.0;
  for (double c : ensemble.costs) var += (c - mean) * (c - mean);
  var /= (n - 1);
  CostReport rep;
  rep.cost = mean;
  rep.std_error = std::sqrt(var / n);
  rep.reference_entropy = gaussian_reference_entropy(flow);
  return rep;
}

ValueWithError boue_dupuis_eval(const RenormEvaluator& flow, const Drift1d& drift_u, double t,
                                double phi, int count, int steps, std::uint64_t seed) {
  const auto& sched = flow.schedule();
  const double a = sched.coupling().eigenvalues()[0];
  const std::vector<double> grid = backward_time_grid(sched, t, steps);

  std::vector<double> totals(count);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
    double x = phi, cost = 0.0;
    for (int k = 0; k < steps; ++k) {
      const double dt = grid[k] - grid[k + 1];
      const double cdot = sched.scalar_c_dot(a, grid[k]);
      const double u = drift_u(grid[k], x);
      if (!std::isfinite(u)) throw std::runtime_error("boue_dupuis_eval: drift explosion");
      cost += 0.5 * u * u * cdot * dt;
      x += -cdot * u * dt + std::sqrt(cdot * dt) * rng.normal();
    }
    Eigen::VectorXd xv(1);
    xv[0] = x;
    totals[i] = flow.v0(xv) + cost;
  }
  double mean = 0.0;
  for (double v : totals) mean += v;
  mean /= count;
  double var = 0.0;
  for (double v : totals) var += (v - mean) * (v - mean);
  var /= (count - 1);
  return {mean, std::sqrt(var / count)};
}

namespace {
struct SlopeFit {
  double slope, std_error;
};

SlopeFit ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double xm = 0, ym = 0;
  for (size_t i = 0; i < n; ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= n;
  ym /= n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  return {sxy / sxx, 0.0};
}
}  // namespace

MartingaleReport martingale_diagnostics(const CovarianceSchedule& sched, const Drift1d& grad_v,
                                        const std::function<double(double, double)>& value_v,
                                        double t_start, double phi_start, int count, int steps,
                                        std::uint64_t seed, int slices) {
  const double a = sched.coupling().eigenvalues()[0];
  const std::vector<double> grid = backward_time_grid(sched, t_start, steps);
  std::vector<int> slice_idx(slices);
  for (int s = 0; s < slices; ++s) slice_idx[s] = (s * steps) / slices;

  MartingaleReport rep;
  rep.slice_times.resize(slices);
  for (int s = 0; s < slices; ++s) rep.slice_times[s] = grid[slice_idx[s]];

  std::vector<double> g_sum(slices, 0.0), g_sq(slices, 0.0);
  std::vector<double> v_sum(slices, 0.0), v_sq(slices, 0.0);
  std::vector<double> gslope(count), vslope(count);

#ifdef _OPENMP
#pragma omp parallel
#endif
  {
    std::vector<double> g_loc(slices, 0.0), gq_loc(slices, 0.0);
    std::vector<double> v_loc(slices, 0.0), vq_loc(slices, 0.0);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
    for (int i = 0; i < count; ++i) {
      Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
      double phi = phi_start, run_cost = 0.0;
      std::vector<double> gv(slices), vv(slices);
      int next_slice = 0;
      for (int k = 0; k <= steps; ++k) {
        const double t = grid[k];
        if (next_slice < slices && k == slice_idx[next_slice]) {
          const double g = grad_v(t, phi);
          gv[next_slice] = g;
          vv[next_slice] = value_v(t, phi) + run_cost;
          ++next_slice;
        }
        if (k == steps) break;
        const double dt = grid[k] - grid[k + 1];
        const double cdot = sched.scalar_c_dot(a, t);
        const double g = grad_v(t, phi);
        run_cost += 0.5 * g * g * cdot * dt;
        phi += -cdot * g * dt + std::sqrt(cdot * dt) * rng.normal();
      }
      for (int s = 0; s < slices; ++s) {
        g_loc[s] += gv[s];
        gq_loc[s] += gv[s] * gv[s];
        v_loc[s] += vv[s];
        vq_loc[s] += vv[s] * vv[s];
      }
      gslope[i] = ols_slope(rep.slice_times, gv).slope;
      vslope[i] = ols_slope(rep.slice_times, vv).slope;
    }
#ifdef _OPENMP
#pragma omp critical
#endif
    for (int s = 0; s < slices; ++s) {
      g_sum[s] += g_loc[s];
      g_sq[s] += gq_loc[s];
      v_sum[s] += v_loc[s];
      v_sq[s] += vq_loc[s];
    }
  }

  rep.grad_mean.resize(slices);
  rep.grad_se.resize(slices);
  rep.value_mean.resize(slices);
  rep.value_se.resize(slices);
  for (int s = 0; s < slices; ++s) {
    rep.grad_mean[s] = g_sum[s] / count;
    rep.value_mean[s] = v_sum[s] / count;
    rep.grad_se[s] =
        std::sqrt(std::max(0.0, g_sq[s] / count - rep.grad_mean[s] * rep.grad_mean[s]) / count);
    rep.value_se[s] =
        std::sqrt(std::max(0.0, v_sq[s] / count - rep.value_mean[s] * rep.value_mean[s]) / count);
  }

  // Per-trajectory slopes are i.i.d.; their mean tests constancy in s.
  const auto mean_se = [&](const std::vector<double>& v, double& m, double& se) {
    m = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    se = std::sqrt(var / (v.size() - 1) / v.size());
  };
  mean_se(gslope, rep.grad_slope, rep.grad_slope_se);
  mean_se(vslope, rep.value_slope, rep.value_slope_se);
  return rep;
}

LocalizationPath localization_view(const FlowTrajectory& trajectory,
                                   const CovarianceSchedule& sched, const Drift1d& grad_v) {
  const double a = sched.coupling().eigenvalues()[0];
  LocalizationPath path;
  const size_t n = trajectory.times.size();
  // The external-field path h = C^{-1} phi diverges as C_t -> 0 (the
  // conditioning sharpens to a point), so the view is reported on the
  // regular part of the path only.
  const double c_floor =
      std::max(1e-12, 0.05 * sched.scalar_c(a, trajectory.times.front()));
  std::vector<int> keep;
  for (size_t k = 0; k < n; ++k) {
    if (sched.scalar_c(a, trajectory.times[k]) >= c_floor) keep.push_back(static_cast<int>(k));
  }
  path.times.reserve(keep.size());
  for (int k : keep) {
    const double t = trajectory.times[k];
    const double c = sched.scalar_c(a, t);
    const double cdot = sched.scalar_c_dot(a, t);
    const double phi = trajectory.states[k];
    path.times.push_back(t);
    path.h.push_back(phi / c);
    path.tilted_mean.push_back(phi - c * grad_v(t, phi));
    path.sigma_dot.push_back(cdot / (c * c));
  }

  // Discrete residual of the localisation SDE: going down one step,
  // h_{k+1} - h_k = sigma_dot b dt + C^{-1} noise + r.
  double sq = 0.0;
  for (size_t j = 0; j + 1 < keep.size(); ++j) {
    if (keep[j + 1] != keep[j] + 1) continue;
    const int k = keep[j];
    const double t = trajectory.times[k];
    const double dt = trajectory.times[k] - trajectory.times[k + 1];
    const double c = sched.scalar_c(a, t);
    const double r = (path.h[j + 1] - path.h[j]) - path.sigma_dot[j] * path.tilted_mean[j] * dt -
                     trajectory.noises[k] / c;
    sq += r * r;
  }
  path.residual_l2 = std::sqrt(sq);
  return path;
}

}  // namespace polchinski
