#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "polchinski/renorm.hpp"
#include "polchinski/rng.hpp"

namespace polchinski {

// Bilinear table of V_t and grad V_t over [0, t_end] x [-radius, radius] for
// 1-D models. One quadrature per node at build time; lookups afterwards make
// large SDE ensembles affordable. Outside the phi range the gradient is
// extended linearly (the convolved potential is asymptotically quadratic).
class DriftTable1d {
 public:
  DriftTable1d(const RenormEvaluator& flow, double t_end, int t_points = 257,
               int phi_points = 513, double radius = 6.0);

  double grad(double t, double phi) const;
  double value(double t, double phi) const;
  double t_end() const { return t_end_; }

 private:
  double lookup(const std::vector<double>& table, double t, double phi) const;
  int t_points_, phi_points_;
  double t_end_, radius_, dt_, dphi_;
  std::vector<double> grad_, value_;  // row-major (t, phi)
};

using Drift1d = std::function<double(double t, double phi)>;

// One backward trajectory with full per-step bookkeeping (1-D).
struct FlowTrajectory {
  std::vector<double> times;   // decreasing, times[0] = t_start
  std::vector<double> states;  // same length as times
  std::vector<double> drifts;  // per step: cdot_t grad V_t(phi_t) * dt
  std::vector<double> noises;  // per step: sqrt(cdot_t dt) xi
  double cost = 0.0;           // 1/2 sum (grad V)^2 cdot dt
  std::uint64_t seed = 0;

  // Bookkeeping identity: initial state plus summed increments.
  double reconstruct_endpoint() const;
};

std::vector<double> backward_time_grid(const CovarianceSchedule& sched, double t_start,
                                       int steps);

FlowTrajectory backward_sde_sample(const CovarianceSchedule& sched, const Drift1d& grad_v,
                                   double t_start, double phi_start, int steps,
                                   std::uint64_t seed);

// Ensemble run keeping endpoints, costs, and the Gaussian coupling partner
// Gamma_0 = int sqrt(cdot) dB. Parallel over trajectories with
// counter-based streams; results independent of thread count.
struct SdeEnsemble {
  std::vector<double> phi0;
  std::vector<double> gamma0;
  std::vector<double> costs;
};

SdeEnsemble localization_sample(const CovarianceSchedule& sched, const Drift1d& grad_v,
                                int count, int steps, std::uint64_t seed,
                                double t_start = -1.0 /* default: schedule end */,
                                double phi_start = 0.0, bool sample_start_gaussian = true);

struct CostReport {
  double cost = 0.0;
  double std_error = 0.0;
  double reference_entropy = 0.0;  // H(nu_0 | gamma_0) by quadrature
};

// Föllmer cost of optimally-driven trajectories vs the independently
// computed relative entropy of nu_0 against the Gaussian reference.
CostReport follmer_cost(const SdeEnsemble& ensemble, const RenormEvaluator& flow);

double gaussian_reference_entropy(const RenormEvaluator& flow);

// Boue-Dupuis upper bound E[V0(phi_0^U) + 1/2 int |U|^2_{cdot}] for a
// state-feedback drift U; equals V_t(phi) at the optimal drift U = grad V.
ValueWithError boue_dupuis_eval(const RenormEvaluator& flow, const Drift1d& drift_u, double t,
                                double phi, int count, int steps, std::uint64_t seed);

struct MartingaleReport {
  std::vector<double> slice_times;
  std::vector<double> grad_mean, grad_se;   // ensemble mean of grad V_s(phi_s)
  std::vector<double> value_mean, value_se; // V_s(phi_s) + 1/2 int_s^t |grad V|^2 cdot
  double grad_slope = 0.0, grad_slope_se = 0.0;
  double value_slope = 0.0, value_slope_se = 0.0;
};

MartingaleReport martingale_diagnostics(const CovarianceSchedule& sched, const Drift1d& grad_v,
                                        const std::function<double(double, double)>& value_v,
                                        double t_start, double phi_start, int count, int steps,
                                        std::uint64_t seed, int slices = 24);

struct LocalizationPath {
  std::vector<double> times;        // excludes points where C_t is singular
  std::vector<double> h;            // C_t^{-1} phi_t
  std::vector<double> tilted_mean;  // b(mu_t) = phi_t - C_t grad V_t(phi_t)
  std::vector<double> sigma_dot;    // C^{-1} cdot C^{-1}
  double residual_l2 = 0.0;         // discrete localisation-SDE residual
};

LocalizationPath localization_view(const FlowTrajectory& trajectory,
                                   const CovarianceSchedule& sched, const Drift1d& grad_v);

}  // namespace polchinski
