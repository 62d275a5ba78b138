#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "polchinski/renorm.hpp"

namespace polchinski {

// D_t = (id - A C_t)^{-1/2}, evaluated in the eigenbasis of the coupling.
Eigen::MatrixXd scaling_matrix(const CovarianceSchedule& sched, double t);
double scaling_scalar(const CovarianceSchedule& sched, double t);

struct TransportState {
  double t = 0.0;
  double d_t = 1.0;                // scalar D_t
  std::vector<double> base;        // base points phi
  std::vector<double> s;           // S_t(phi)
  std::vector<double> jacobian;    // dS_t/dphi from the variational ODE
};

struct TransportOptions {
  int initial_steps = 64;
  double halving_tol = 1e-6;
  int max_halvings = 3;
  RenormOptions renorm;
};

// Integrates dS/dt = 1/2 D_t cdot_t gradV_t(D_t^{-1} S) together with its
// variational equation, RK4 with global step halving. 1-D models; the
// commuting-matrices assumption holds because schedules are functions of the
// coupling (schedules carrying a different coupling are rejected upstream by
// RenormEvaluator).
std::vector<TransportState> transport_flow(const RenormEvaluator& flow,
                                           const std::vector<double>& base_points,
                                           const std::vector<double>& t_grid,
                                           const TransportOptions& options = {});

struct LipschitzReport {
  bool passed = true;
  double min_slack = std::numeric_limits<double>::infinity();
  double worst_t = 0.0, worst_phi = 0.0, worst_probe = 0.0;
  // e^{-lambda_t/2}: the implied Lipschitz factor of the inverse map at each
  // requested time (no inversion of S_t performed).
  std::vector<double> implied_inverse_bound;
};

// Forward inequality |D_t dS_t(phi) f|^2 >= e^{lambda_t} |f|^2 for probes f;
// lambda_at is the cumulative profile from the criterion.
LipschitzReport lipschitz_monitor(const std::vector<TransportState>& states,
                                  const std::vector<double>& probes,
                                  const std::function<double(double)>& lambda_at,
                                  double slack_tol = 1e-6);

}  // namespace polchinski
