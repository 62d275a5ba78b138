#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "polchinski/models.hpp"
#include "polchinski/quadrature.hpp"
#include "polchinski/schedule.hpp"

namespace polchinski {

enum class Backend { Quadrature, MonteCarlo };

struct RenormOptions {
  Backend backend = Backend::Quadrature;
  // Quadrature order policy: start at base_order, double until two successive
  // orders agree to order_tol; disagreement past max_order is an error.
  int base_order = 80;
  int max_order = 640;
  double order_tol = 1e-8;
  // Monte Carlo backend; common random numbers are used across phi points.
  int samples = 20000;
  std::uint64_t seed = 1;
};

struct ValueWithError {
  double value = 0.0;
  double std_error = 0.0;  // zero for deterministic backends
};

struct FluctuationMoments {
  Eigen::VectorXd mean;        // b_t(phi) = E_{mu_t^phi}[zeta]
  Eigen::MatrixXd covariance;  // cov(mu_t^phi)
  Eigen::VectorXd grad_v;      // C_t^{-1}(phi - b_t(phi))
  Eigen::MatrixXd hess_v;      // C_t^{-1} - C_t^{-1} cov C_t^{-1}
  Eigen::VectorXd mean_std_error;  // Monte Carlo only
};

// Pointwise evaluation of the renormalised potential
//   V_t(phi) = -log E_{C_t}[exp(-V0(phi + zeta))]
// and of the fluctuation-measure moments that encode its derivatives.
// Quadrature backends cover N = 1, 2 (tensorised in the eigenbasis of C_t);
// Monte Carlo covers any N. All evaluations are pure functions of
// (model, schedule, t, phi, seed) and safe to call concurrently.
class RenormEvaluator {
 public:
  RenormEvaluator(ContinuousModel model, CovarianceSchedule schedule);

  const ContinuousModel& model() const { return model_; }
  const CovarianceSchedule& schedule() const { return schedule_; }

  // Local potential of the full field, V0(phi) = w sum_x V(phi_x).
  double v0(const Eigen::VectorXd& phi) const;

  ValueWithError value(double t, const Eigen::VectorXd& phi,
                       const RenormOptions& opts = {}) const;
  FluctuationMoments moments(double t, const Eigen::VectorXd& phi,
                             const RenormOptions& opts = {}) const;

  // Scalar conveniences for single-site models.
  double value1d(double t, double phi, const RenormOptions& opts = {}) const;
  double grad1d(double t, double phi, const RenormOptions& opts = {}) const;
  double hess1d(double t, double phi, const RenormOptions& opts = {}) const;

  // P_{s,t} F(phi); self-normalised quadrature over N(0, C_t - C_s).
  double semigroup_apply(const std::function<double(const Eigen::VectorXd&)>& f, double s,
                         double t, const Eigen::VectorXd& phi,
                         const RenormOptions& opts = {}) const;

 private:
  struct WeightedNodes {
    std::vector<Eigen::VectorXd> points;
    std::vector<double> probability;  // normalised fluctuation weights
    double log_normaliser;            // log E_{C_t}[e^{-V0(phi+zeta)}]
  };
  WeightedNodes fluctuation_nodes(double t, const Eigen::VectorXd& phi, int order) const;
  WeightedNodes monte_carlo_nodes(double t, const Eigen::VectorXd& phi,
                                  const RenormOptions& opts) const;

  ContinuousModel model_;
  CovarianceSchedule schedule_;
};

// Exact fluctuation moments / renormalised potential for an Ising model on
// the ising schedule: the fluctuation measure is the Ising measure at inverse
// temperature t with external field C_t^{-1} phi + h.
double ising_renorm_potential(const IsingModel& model, const CovarianceSchedule& schedule,
                              double t, const Eigen::VectorXd& phi);
FluctuationMoments ising_fluctuation_moments(const IsingModel& model,
                                             const CovarianceSchedule& schedule, double t,
                                             const Eigen::VectorXd& phi);

// Three-way entropy split for 1-D models:
//   Ent_{nu_0}(F) = Ent_{nu_t}(P_{0,t}F) + E_{nu_t}[Ent_{mu_t^phi}(F)].
struct EntropySplit {
  double total;             // Ent_{nu_0}(F)
  double renormalised;      // Ent_{nu_t}(P_{0,t} F)
  double fluctuation_mean;  // E_{nu_t}[Ent_{mu_t^phi}(F)]
};
EntropySplit entropy_decomposition(const RenormEvaluator& flow,
                                   const std::function<double(double)>& f, double t,
                                   int outer_order = 400, const RenormOptions& opts = {});

// Expectation / entropy of g under nu_t (1-D), nu_t ~ exp(-phi^2/(2 tail) - V_t).
double nu_t_expect(const RenormEvaluator& flow, double t,
                   const std::function<double(double)>& g, int outer_order = 400,
                   const RenormOptions& opts = {});

// Observed minimum of Hess V_t over phi (1-D): deterministic grid, samples
// from nu_t, then golden-section descent from the worst point. Not a proof.
struct ObservedMinimum {
  double value;
  double argmin;
  std::string provenance = "observed-minimum";
};
ObservedMinimum hessian_min_over_phi(const RenormEvaluator& flow, double t, double radius = 6.0,
                                     int grid_points = 129, int descent_iters = 80,
                                     const RenormOptions& opts = {});

}  // namespace polchinski
