#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "polchinski/ising_exact.hpp"
#include "polchinski/renorm.hpp"
#include "polchinski/sampling.hpp"

namespace polchinski {

// Analytic bound on int_{t_max}^inf e^{-2 lambda_t} dt given a lower-bound
// shape for lambda_t beyond the truncation time.
struct TailCertificate {
  enum class Kind {
    ExponentialRate,  // lambda_t >= lambda(t_max) + rate (t - t_max)
    PowerLog,         // lambda_t >= lambda(t_max) + rate log((1+t)/(1+t_max))
  };
  Kind kind = Kind::ExponentialRate;
  double t_max = 0.0;
  double lambda_at_tmax = 0.0;
  double rate = 0.0;

  double tail_integral() const;
  std::string describe() const;
};

// Sampled lambda-dot profile; lambda_t is its piecewise-linear cumulative
// integral anchored at lambda_0 = 0 (the grid must start at t = 0).
struct LambdaProfile {
  std::vector<double> t;
  std::vector<double> lambda_dot;
  std::vector<std::string> provenance;  // exact-ising | observed-minimum | analytic-formula
  std::optional<TailCertificate> tail;

  std::vector<double> cumulative() const;
  void validate() const;
};

struct LsiReport {
  double inverse_gamma = 0.0;  // bound on 1/gamma
  bool divergent = false;
  double partial_integral = 0.0;  // reported when divergent
  std::string method;
  std::string tail_handling = "finite-horizon";
  std::uint64_t inputs_hash = 0;
  bool rigorous_profile = true;  // false when built from observed extrema

  std::vector<double> per_scale_t;              // gamma_s curve
  std::vector<double> per_scale_inverse_gamma;  // int_s^inf e^{-2(lambda-lambda_s)}

  // entropic-stability extras
  std::vector<double> alpha_t;
  std::vector<double> alpha_grid;
  double annealing_scale = 0.0;
  double annealing_bakry_emery = 0.0;
  double contraction_exponent = 0.0;

  json to_json() const;
};

// --- entropy / Fisher functionals (1-D quadrature) -------------------------

struct EntFisher {
  double entropy = 0.0;
  double fisher = 0.0;  // E[(F')^2 / F] = 4 E[(sqrt(F)')^2]
};

// Unnormalised 1-D log-density on [lo, hi]; F > 0 with derivative f_prime.
EntFisher entropy_and_fisher(const std::function<double(double)>& log_density,
                             const std::function<double(double)>& f,
                             const std::function<double(double)>& f_prime, double lo, double hi);

double total_variation_to_reference(const std::function<double(double)>& log_density,
                                    const std::function<double(double)>& f, double lo,
                                    double hi);

// --- multiscale Bakry-Emery ------------------------------------------------

// 1/gamma = int_0^T e^{-2 lambda_t} dt (+ certified tail), segments integrated
// in closed form for the piecewise-linear lambda; also the per-scale curve
// 1/gamma_s = int_s^inf e^{-2(lambda_u - lambda_s)} du.
LsiReport multiscale_be_bound(const LambdaProfile& profile);

// Scalar criterion value at one time: lambda_dot = cdot H_min - cddot/(2 cdot).
double scalar_lambda_dot(const CovarianceSchedule& sched, double t, double hess_min);

// Reparametrisation-robust form of the same bound for scalar schedules:
//   int_0^T exp(-2 int_0^t cdot H_min) cdot dt
// evaluated with nested adaptive quadrature; invariant under time maps.
double multiscale_bound_scalar(const CovarianceSchedule& sched,
                               const std::function<double(double)>& hess_min_at,
                               double tol = 1e-11);

// Profile builders.
LambdaProfile profile_from_hessian_min(const RenormEvaluator& flow,
                                       const std::vector<double>& t_grid,
                                       std::optional<TailCertificate> tail = std::nullopt,
                                       const RenormOptions& opts = {});
LambdaProfile ising_multiscale_profile(const IsingModel& model,
                                       const std::vector<double>& t_grid);

// Geometric grid with a fixed number of points per decade, plus t = 0.
std::vector<double> geometric_time_grid(double t_min, double t_max, int per_decade = 200);

// --- entropic stability ----------------------------------------------------

// alpha_t with Sigma-dot cov(mu_t^phi) Sigma-dot <= alpha_t Sigma-dot;
// exact at zero field for ferromagnetic Ising (DSS), observed-maximum
// otherwise. Includes the small-s annealing via uniform log-concavity.
LsiReport entropic_stability_bound(const IsingModel& model, const CovarianceSchedule& sched,
                                   const std::vector<double>& t_grid);
LsiReport entropic_stability_bound(const RenormEvaluator& flow,
                                   const std::vector<double>& t_grid,
                                   const RenormOptions& opts = {});
std::vector<double> ising_alpha_profile(const IsingModel& model,
                                        const std::vector<double>& t_grid);

// --- model-specific profiles ----------------------------------------------

struct Phi4LambdaDot {
  double lambda_dot = 0.0;          // 1/t - chi(g, r + 1/t)/t^2
  double chi_value = 0.0;
  double bl_lambda_floor = 0.0;     // lambda_{t} >= log(1 + r t), valid while r + 1/t > 0
  double griffiths_floor = 0.0;     // lambda_t - lambda_{t0} >= log(t/t0) - chi(g,r)/t0
};

Phi4LambdaDot phi4_lambda_dot(double g, double r, double t,
                              const std::function<double(double)>& chi_at_mass,
                              double t0 = 1.0);

// Free-field susceptibility curve chi(mass) = 1/mass for A with constant
// kernel (row sums zero); the g = 0 exact reference.
std::function<double(double)> free_field_chi();

// int_0^inf e^{-2 lambda} dt for the composed mean-field profile with
// chi = D/(delta + 1/t); scales like delta^{1-2D}.
double meanfield_scaling_integral(double d_constant, double delta, double t0 = 1.0);

// --- Ising bounds ----------------------------------------------------------

// 1/gamma <= 1/2 + int_0^beta exp(2 int_0^t chi_s ds) dt with exact chi_s at
// zero field; requires a ferromagnetic coupling.
LsiReport ising_lsi_bound(const IsingModel& model, int grid_points = 512);

// High-temperature constant: Ent <= (1 + 2 beta/(1-beta)) D(sqrt F).
LsiReport ising_high_temperature_bound(const IsingModel& model);

// Heat-bath modified-LSI constant: 1/gamma_HB <= 2 + 4 int_0^beta e^{-2 lambda}.
LsiReport heatbath_mlsi_bound(const IsingModel& model, int grid_points = 512);

}  // namespace polchinski
