#pragma once

#include <Eigen/Dense>
#include <optional>

#include "polchinski/models.hpp"

namespace polchinski {

struct IsingMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;      // cov(sigma_x, sigma_y)
  Eigen::MatrixXd second_moment;   // E[sigma_x sigma_y]
  double log_partition = 0.0;      // log sum_sigma w(sigma), pinned spins conditioned
};

enum class IsingMethod { Auto, Enumeration, TransferMatrix };

// Exact moments. Enumeration up to 20 free spins (OpenMP over configuration
// blocks, deterministic reduction order); 1-D nearest-neighbour chains use
// transfer matrices up to N = 10^4 (covariance matrix capped at N = 4096).
IsingMoments ising_moments(const IsingModel& model,
                           std::optional<Eigen::VectorXd> field_override = std::nullopt,
                           IsingMethod method = IsingMethod::Auto);

namespace ref {
// Serial reference: recomputes every Boltzmann weight from scratch. Kept for
// testing the blocked kernel and as the enumeration oracle.
IsingMoments ising_moments_serial(const IsingModel& model,
                                  std::optional<Eigen::VectorXd> field_override = std::nullopt);
}  // namespace ref

enum class SusceptibilityMode { RowSum, Spectral };

// sup_x sum_y E[sigma_x sigma_y] (rowsum) or the top eigenvalue of the
// correlation matrix (spectral). Requires zero external field.
double susceptibility(const IsingModel& model, SusceptibilityMode mode,
                      IsingMethod method = IsingMethod::Auto);

// Spectral gap of the Glauber generator with the standard-Dirichlet-form
// rates c(s, s^x) = (1 + nu(s^x)/nu(s))/2, from the dense 2^N eigenproblem.
double glauber_spectral_gap(const IsingModel& model);

// Entropy of F >= 0 under the Ising measure and the standard Dirichlet form
// D(F) = 1/2 sum_x E[(F(s^x) - F(s))^2], by enumeration.
double ising_entropy(const IsingModel& model, const Eigen::VectorXd& f_by_state);
double ising_dirichlet_standard(const IsingModel& model, const Eigen::VectorXd& f_by_state);
// Heat-bath form: 1/2 sum_x sum_s Psi(nu(s), nu(s^x)) (F(s^x)-F(s)) (G(s^x)-G(s)).
double ising_dirichlet_heatbath(const IsingModel& model, const Eigen::VectorXd& f_by_state,
                                const Eigen::VectorXd& g_by_state);
Eigen::VectorXd ising_state_probabilities(const IsingModel& model);

}  // namespace polchinski
