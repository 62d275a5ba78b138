#pragma once

#include <Eigen/Dense>
#include <optional>

#include "polchinski/lattice.hpp"
#include "polchinski/potentials.hpp"

namespace polchinski {

// Continuous-spin Gibbs measure: H(phi) = 1/2 (phi, A phi) + w sum_x V(phi_x)
// with w = eps^d the continuum inner-product weight (w = 1 on unit lattices).
struct ContinuousModel {
  LatticeGeometry geometry;
  CouplingMatrix coupling;
  PotentialSpec potential;
  double weight = 1.0;

  static ContinuousModel single_site(PotentialSpec potential, double gaussian_mass = 1.0);
  static ContinuousModel lattice(const LatticeGeometry& geometry, PotentialSpec potential,
                                 double mass_shift = 0.0);

  int n_sites() const { return coupling.size(); }
  double hamiltonian(const Eigen::VectorXd& phi) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& phi) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& phi) const;  // A + w diag V''

  json to_json() const;
  static ContinuousModel from_json(const json& j);
  std::uint64_t hash() const;
};

struct EnergyGradHess {
  double energy;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

EnergyGradHess energy_grad_hess(const ContinuousModel& model, const Eigen::VectorXd& phi);

// phi^4 counterterm: -3g G(0,0) + 6 g^2 ||G(0,.)||_{L^3}^3 with
// G = (-Delta^eps + m^2)^{-1} and the weighted norm eps^d sum |f|^3.
double counterterm(double g, double mass_squared, const LatticeGeometry& geometry,
                   const CouplingMatrix& laplacian);

// Ising measure with weights exp(-beta/2 (sigma, A sigma) + (h, sigma)).
// Coupling spectrum is expected in [0,1] (use normalise_spectrum); +/-inf
// field entries pin spins.
struct IsingModel {
  CouplingMatrix coupling;
  double beta = 0.0;
  Eigen::VectorXd field;  // entries in [-inf, inf]
  double alpha = 0.0;     // schedule parameter, defaults to beta + 1e-3

  static IsingModel make(CouplingMatrix coupling, double beta,
                         std::optional<Eigen::VectorXd> field = std::nullopt,
                         std::optional<double> alpha = std::nullopt);

  int n_sites() const { return coupling.size(); }
  bool ferromagnetic() const;

  json to_json() const;
  static IsingModel from_json(const json& j);
  std::uint64_t hash() const;
};

std::uint64_t fnv1a_hash(const std::string& bytes);

}  // namespace polchinski
