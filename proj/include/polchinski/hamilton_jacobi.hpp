#pragma once

#include <functional>
#include <vector>

#include "polchinski/pde1d.hpp"

namespace polchinski {

// Hopf-Lax: V_t(phi) = min_zeta [ V0(zeta) + (phi - zeta)^2 / (2t) ].
// Grid scan plus golden-section refinement; minimisers within value_tol of
// the optimum but separated by at least separation_tol are reported as a
// shock.
struct HopfLaxOptions {
  double radius = 12.0;
  int scan_points = 4001;
  double value_tol = 1e-9;
  double separation_tol = 1e-4;
};

struct HopfLaxResult {
  double value = 0.0;
  std::vector<double> minimisers;
  bool shock = false;
};

HopfLaxResult hopf_lax(const std::function<double(double)>& v0, double t, double phi,
                       const HopfLaxOptions& options = {});

// Characteristic through (t, phi_end): d phi_s / ds = dV_s(phi_s), integrated
// down to s = 0; dV is constant along the path. Terminates with a diagnostic
// when a shock is crossed.
struct CharacteristicPath {
  std::vector<double> times;   // decreasing from t to 0
  std::vector<double> states;
  std::vector<double> grad;    // dV_s(phi_s), conserved
  bool shock_crossed = false;
  double conservation_residual = 0.0;  // max |grad - grad(0)|
};

CharacteristicPath characteristics(const std::function<double(double)>& v0, double t,
                                   double phi_end, int steps = 400,
                                   const HopfLaxOptions& options = {});

// V0(phi - int_0^t U) + 1/2 int_0^t U^2 along the controlled backward path
// phi_s = phi - int_s^t U_u(phi_u) du; any drift upper-bounds Hopf-Lax.
double classical_variational(const std::function<double(double)>& v0, double t, double phi,
                             const std::function<double(double, double)>& drift, int steps = 400);

// --- Curie-Weiss -----------------------------------------------------------

// F_N(beta, h) = -(1/N) log E_uniform[ exp(N (beta m^2 / 2 + h m)) ] by the
// exact magnetisation-sector sum (log-sum-exp over N+1 binomial sectors);
// F(0, h) = -log cosh(h) exactly. The infinite-N value is
// min_phi [ beta phi^2 / 2 - log cosh(beta phi + h) ].
double curie_weiss_free_energy(long n_spins, double beta, double h);
double curie_weiss_free_energy_limit(double beta, double h, double* minimiser = nullptr);

// Central-difference residual of the exact lattice identity
// dF/dbeta = (1/2N) d2F/dh2 - (1/2)(dF/dh)^2.
double curie_weiss_hj_residual(long n_spins, double beta, double h, double dh = 1e-3,
                               double dbeta = 1e-3);

// Reduced mean-field flow: solves
//   dV~/dt = (alpha-t)^{-2} [ (1/2N) V~'' - (1/2)(V~')^2 ],
//   V~_0(phi) = alpha/2 phi^2 - log cosh(alpha phi),
// with the additive constant pinned by matching V~_t(0) to -F_N(t, 0)...
// more precisely to the direct evaluation F_N(t, 0) (offset recorded).
struct CwReducedResult {
  PdeGrid1d grid;
  double offset_applied = 0.0;  // added so V~_t(0) matches direct evaluation
  // F_N(t, h) reconstructed as V~_t(h/(alpha-t)) - h^2/(2(alpha-t)).
  double free_energy_at(double h, double alpha, double t) const;
};

CwReducedResult cw_reduced_polchinski(long n_spins /* <=0 for the HJ limit */, double alpha,
                                      double t_end, double phi_radius, int grid_points);

// Effective Hopf-Lax clock of the reduced flow: tau(t) = t / (alpha (alpha-t)).
double cw_clock(double alpha, double t);

}  // namespace polchinski
