#pragma once

#include <functional>
#include <vector>

namespace polchinski {

class CovarianceSchedule;

// Explicit finite-difference solver for the 1-D Polchinski equation
//   dV/dt = (eta/2) cdot_t V'' - (1/2) cdot_t (V')^2
// on [-radius, radius], V extended quadratically beyond the boundary using
// the two outermost cells. The gradient term can be discretised centrally
// (second order; the default for the full-viscosity equation) or with the
// Godunov flux for H(p) = p^2/2 (monotone; required when eta is small).
struct Pde1dOptions {
  double radius = 4.0;
  int points = 2049;
  double viscosity = 1.0;
  bool godunov_flux = false;
  double cfl_safety = 0.4;
  // dt also respects the advection restriction dt <= cfl * h / max|V'|.
  double max_gradient_hint = 0.0;  // 0: estimated from the running solution
  std::function<double(double)> c_dot = [](double) { return 1.0; };  // scalar cdot_t
};

struct PdeGrid1d {
  std::vector<double> x;
  std::vector<double> v;
  double time = 0.0;
  double dt_used = 0.0;
  long steps = 0;

  double value_at(double phi) const;  // linear interpolation
};

PdeGrid1d polchinski_pde_solve_1d(const std::function<double(double)>& v0, double t_end,
                                  const Pde1dOptions& options = {});

// Same stepper but marching the reduced mean-field equation
//   dV/dt = s(t) [ eta/2 V'' - 1/2 (V')^2 ],  s(t) = (alpha - t)^{-2}
// used by the Curie-Weiss pipeline (eta = 1/N).
PdeGrid1d reduced_polchinski_solve(const std::function<double(double)>& v0, double t_end,
                                   double alpha, double eta, const Pde1dOptions& options);

}  // namespace polchinski
