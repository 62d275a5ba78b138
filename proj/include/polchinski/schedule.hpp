#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "polchinski/lattice.hpp"

namespace polchinski {

enum class ScheduleKind { Unit1d, Heat, PauliVillars, Ising };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

// Smooth strictly monotone time map with first and second derivatives.
// Named forms keep schedules serialisable.
struct TimeMap {
  enum class Kind { Identity, Power, Scale };
  Kind kind = Kind::Identity;
  double parameter = 1.0;  // exponent for Power, factor for Scale

  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;
  double inverse(double u) const;

  static TimeMap identity() { return {}; }
  static TimeMap power(double exponent) { return {Kind::Power, exponent}; }
  static TimeMap scale(double factor) { return {Kind::Scale, factor}; }
};

struct ScheduleEval {
  Eigen::MatrixXd c;       // C_t
  Eigen::MatrixXd c_dot;   // dC/dt
  Eigen::MatrixXd c_ddot;  // d^2C/dt^2
};

// Covariance decomposition t -> (C_t, dC_t, ddC_t), evaluated in the
// eigenbasis of the coupling matrix. Kinds:
//   unit-1d        c_t = t on [0,T]
//   heat           dC_t = e^{-tA}, C_inf = A^{-1}
//   pauli-villars  C_t = (A + 1/t)^{-1}, dC_t = (tA+id)^{-2}
//   ising          C_t = (tA + (alpha-t) id)^{-1} on [0,beta], alpha > beta
// The ising kind has C_0 = alpha^{-1} id rather than 0; everything downstream
// works with C_t - C_0.
class CovarianceSchedule {
 public:
  static CovarianceSchedule unit1d(double horizon, int n = 1);
  static CovarianceSchedule heat(CouplingMatrix coupling, double truncation_time);
  static CovarianceSchedule pauli_villars(CouplingMatrix coupling, double truncation_time);
  static CovarianceSchedule ising(CouplingMatrix coupling, double beta, double alpha);

  ScheduleKind kind() const { return kind_; }
  const CouplingMatrix& coupling() const { return coupling_; }
  int size() const { return coupling_.size(); }
  double alpha() const { return alpha_; }

  // End of the time domain: T for unit-1d, beta for ising, the truncation
  // time for infinite-horizon kinds.
  double t_end() const;
  bool infinite_horizon() const { return infinite_horizon_; }

  // Scalar kernels per coupling eigenvalue a.
  double scalar_c(double a, double t) const;
  double scalar_c_dot(double a, double t) const;
  double scalar_c_ddot(double a, double t) const;
  // C_inf - C_t per eigenvalue (the covariance of the renormalised measure);
  // for ising kinds this is C_beta - C_t.
  double scalar_c_tail(double a, double t) const;

  ScheduleEval eval(double t) const;
  Eigen::MatrixXd c_matrix(double t) const;
  Eigen::MatrixXd c_tail_matrix(double t) const;

  // New schedule with C^a_t = C_{a(t)}; rejects non-monotone maps.
  CovarianceSchedule reparametrize(const TimeMap& map) const;
  const TimeMap& time_map() const { return map_; }

  json to_json() const;
  static CovarianceSchedule from_json(const json& j);

 private:
  CovarianceSchedule() = default;
  void check_time(double t) const;

  // Kernels in the base clock (before reparametrisation).
  double base_c(double a, double u) const;
  double base_c_dot(double a, double u) const;
  double base_c_ddot(double a, double u) const;

  ScheduleKind kind_ = ScheduleKind::Unit1d;
  CouplingMatrix coupling_;
  double horizon_ = 1.0;  // base-clock domain end
  bool infinite_horizon_ = false;
  double alpha_ = 0.0;
  TimeMap map_;
};

}  // namespace polchinski
