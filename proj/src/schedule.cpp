#include "polchinski/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace polchinski {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Unit1d: return "unit-1d";
    case ScheduleKind::Heat: return "heat";
    case ScheduleKind::PauliVillars: return "pauli-villars";
    case ScheduleKind::Ising: return "ising";
  }
  return "?";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "unit-1d") return ScheduleKind::Unit1d;
  if (name == "heat") return ScheduleKind::Heat;
  if (name == "pauli-villars") return ScheduleKind::PauliVillars;
  if (name == "ising") return ScheduleKind::Ising;
  throw std::invalid_argument("unknown schedule kind: " + name);
}

double TimeMap::value(double t) const {
  switch (kind) {
    case Kind::Identity: return t;
    case Kind::Power: return std::pow(t, parameter);
    case Kind::Scale: return parameter * t;
  }
  return t;
}

double TimeMap::d1(double t) const {
  switch (kind) {
    case Kind::Identity: return 1.0;
    case Kind::Power: return parameter * std::pow(t, parameter - 1.0);
    case Kind::Scale: return parameter;
  }
  return 1.0;
}

double TimeMap::d2(double t) const {
  switch (kind) {
    case Kind::Identity: return 0.0;
    case Kind::Power: return parameter * (parameter - 1.0) * std::pow(t, parameter - 2.0);
    case Kind::Scale: return 0.0;
  }
  return 0.0;
}

double TimeMap::inverse(double u) const {
  switch (kind) {
    case Kind::Identity: return u;
    case Kind::Power: return std::pow(u, 1.0 / parameter);
    case Kind::Scale: return u / parameter;
  }
  return u;
}

CovarianceSchedule CovarianceSchedule::unit1d(double horizon, int n) {
  if (horizon <= 0) throw std::invalid_argument("unit1d: horizon must be positive");
  CovarianceSchedule s;
  s.kind_ = ScheduleKind::Unit1d;
  s.coupling_ = CouplingMatrix(Eigen::MatrixXd::Identity(n, n) / horizon, "scalar");
  s.horizon_ = horizon;
  return s;
}

CovarianceSchedule CovarianceSchedule::heat(CouplingMatrix coupling, double truncation_time) {
  CovarianceSchedule s;
  s.kind_ = ScheduleKind::Heat;
  s.coupling_ = std::move(coupling);
  s.horizon_ = truncation_time;
  s.infinite_horizon_ = true;
  return s;
}

CovarianceSchedule CovarianceSchedule::pauli_villars(CouplingMatrix coupling,
                                                     double truncation_time) {
  CovarianceSchedule s;
  s.kind_ = ScheduleKind::PauliVillars;
  s.coupling_ = std::move(coupling);
  s.horizon_ = truncation_time;
  s.infinite_horizon_ = true;
  return s;
}

CovarianceSchedule CovarianceSchedule::ising(CouplingMatrix coupling, double beta, double alpha) {
  if (alpha <= beta) throw std::invalid_argument("ising schedule: requires alpha > beta");
  CovarianceSchedule s;
  s.kind_ = ScheduleKind::Ising;
  s.coupling_ = std::move(coupling);
  s.horizon_ = beta;
  s.alpha_ = alpha;
  return s;
}

double CovarianceSchedule::t_end() const { return map_.inverse(horizon_); }

void CovarianceSchedule::check_time(double t) const {
  if (t < 0) throw std::domain_error("schedule: negative time");
  const double end = t_end();
  if (t > end * (1 + 1e-12) && !infinite_horizon_)
    throw std::domain_error("schedule: time " + std::to_string(t) + " outside domain [0," +
                            std::to_string(end) + "]");
}

double CovarianceSchedule::base_c(double a, double u) const {
  switch (kind_) {
    case ScheduleKind::Unit1d: return u;
    case ScheduleKind::Heat: return a > 1e-14 ? (1.0 - std::exp(-a * u)) / a : u;
    case ScheduleKind::PauliVillars: return u / (1.0 + a * u);
    case ScheduleKind::Ising: return 1.0 / (alpha_ - u * (1.0 - a));
  }
  return 0;
}

double CovarianceSchedule::base_c_dot(double a, double u) const {
  switch (kind_) {
    case ScheduleKind::Unit1d: return 1.0;
    case ScheduleKind::Heat: return std::exp(-a * u);
    case ScheduleKind::PauliVillars: {
      const double d = 1.0 + a * u;
      return 1.0 / (d * d);
    }
    case ScheduleKind::Ising: {
      const double d = alpha_ - u * (1.0 - a);
      return (1.0 - a) / (d * d);
    }
  }
  return 0;
}

double CovarianceSchedule::base_c_ddot(double a, double u) const {
  switch (kind_) {
    case ScheduleKind::Unit1d: return 0.0;
    case ScheduleKind::Heat: return -a * std::exp(-a * u);
    case ScheduleKind::PauliVillars: {
      const double d = 1.0 + a * u;
      return -2.0 * a / (d * d * d);
    }
    case ScheduleKind::Ising: {
      const double d = alpha_ - u * (1.0 - a);
      return 2.0 * (1.0 - a) * (1.0 - a) / (d * d * d);
    }
  }
  return 0;
}

double CovarianceSchedule::scalar_c(double a, double t) const {
  return base_c(a, map_.value(t));
}

double CovarianceSchedule::scalar_c_dot(double a, double t) const {
  return map_.d1(t) * base_c_dot(a, map_.value(t));
}

double CovarianceSchedule::scalar_c_ddot(double a, double t) const {
  const double u = map_.value(t);
  const double d1 = map_.d1(t);
  return map_.d2(t) * base_c_dot(a, u) + d1 * d1 * base_c_ddot(a, u);
}

double CovarianceSchedule::scalar_c_tail(double a, double t) const {
  const double u = map_.value(t);
  switch (kind_) {
    case ScheduleKind::Unit1d: return horizon_ - u;
    case ScheduleKind::Heat:
      if (a <= 1e-14)
        throw std::domain_error("heat schedule: C_inf diverges on the kernel of A");
      return std::exp(-a * u) / a;
    case ScheduleKind::PauliVillars:
      if (a <= 1e-14)
        throw std::domain_error("pauli-villars schedule: C_inf diverges on the kernel of A");
      return 1.0 / (a * (1.0 + a * u));
    case ScheduleKind::Ising: return base_c(a, horizon_) - base_c(a, u);
  }
  return 0;
}

ScheduleEval CovarianceSchedule::eval(double t) const {
  check_time(t);
  ScheduleEval out;
  out.c = coupling_.apply([&](double a) { return scalar_c(a, t); });
  out.c_dot = coupling_.apply([&](double a) { return scalar_c_dot(a, t); });
  out.c_ddot = coupling_.apply([&](double a) { return scalar_c_ddot(a, t); });
  return out;
}

Eigen::MatrixXd CovarianceSchedule::c_matrix(double t) const {
  check_time(t);
  return coupling_.apply([&](double a) { return scalar_c(a, t); });
}

Eigen::MatrixXd CovarianceSchedule::c_tail_matrix(double t) const {
  check_time(t);
  return coupling_.apply([&](double a) { return scalar_c_tail(a, t); });
}

CovarianceSchedule CovarianceSchedule::reparametrize(const TimeMap& map) const {
  if (map_.kind != TimeMap::Kind::Identity)
    throw std::invalid_argument("reparametrize: schedule already carries a time map");
  const double probe_lo = map.d1(0.25), probe_hi = map.d1(1.0);
  if (!(probe_lo > 0) || !(probe_hi > 0))
    throw std::invalid_argument("reparametrize: time map must be strictly increasing");
  CovarianceSchedule s = *this;
  s.map_ = map;
  return s;
}

json CovarianceSchedule::to_json() const {
  json j;
  j["kind"] = to_string(kind_);
  j["coupling"] = coupling_.to_json();
  j["horizon"] = horizon_;
  j["infinite_horizon"] = infinite_horizon_;
  if (kind_ == ScheduleKind::Ising) j["alpha"] = alpha_;
  if (map_.kind != TimeMap::Kind::Identity) {
    j["time_map"] = json{{"kind", map_.kind == TimeMap::Kind::Power ? "power" : "scale"},
                         {"parameter", map_.parameter}};
  }
  return j;
}

CovarianceSchedule CovarianceSchedule::from_json(const json& j) {
  const ScheduleKind kind = schedule_kind_from_string(j.at("kind").get<std::string>());
  CouplingMatrix coupling = CouplingMatrix::from_json(j.at("coupling"));
  const double horizon = j.at("horizon").get<double>();
  CovarianceSchedule s;
  switch (kind) {
    case ScheduleKind::Unit1d: s = unit1d(horizon, coupling.size()); break;
    case ScheduleKind::Heat: s = heat(coupling, horizon); break;
    case ScheduleKind::PauliVillars: s = pauli_villars(coupling, horizon); break;
    case ScheduleKind::Ising: s = ising(coupling, horizon, j.at("alpha").get<double>()); break;
  }
  if (j.contains("time_map")) {
    const auto& m = j.at("time_map");
    const std::string mk = m.at("kind").get<std::string>();
    const double p = m.at("parameter").get<double>();
    s = s.reparametrize(mk == "power" ? TimeMap::power(p) : TimeMap::scale(p));
  }
  return s;
}

}  // namespace polchinski
