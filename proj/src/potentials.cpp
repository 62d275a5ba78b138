#include "polchinski/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace polchinski {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

PotentialSpec PotentialSpec::zero() { return quadratic(0.0); }

PotentialSpec PotentialSpec::quadratic(double mass) {
  PotentialSpec p;
  p.kind_ = "quadratic";
  p.p1_ = mass;
  return p;
}

PotentialSpec PotentialSpec::phi4(double g, double r, double counterterm) {
  if (g < 0) throw std::invalid_argument("phi4: g must be nonnegative");
  PotentialSpec p;
  p.kind_ = "phi4";
  p.p1_ = g;
  p.p2_ = r;
  p.p3_ = counterterm;
  return p;
}

PotentialSpec PotentialSpec::sine_gordon(double z, double beta, double mesh) {
  if (beta <= 0 || mesh <= 0) throw std::invalid_argument("sine_gordon: beta, mesh > 0");
  PotentialSpec p;
  p.kind_ = "sine-gordon";
  p.p1_ = 2.0 * z * std::pow(mesh, -beta / (4.0 * kPi));
  p.p2_ = std::sqrt(beta);
  p.p3_ = beta;  // kept for serialisation
  return p;
}

PotentialSpec PotentialSpec::double_well(double scale) {
  PotentialSpec p;
  p.kind_ = "double-well";
  p.p1_ = scale;
  return p;
}

PotentialSpec PotentialSpec::tabulated(std::vector<double> grid, std::vector<double> values) {
  if (grid.size() != values.size() || grid.size() < 4)
    throw std::invalid_argument("tabulated: need matching grids with >= 4 points");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw std::invalid_argument("tabulated: grid must be increasing");
  PotentialSpec p;
  p.kind_ = "tabulated";
  p.grid_ = std::move(grid);
  p.values_ = std::move(values);
  p.build_spline();
  return p;
}

// Natural cubic spline second-derivative table (tridiagonal solve).
void PotentialSpec::build_spline() {
  const size_t n = grid_.size();
  second_.assign(n, 0.0);
  std::vector<double> u(n, 0.0);
  for (size_t i = 1; i + 1 < n; ++i) {
    const double sig = (grid_[i] - grid_[i - 1]) / (grid_[i + 1] - grid_[i - 1]);
    const double pval = sig * second_[i - 1] + 2.0;
    second_[i] = (sig - 1.0) / pval;
    u[i] = (values_[i + 1] - values_[i]) / (grid_[i + 1] - grid_[i]) -
           (values_[i] - values_[i - 1]) / (grid_[i] - grid_[i - 1]);
    u[i] = (6.0 * u[i] / (grid_[i + 1] - grid_[i - 1]) - sig * u[i - 1]) / pval;
  }
  for (size_t k = n - 1; k-- > 1;) second_[k] = second_[k] * second_[k + 1] + u[k];
  second_[0] = second_[n - 1] = 0.0;
}

double PotentialSpec::spline_eval(double phi, int derivative) const {
  if (phi < grid_.front() || phi > grid_.back())
    throw std::domain_error("tabulated potential evaluated outside its grid");
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), phi);
  size_t hi = std::min<size_t>(grid_.size() - 1, std::distance(grid_.begin(), it));
  if (hi == 0) hi = 1;
  const size_t lo = hi - 1;
  const double h = grid_[hi] - grid_[lo];
  const double a = (grid_[hi] - phi) / h;
  const double b = (phi - grid_[lo]) / h;
  switch (derivative) {
    case 0:
      return a * values_[lo] + b * values_[hi] +
             ((a * a * a - a) * second_[lo] + (b * b * b - b) * second_[hi]) * h * h / 6.0;
    case 1:
      return (values_[hi] - values_[lo]) / h +
             ((3 * b * b - 1) * second_[hi] - (3 * a * a - 1) * second_[lo]) * h / 6.0;
    default: return a * second_[lo] + b * second_[hi];
  }
}

double PotentialSpec::value(double phi) const {
  if (kind_ == "quadratic") return 0.5 * p1_ * phi * phi;
  if (kind_ == "phi4") return 0.25 * p1_ * phi * phi * phi * phi + 0.5 * (p2_ + p3_) * phi * phi;
  if (kind_ == "sine-gordon") return p1_ * std::cos(p2_ * phi);
  if (kind_ == "double-well") {
    const double d = phi * phi - 1.0;
    return p1_ * d * d;
  }
  return spline_eval(phi, 0);
}

double PotentialSpec::d1(double phi) const {
  if (kind_ == "quadratic") return p1_ * phi;
  if (kind_ == "phi4") return p1_ * phi * phi * phi + (p2_ + p3_) * phi;
  if (kind_ == "sine-gordon") return -p1_ * p2_ * std::sin(p2_ * phi);
  if (kind_ == "double-well") return 4.0 * p1_ * phi * (phi * phi - 1.0);
  return spline_eval(phi, 1);
}

double PotentialSpec::d2(double phi) const {
  if (kind_ == "quadratic") return p1_;
  if (kind_ == "phi4") return 3.0 * p1_ * phi * phi + (p2_ + p3_);
  if (kind_ == "sine-gordon") return -p1_ * p2_ * p2_ * std::cos(p2_ * phi);
  if (kind_ == "double-well") return p1_ * (12.0 * phi * phi - 4.0);
  return spline_eval(phi, 2);
}

bool PotentialSpec::is_convex_on(double radius, int scan_points) const {
  for (int i = 0; i < scan_points; ++i) {
    const double phi = -radius + 2.0 * radius * i / (scan_points - 1);
    if (d2(phi) < -1e-12) return false;
  }
  return true;
}

void PotentialSpec::check_bounded_below(double radius, int scan_points) const {
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < scan_points; ++i) {
    const double phi = -radius + 2.0 * radius * i / (scan_points - 1);
    lo = std::min(lo, value(phi));
  }
  if (!std::isfinite(lo)) throw std::runtime_error("potential unbounded below on scan domain");
}

double PotentialSpec::min_second_derivative(double radius, int scan_points) const {
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < scan_points; ++i) {
    const double phi = -radius + 2.0 * radius * i / (scan_points - 1);
    lo = std::min(lo, d2(phi));
  }
  return lo;
}

nlohmann::json PotentialSpec::to_json() const {
  nlohmann::json j;
  j["kind"] = kind_;
  if (kind_ == "tabulated") {
    j["grid"] = grid_;
    j["values"] = values_;
  } else {
    j["p1"] = p1_;
    j["p2"] = p2_;
    j["p3"] = p3_;
  }
  return j;
}

PotentialSpec PotentialSpec::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "quadratic") return quadratic(j.at("p1").get<double>());
  if (kind == "phi4")
    return phi4(j.at("p1").get<double>(), j.at("p2").get<double>(), j.value("p3", 0.0));
  if (kind == "double-well") return double_well(j.at("p1").get<double>());
  if (kind == "tabulated")
    return tabulated(j.at("grid").get<std::vector<double>>(),
                     j.at("values").get<std::vector<double>>());
  if (kind == "sine-gordon") {
    PotentialSpec p;
    p.kind_ = kind;
    p.p1_ = j.at("p1").get<double>();
    p.p2_ = j.at("p2").get<double>();
    p.p3_ = j.at("p3").get<double>();
    return p;
  }
  throw std::invalid_argument("unknown potential kind: " + kind);
}

}  // namespace polchinski
