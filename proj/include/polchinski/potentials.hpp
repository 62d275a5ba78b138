#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace polchinski {

// Single-site potential with pointwise V, V', V''. Kinds:
//   quadratic   m/2 phi^2
//   phi4        g/4 phi^4 + (r + counterterm)/2 phi^2
//   sine-gordon 2 z eps^{-beta/4pi} cos(sqrt(beta) phi)
//   double-well scale (phi^2 - 1)^2
//   tabulated   cubic interpolation of a grid, quadratic outside
class PotentialSpec {
 public:
  static PotentialSpec zero();
  static PotentialSpec quadratic(double mass);
  static PotentialSpec phi4(double g, double r, double counterterm = 0.0);
  static PotentialSpec sine_gordon(double z, double beta, double mesh);
  static PotentialSpec double_well(double scale = 1.0);
  static PotentialSpec tabulated(std::vector<double> grid, std::vector<double> values);

  double value(double phi) const;
  double d1(double phi) const;
  double d2(double phi) const;

  const std::string& kind() const { return kind_; }
  bool is_convex_on(double radius, int scan_points = 2001) const;
  // Standing assumption: bounded below on [-radius, radius] (grid scan).
  void check_bounded_below(double radius = 12.0, int scan_points = 4001) const;

  // inf V'' over a scan grid; the semi-convexity defect used for annealing.
  double min_second_derivative(double radius = 12.0, int scan_points = 4001) const;

  nlohmann::json to_json() const;
  static PotentialSpec from_json(const nlohmann::json& j);

 private:
  std::string kind_;
  double p1_ = 0, p2_ = 0, p3_ = 0;
  std::vector<double> grid_, values_, second_;  // tabulated kind
  void build_spline();
  double spline_eval(double phi, int derivative) const;
};

}  // namespace polchinski
