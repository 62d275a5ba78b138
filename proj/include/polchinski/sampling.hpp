#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "polchinski/renorm.hpp"
#include "polchinski/rng.hpp"

namespace polchinski {

// Exact 1-D sampler: tabulated CDF with inverse-CDF lookup.
class GridSampler1d {
 public:
  GridSampler1d(const std::function<double(double)>& log_density, double lo, double hi,
                int points = 16384);

  double sample(Rng& rng) const;
  std::vector<double> sample_many(int count, std::uint64_t seed) const;
  double cdf(double x) const;
  double mean() const { return mean_; }
  double variance() const { return variance_; }

 private:
  std::vector<double> x_, cdf_;
  double mean_ = 0.0, variance_ = 0.0;
};

// Kolmogorov-Smirnov distance between two samples (two-sided, two-sample).
double ks_distance(std::vector<double> a, std::vector<double> b);

// Integrated autocorrelation time (Geyer initial positive sequence).
double integrated_autocorrelation(const std::vector<double>& series);

struct MalaOptions {
  long steps = 20000;
  long burn_in = 2000;
  double step_size = 0.2;
  std::uint64_t seed = 1;
  int thin = 1;
  bool auto_tune = true;  // one retune pass if acceptance < 0.1
};

struct MalaResult {
  std::vector<Eigen::VectorXd> samples;
  double acceptance_rate = 0.0;
  double autocorrelation_time = 1.0;
  double step_size_used = 0.0;
};

MalaResult mala_sample(const std::function<double(const Eigen::VectorXd&)>& log_density,
                       const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                       const Eigen::VectorXd& start, const MalaOptions& options);

enum class NuSampleMethod { Auto, Mala, Grid1d };

struct RenormSampleResult {
  std::vector<Eigen::VectorXd> samples;
  double acceptance_rate = 1.0;
  double autocorrelation_time = 1.0;
  std::string method;
};

// Samples of the renormalised measure nu_t, density e^{-V_t} against the
// Gaussian with covariance C_inf - C_t. Free fields pass through to exact
// Gaussian sampling; 1-D supports the exact grid sampler.
RenormSampleResult renorm_measure_sample(const RenormEvaluator& flow, double t, int count,
                                         std::uint64_t seed,
                                         NuSampleMethod method = NuSampleMethod::Auto);

struct ChiEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double r_hat = 1.0;
  bool exact = false;
};

// Susceptibility chi(g, r) = sum_x <phi_0 phi_x> of the lattice phi^4 model
// (eps = 1), MALA with 4 chains and split-R convergence check; exact Gaussian
// value when g = 0.
ChiEstimate phi4_susceptibility_smalllattice(double g, double r, const LatticeGeometry& geometry,
                                             long budget, std::uint64_t seed);

}  // namespace polchinski
