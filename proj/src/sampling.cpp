#include "polchinski/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace polchinski {

GridSampler1d::GridSampler1d(const std::function<double(double)>& log_density, double lo,
                             double hi, int points) {
  if (points < 64 || !(hi > lo)) throw std::invalid_argument("GridSampler1d: bad grid");
  x_.resize(points);
  std::vector<double> logd(points);
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    x_[i] = lo + (hi - lo) * i / (points - 1);
    logd[i] = log_density(x_[i]);
    peak = std::max(peak, logd[i]);
  }
  std::vector<double> dens(points);
  for (int i = 0; i < points; ++i) dens[i] = std::exp(logd[i] - peak);

  cdf_.assign(points, 0.0);
  double m1 = 0.0, m2 = 0.0;
  for (int i = 1; i < points; ++i) {
    const double h = x_[i] - x_[i - 1];
    const double seg = 0.5 * h * (dens[i] + dens[i - 1]);
    cdf_[i] = cdf_[i - 1] + seg;
    const double xm = 0.5 * (x_[i] + x_[i - 1]);
    m1 += seg * xm;
    m2 += seg * xm * xm;
  }
  const double z = cdf_.back();
  if (!(z > 0)) throw std::runtime_error("GridSampler1d: density integrates to zero");
  for (auto& c : cdf_) c /= z;
  mean_ = m1 / z;
  variance_ = m2 / z - mean_ * mean_;
}

double GridSampler1d::sample(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  size_t hi = std::min(cdf_.size() - 1, static_cast<size_t>(it - cdf_.begin()));
  if (hi == 0) hi = 1;
  const size_t lo = hi - 1;
  const double span = cdf_[hi] - cdf_[lo];
  const double w = span > 0 ? (u - cdf_[lo]) / span : 0.5;
  return x_[lo] + w * (x_[hi] - x_[lo]);
}

std::vector<double> GridSampler1d::sample_many(int count, std::uint64_t seed) const {
  std::vector<double> out(count);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
    out[i] = sample(rng);
  }
  return out;
}

double GridSampler1d::cdf(double x) const {
  if (x <= x_.front()) return 0.0;
  if (x >= x_.back()) return 1.0;
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const size_t hi = it - x_.begin();
  const size_t lo = hi - 1;
  const double w = (x - x_[lo]) / (x_[hi] - x_[lo]);
  return cdf_[lo] + w * (cdf_[hi] - cdf_[lo]);
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                             static_cast<double>(j) / b.size()));
  }
  return d;
}

double integrated_autocorrelation(const std::vector<double>& series) {
  const size_t n = series.size();
  if (n < 8) return 1.0;
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
  std::vector<double> c(n / 3, 0.0);
  for (size_t lag = 0; lag < c.size(); ++lag) {
    double acc = 0.0;
    for (size_t k = 0; k + lag < n; ++k)
      acc += (series[k] - mean) * (series[k + lag] - mean);
    c[lag] = acc / (n - lag);
  }
  if (c[0] <= 0) return 1.0;
  // Geyer: sum consecutive pairs while they stay positive.
  double tau = 1.0;
  for (size_t lag = 1; lag + 1 < c.size(); lag += 2) {
    const double pair = c[lag] + c[lag + 1];
    if (pair <= 0) break;
    tau += 2.0 * pair / c[0];
  }
  return std::max(1.0, tau);
}

MalaResult mala_sample(const std::function<double(const Eigen::VectorXd&)>& log_density,
                       const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                       const Eigen::VectorXd& start, const MalaOptions& options) {
  const int n = static_cast<int>(start.size());
  double tau = options.step_size;

  const auto run = [&](double step, bool record) {
    MalaResult res;
    res.step_size_used = step;
    Rng rng = Rng::stream(options.seed, 0x51DE);
    Eigen::VectorXd x = start;
    double lp = log_density(x);
    Eigen::VectorXd gx = grad(x);
    long accepted = 0, proposals = 0;
    std::vector<double> trace;
    const double half = 0.5 * step * step;
    Eigen::VectorXd noise(n), y(n);
    for (long k = 0; k < options.steps + options.burn_in; ++k) {
      for (int i = 0; i < n; ++i) noise[i] = rng.normal();
      y = x + half * gx + step * noise;
      const double lpy = log_density(y);
      Eigen::VectorXd gy = grad(y);
      const double fwd = -(y - x - half * gx).squaredNorm() / (2.0 * step * step);
      const double bwd = -(x - y - half * gy).squaredNorm() / (2.0 * step * step);
      ++proposals;
      if (std::log(rng.uniform()) < lpy - lp + bwd - fwd) {
        x = y;
        lp = lpy;
        gx = gy;
        ++accepted;
      }
      if (record && k >= options.burn_in && (k - options.burn_in) % options.thin == 0) {
        res.samples.push_back(x);
        trace.push_back(x[0]);
      }
    }
    res.acceptance_rate = static_cast<double>(accepted) / proposals;
    res.autocorrelation_time = integrated_autocorrelation(trace);
    return res;
  };

  MalaResult res = run(tau, true);
  if (res.acceptance_rate < 0.1 && options.auto_tune) {
    tau *= 0.25;
    res = run(tau, true);
    if (res.acceptance_rate < 0.1)
      throw std::runtime_error("mala_sample: acceptance rate below 0.1 after one retune");
  } else if (res.acceptance_rate < 0.1) {
    throw std::runtime_error("mala_sample: acceptance rate below 0.1");
  }
  return res;
}

RenormSampleResult renorm_measure_sample(const RenormEvaluator& flow, double t, int count,
                                         std::uint64_t seed, NuSampleMethod method) {
  const int n = flow.model().n_sites();
  const auto& sched = flow.schedule();
  RenormSampleResult out;

  const Eigen::MatrixXd tail = sched.c_tail_matrix(t);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(tail);
  const Eigen::VectorXd lam = solver.eigenvalues().cwiseMax(0.0);
  if (lam.maxCoeff() < 1e-14)
    throw std::domain_error("renorm_measure_sample: C_inf - C_t degenerate at this time");

  // Free field: exact Gaussian, no MCMC.
  const bool is_free = flow.model().potential.kind() == "quadratic" &&
                       flow.model().potential.d2(0.0) == 0.0;
  if (is_free) {
    out.method = "gaussian-exact";
    out.samples.resize(count);
    const Eigen::MatrixXd q = solver.eigenvectors();
    const Eigen::VectorXd s = lam.cwiseSqrt();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int k = 0; k < count; ++k) {
      Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(k));
      Eigen::VectorXd g(n);
      for (int i = 0; i < n; ++i) g[i] = s[i] * rng.normal();
      out.samples[k] = q * g;
    }
    return out;
  }

  if (n == 1 && (method == NuSampleMethod::Grid1d || method == NuSampleMethod::Auto)) {
    const double tv = tail(0, 0);
    const double radius = 8.0 * std::sqrt(tv) + 4.0;
    GridSampler1d sampler(
        [&](double phi) { return -0.5 * phi * phi / tv - flow.value1d(t, phi); }, -radius,
        radius, 8192);
    out.method = "grid-inverse-cdf";
    const auto draws = sampler.sample_many(count, seed);
    out.samples.resize(count);
    for (int k = 0; k < count; ++k) {
      Eigen::VectorXd v(1);
      v[0] = draws[k];
      out.samples[k] = v;
    }
    return out;
  }

  const Eigen::MatrixXd tail_inv = solver.operatorInverseSqrt() * solver.operatorInverseSqrt();
  const auto log_density = [&](const Eigen::VectorXd& phi) {
    return -0.5 * phi.dot(tail_inv * phi) - flow.value(t, phi).value;
  };
  const auto grad = [&](const Eigen::VectorXd& phi) -> Eigen::VectorXd {
    return (-tail_inv * phi - flow.moments(t, phi).grad_v).eval();
  };
  MalaOptions mopt;
  mopt.steps = static_cast<long>(count) * 4;
  mopt.thin = 4;
  mopt.seed = seed;
  mopt.step_size = 0.6 * std::sqrt(lam.minCoeff());
  MalaResult mala = mala_sample(log_density, grad, Eigen::VectorXd::Zero(n), mopt);
  out.method = "mala";
  out.acceptance_rate = mala.acceptance_rate;
  out.autocorrelation_time = mala.autocorrelation_time;
  out.samples = std::move(mala.samples);
  if (static_cast<int>(out.samples.size()) > count) out.samples.resize(count);
  return out;
}

ChiEstimate phi4_susceptibility_smalllattice(double g, double r, const LatticeGeometry& geometry,
                                             long budget, std::uint64_t seed) {
  const int n = geometry.n_sites;
  if (n > 64) throw std::invalid_argument("phi4_susceptibility_smalllattice: N <= 64 sites");
  const CouplingMatrix lap = laplacian_matrix(geometry);

  if (g == 0.0) {
    if (r <= 0) throw std::invalid_argument("phi4 susceptibility: free field needs r > 0");
    // chi = sum_x (A + r)^{-1}(0, x); the constant mode of -Delta gives 1/r.
    Eigen::MatrixXd op = lap.matrix() + r * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(n);
    e0[0] = 1.0;
    const Eigen::VectorXd green = op.lu().solve(e0);
    return ChiEstimate{green.sum(), 0.0, 1.0, true};
  }
  if (!(g > 0)) throw std::invalid_argument("phi4 susceptibility: g must be >= 0");

  const auto log_density = [&](const Eigen::VectorXd& phi) {
    double v = -0.5 * phi.dot(lap.matrix() * phi);
    for (int x = 0; x < n; ++x)
      v -= 0.25 * g * std::pow(phi[x], 4) + 0.5 * r * phi[x] * phi[x];
    return v;
  };
  const auto grad = [&](const Eigen::VectorXd& phi) -> Eigen::VectorXd {
    Eigen::VectorXd gr = -(lap.matrix() * phi);
    for (int x = 0; x < n; ++x) gr[x] -= g * std::pow(phi[x], 3) + r * phi[x];
    return gr;
  };

  const int chains = 4;
  const long steps = std::max<long>(1000, budget / chains);
  std::vector<std::vector<double>> obs(chains);
  std::vector<double> acc(chains, 0.0);
  const double scale = 1.0 / std::sqrt(std::max(1.0, g + std::abs(r) + 4.0));

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int c = 0; c < chains; ++c) {
    Rng init = Rng::stream(seed, 7000 + c);
    Eigen::VectorXd x0(n);
    for (int i = 0; i < n; ++i) x0[i] = 2.0 * init.normal();  // overdispersed starts
    MalaOptions mopt;
    mopt.steps = steps;
    mopt.burn_in = steps / 5;
    mopt.seed = seed + 13 * c;
    mopt.step_size = 0.4 * scale;
    MalaResult res = mala_sample(log_density, grad, x0, mopt);
    obs[c].reserve(res.samples.size());
    for (const auto& s : res.samples) {
      const double m = s.sum();
      obs[c].push_back(m * m / n);
    }
    acc[c] = res.acceptance_rate;
  }

  // Split-R over the chains.
  std::vector<double> means(chains), vars(chains);
  long len = obs[0].size();
  for (int c = 0; c < chains; ++c) {
    len = std::min<long>(len, obs[c].size());
  }
  for (int c = 0; c < chains; ++c) {
    double m = 0.0;
    for (long k = 0; k < len; ++k) m += obs[c][k];
    m /= len;
    double v = 0.0;
    for (long k = 0; k < len; ++k) v += (obs[c][k] - m) * (obs[c][k] - m);
    means[c] = m;
    vars[c] = v / (len - 1);
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / chains;
  double b = 0.0, w = 0.0;
  for (int c = 0; c < chains; ++c) {
    b += (means[c] - grand) * (means[c] - grand);
    w += vars[c];
  }
  b *= static_cast<double>(len) / (chains - 1);
  w /= chains;
  const double r_hat = std::sqrt(((len - 1.0) / len * w + b / len) / w);
  if (r_hat > 1.1)
    throw std::runtime_error("phi4_susceptibility_smalllattice: unconverged chains (R-hat " +
                             std::to_string(r_hat) + " > 1.1)");

  std::vector<double> all;
  for (int c = 0; c < chains; ++c) all.insert(all.end(), obs[c].begin(), obs[c].end());
  const double tau = integrated_autocorrelation(all);
  double sd = 0.0;
  for (double v : all) sd += (v - grand) * (v - grand);
  sd = std::sqrt(sd / (all.size() - 1));
  const double ess = all.size() / tau;
  return ChiEstimate{grand, sd / std::sqrt(std::max(1.0, ess)), r_hat, false};
}

}  // namespace polchinski
