#include "polchinski/renorm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "polchinski/ising_exact.hpp"
#include "polchinski/rng.hpp"

namespace polchinski {

namespace {

double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) throw std::runtime_error("renorm: divergent integrand");
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

}  // namespace

RenormEvaluator::RenormEvaluator(ContinuousModel model, CovarianceSchedule schedule)
    : model_(std::move(model)), schedule_(std::move(schedule)) {
  if (model_.n_sites() != schedule_.size())
    throw std::invalid_argument("RenormEvaluator: model / schedule size mismatch");
}

double RenormEvaluator::v0(const Eigen::VectorXd& phi) const {
  double v = 0.0;
  for (Eigen::Index x = 0; x < phi.size(); ++x)
    v += model_.weight * model_.potential.value(phi[x]);
  return v;
}

RenormEvaluator::WeightedNodes RenormEvaluator::fluctuation_nodes(double t,
                                                                  const Eigen::VectorXd& phi,
                                                                  int order) const {
  const int n = model_.n_sites();
  if (n > 2) throw std::invalid_argument("renorm quadrature backend covers N <= 2");
  const GaussHermite& rule = GaussHermite::order(order);
  const double log_pi_half = 0.5 * std::log(M_PI);

  WeightedNodes out;
  std::vector<double> log_terms;
  if (n == 1) {
    const double c = schedule_.scalar_c(schedule_.coupling().eigenvalues()[0], t);
    // Importance rule matched to the fluctuation measure: centre at the
    // global mode of g(zeta) = zeta^2/(2c) + V0(phi+zeta) and scale to the
    // local curvature, widened when several modes carry weight so the rule
    // spans all of them. Far from the bulk the integrand is otherwise sharper
    // than any fixed-order rule; the weights carry the exact density ratio,
    // so this stays an exact quadrature of the original integral.
    double mode = 0.0;
    double sigma_sq = c;
    const double w = model_.weight;
    try {
      const double s0 = std::sqrt(2.0 * c);
      const auto g_of = [&](double z) {
        return 0.5 * z * z / c + w * model_.potential.value(phi[0] + z);
      };
      const auto newton_from = [&](double z) {
        for (int it = 0; it < 60; ++it) {
          const double g = z / c + w * model_.potential.d1(phi[0] + z);
          const double h = 1.0 / c + w * model_.potential.d2(phi[0] + z);
          double step = h > 1e-9 ? g / h : g * c;
          step = std::clamp(step, -2.0 * s0 - 1.0, 2.0 * s0 + 1.0);
          z -= step;
          if (std::abs(step) < 1e-13) break;
        }
        return z;
      };
      const double seeds[] = {0.0, -phi[0] - 1.0, -phi[0], -phi[0] + 1.0};
      double best_g = std::numeric_limits<double>::infinity();
      double candidates[4];
      for (int k = 0; k < 4; ++k) {
        candidates[k] = newton_from(seeds[k]);
        const double gk = g_of(candidates[k]);
        if (gk < best_g) {
          best_g = gk;
          mode = candidates[k];
        }
      }
      double spread = 0.0;
      for (int k = 0; k < 4; ++k)
        if (g_of(candidates[k]) <= best_g + 60.0)
          spread = std::max(spread, std::abs(candidates[k] - mode));
      const double curv = 1.0 / c + w * model_.potential.d2(phi[0] + mode);
      // Local Laplace width, never wider than the bare covariance, then
      // widened to cover every relevant mode.
      sigma_sq = 1.0 / std::max(curv, 1.0 / c);
      sigma_sq = std::max(sigma_sq, spread * spread / 16.0);
    } catch (const std::exception&) {
      mode = 0.0;
      sigma_sq = c;
    }
    const double s_eff = std::sqrt(2.0 * sigma_sq);
    const double log_scale = 0.5 * std::log(sigma_sq / c) - log_pi_half;
    out.points.reserve(order);
    log_terms.reserve(order);
    for (int i = 0; i < order; ++i) {
      const double x = rule.nodes[i];
      const double zeta = mode + s_eff * x;
      Eigen::VectorXd z(1);
      z[0] = phi[0] + zeta;
      out.points.push_back(z);
      log_terms.push_back(rule.log_total_weight[i] + log_scale - 0.5 * zeta * zeta / c -
                          v0(z));
    }
  } else {
    const ScheduleEval ev = schedule_.eval(t);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(ev.c);
    const Eigen::VectorXd lam = solver.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd q = solver.eigenvectors();
    out.points.reserve(order * order);
    log_terms.reserve(order * order);
    const double s0 = std::sqrt(2.0 * lam[0]);
    const double s1 = std::sqrt(2.0 * lam[1]);
    for (int i = 0; i < order; ++i)
      for (int j = 0; j < order; ++j) {
        Eigen::VectorXd z = phi + q.col(0) * (s0 * rule.nodes[i]) +
                            q.col(1) * (s1 * rule.nodes[j]);
        out.points.push_back(z);
        log_terms.push_back(std::log(rule.weights[i]) + std::log(rule.weights[j]) -
                            2.0 * log_pi_half - v0(z));
      }
  }
  out.log_normaliser = log_sum_exp(log_terms);
  out.probability.resize(log_terms.size());
  for (size_t i = 0; i < log_terms.size(); ++i)
    out.probability[i] = std::exp(log_terms[i] - out.log_normaliser);
  return out;
}

RenormEvaluator::WeightedNodes RenormEvaluator::monte_carlo_nodes(
    double t, const Eigen::VectorXd& phi, const RenormOptions& opts) const {
  const int n = model_.n_sites();
  const ScheduleEval ev = schedule_.eval(t);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(ev.c);
  const Eigen::VectorXd sqrt_lam = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd q = solver.eigenvectors();

  // Common random numbers: the stream depends only on (seed), not on phi, so
  // derivative estimates across phi points share noise.
  Rng rng = Rng::stream(opts.seed, 0xC0FFEE);
  WeightedNodes out;
  out.points.reserve(opts.samples);
  std::vector<double> log_terms(opts.samples);
  const double log_n = std::log(static_cast<double>(opts.samples));
  Eigen::VectorXd g(n);
  for (int k = 0; k < opts.samples; ++k) {
    for (int i = 0; i < n; ++i) g[i] = sqrt_lam[i] * rng.normal();
    Eigen::VectorXd z = phi + q * g;
    log_terms[k] = -v0(z) - log_n;
    out.points.push_back(std::move(z));
  }
  out.log_normaliser = log_sum_exp(log_terms);
  out.probability.resize(opts.samples);
  for (int k = 0; k < opts.samples; ++k)
    out.probability[k] = std::exp(log_terms[k] - out.log_normaliser);
  return out;
}

ValueWithError RenormEvaluator::value(double t, const Eigen::VectorXd& phi,
                                      const RenormOptions& opts) const {
  if (t == 0.0 && schedule_.kind() != ScheduleKind::Ising) return {v0(phi), 0.0};

  if (opts.backend == Backend::MonteCarlo) {
    const WeightedNodes nodes = monte_carlo_nodes(t, phi, opts);
    // Jackknife over 50 blocks for the standard error of -log(mean weight).
    const int blocks = 50;
    const int per = opts.samples / blocks;
    std::vector<double> block_sums(blocks, 0.0);
    double total = 0.0;
    for (int k = 0; k < per * blocks; ++k) {
      const double w = nodes.probability[k];
      block_sums[k / per] += w;
      total += w;
    }
    double mean_lo = 0.0;
    std::vector<double> loo(blocks);
    for (int b = 0; b < blocks; ++b) {
      loo[b] = -std::log((total - block_sums[b]) / (blocks - 1) * blocks) ;
      mean_lo += loo[b];
    }
    mean_lo /= blocks;
    double var = 0.0;
    for (int b = 0; b < blocks; ++b) var += (loo[b] - mean_lo) * (loo[b] - mean_lo);
    var *= static_cast<double>(blocks - 1) / blocks;
    return {-nodes.log_normaliser, std::sqrt(var)};
  }

  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int order = opts.base_order; order <= opts.max_order; order *= 2) {
    const double v = -fluctuation_nodes(t, phi, order).log_normaliser;
    if (std::isfinite(prev) && std::abs(v - prev) <= opts.order_tol * std::max(1.0, std::abs(v)))
      return {v, 0.0};
    prev = v;
  }
  throw std::runtime_error("renorm: quadrature did not converge by max order");
}

FluctuationMoments RenormEvaluator::moments(double t, const Eigen::VectorXd& phi,
                                            const RenormOptions& opts) const {
  const int n = model_.n_sites();
  const ScheduleEval ev = schedule_.eval(t);
  const double c_min = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ev.c)
                           .eigenvalues()
                           .minCoeff();
  if (c_min <= 1e-13)
    throw std::domain_error(
        "fluctuation_moments: C_t nearly singular; use direct derivatives of V0 near t = 0");

  const auto summarise = [&](const WeightedNodes& nodes) {
    FluctuationMoments out;
    out.mean = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(n, n);
    for (size_t k = 0; k < nodes.points.size(); ++k) {
      out.mean += nodes.probability[k] * nodes.points[k];
      m2 += nodes.probability[k] * nodes.points[k] * nodes.points[k].transpose();
    }
    out.covariance = m2 - out.mean * out.mean.transpose();
    const Eigen::MatrixXd c_inv = ev.c.inverse();
    out.grad_v = c_inv * (phi - out.mean);
    out.hess_v = c_inv - c_inv * out.covariance * c_inv;
    out.hess_v = 0.5 * (out.hess_v + out.hess_v.transpose().eval());
    return out;
  };

  if (opts.backend == Backend::MonteCarlo) {
    const WeightedNodes nodes = monte_carlo_nodes(t, phi, opts);
    FluctuationMoments out = summarise(nodes);
    // Blocked jackknife stderr for the mean.
    const int blocks = 50;
    const int per = opts.samples / blocks;
    out.mean_std_error = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      std::vector<double> bw(blocks, 0.0), bwx(blocks, 0.0);
      double tw = 0.0, twx = 0.0;
      for (int k = 0; k < per * blocks; ++k) {
        const int b = k / per;
        bw[b] += nodes.probability[k];
        bwx[b] += nodes.probability[k] * nodes.points[k][i];
        tw += nodes.probability[k];
        twx += nodes.probability[k] * nodes.points[k][i];
      }
      double mean_lo = 0.0;
      std::vector<double> loo(blocks);
      for (int b = 0; b < blocks; ++b) {
        loo[b] = (twx - bwx[b]) / (tw - bw[b]);
        mean_lo += loo[b];
      }
      mean_lo /= blocks;
      double var = 0.0;
      for (int b = 0; b < blocks; ++b) var += (loo[b] - mean_lo) * (loo[b] - mean_lo);
      out.mean_std_error[i] = std::sqrt(var * (blocks - 1) / blocks);
    }
    return out;
  }

  FluctuationMoments prev;
  bool have_prev = false;
  for (int order = opts.base_order; order <= opts.max_order; order *= 2) {
    FluctuationMoments cur = summarise(fluctuation_nodes(t, phi, order));
    if (have_prev && (cur.mean - prev.mean).cwiseAbs().maxCoeff() <= opts.order_tol) return cur;
    prev = std::move(cur);
    have_prev = true;
  }
  throw std::runtime_error("fluctuation_moments: quadrature did not converge by max order");
}

double RenormEvaluator::value1d(double t, double phi, const RenormOptions& opts) const {
  Eigen::VectorXd p(1);
  p[0] = phi;
  return value(t, p, opts).value;
}

double RenormEvaluator::grad1d(double t, double phi, const RenormOptions& opts) const {
  if (t == 0.0) return model_.weight * model_.potential.d1(phi);
  Eigen::VectorXd p(1);
  p[0] = phi;
  return moments(t, p, opts).grad_v[0];
}

double RenormEvaluator::hess1d(double t, double phi, const RenormOptions& opts) const {
  if (t == 0.0) return model_.weight * model_.potential.d2(phi);
  Eigen::VectorXd p(1);
  p[0] = phi;
  return moments(t, p, opts).hess_v(0, 0);
}

double RenormEvaluator::semigroup_apply(const std::function<double(const Eigen::VectorXd&)>& f,
                                        double s, double t, const Eigen::VectorXd& phi,
                                        const RenormOptions& opts) const {
  if (s > t) throw std::invalid_argument("semigroup_apply: requires s <= t");
  if (model_.n_sites() != 1)
    throw std::invalid_argument("semigroup_apply: quadrature path implemented for N = 1");
  if (std::abs(t - s) < 1e-15) {
    return f(phi);
  }
  const double a = schedule_.coupling().eigenvalues()[0];
  const double c_diff = schedule_.scalar_c(a, t) - schedule_.scalar_c(a, s);
  const GaussHermite& rule = GaussHermite::order(opts.max_order);
  const double sd = std::sqrt(2.0 * std::max(0.0, c_diff));

  std::vector<double> log_w(rule.nodes.size());
  std::vector<double> f_val(rule.nodes.size());
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    Eigen::VectorXd z(1);
    z[0] = phi[0] + sd * rule.nodes[i];
    const double vs = (s == 0.0) ? v0(z) : value(s, z, opts).value;
    log_w[i] = std::log(rule.weights[i]) - vs;
    f_val[i] = f(z);
  }
  const double log_z = log_sum_exp(log_w);
  double acc = 0.0;
  for (size_t i = 0; i < log_w.size(); ++i) acc += std::exp(log_w[i] - log_z) * f_val[i];
  return acc;
}

double ising_renorm_potential(const IsingModel& model, const CovarianceSchedule& schedule,
                              double t, const Eigen::VectorXd& phi) {
  if (schedule.kind() != ScheduleKind::Ising)
    throw std::invalid_argument("ising_renorm_potential: needs the ising schedule");
  const int n = model.n_sites();
  const Eigen::MatrixXd c_inv =
      schedule.coupling().apply([&](double a) { return 1.0 / schedule.scalar_c(a, t); });
  const Eigen::VectorXd g = c_inv * phi + model.field;
  IsingModel fluct = IsingModel::make(model.coupling, t, g, schedule.alpha() + 1.0);
  const IsingMoments mom = ising_moments(fluct);
  const double alpha = schedule.alpha();
  return 0.5 * phi.dot(c_inv * phi) + 0.5 * (alpha - t) * n - mom.log_partition;
}

FluctuationMoments ising_fluctuation_moments(const IsingModel& model,
                                             const CovarianceSchedule& schedule, double t,
                                             const Eigen::VectorXd& phi) {
  if (schedule.kind() != ScheduleKind::Ising)
    throw std::invalid_argument("ising_fluctuation_moments: needs the ising schedule");
  const Eigen::MatrixXd c_inv =
      schedule.coupling().apply([&](double a) { return 1.0 / schedule.scalar_c(a, t); });
  const Eigen::VectorXd g = c_inv * phi + model.field;
  IsingModel fluct = IsingModel::make(model.coupling, t, g, schedule.alpha() + 1.0);
  const IsingMoments mom = ising_moments(fluct);
  FluctuationMoments out;
  out.mean = mom.mean;
  out.covariance = mom.covariance;
  out.grad_v = c_inv * (phi - mom.mean);
  out.hess_v = c_inv - c_inv * mom.covariance * c_inv;
  out.hess_v = 0.5 * (out.hess_v + out.hess_v.transpose().eval());
  return out;
}

double nu_t_expect(const RenormEvaluator& flow, double t,
                   const std::function<double(double)>& g, int outer_order,
                   const RenormOptions& opts) {
  const double a = flow.schedule().coupling().eigenvalues()[0];
  const double tail = flow.schedule().scalar_c_tail(a, t);
  const GaussHermite& rule = GaussHermite::order(outer_order);
  const double sd = std::sqrt(2.0 * tail);
  std::vector<double> log_w(rule.nodes.size());
  std::vector<double> g_val(rule.nodes.size());
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    const double phi = sd * rule.nodes[i];
    const double vt = flow.value1d(t, phi, opts);
    log_w[i] = std::log(rule.weights[i]) - vt;
    g_val[i] = g(phi);
  }
  const double log_z = log_sum_exp(log_w);
  double acc = 0.0;
  for (size_t i = 0; i < log_w.size(); ++i) acc += std::exp(log_w[i] - log_z) * g_val[i];
  return acc;
}

EntropySplit entropy_decomposition(const RenormEvaluator& flow,
                                   const std::function<double(double)>& f, double t,
                                   int outer_order, const RenormOptions& opts) {
  const auto phi_fn = [](double x) { return x * std::log(x); };

  // Total entropy under nu_0.
  const double ef0 = nu_t_expect(flow, 0.0, f, outer_order, opts);
  const double eff0 = nu_t_expect(
      flow, 0.0, [&](double x) { return phi_fn(f(x)); }, outer_order, opts);
  if (!(ef0 > 0)) throw std::invalid_argument("entropy_decomposition: F must be positive");
  const double total = eff0 - phi_fn(ef0);

  // P_{0,t}F and the conditional entropy at a point phi.
  const auto conditional = [&](double phi, double& pf, double& ent) {
    Eigen::VectorXd p(1);
    p[0] = phi;
    if (flow.schedule().scalar_c(flow.schedule().coupling().eigenvalues()[0], t) <= 1e-14) {
      pf = f(phi);
      ent = 0.0;
      return;
    }
    const GaussHermite& rule = GaussHermite::order(opts.max_order);
    const double c = flow.schedule().scalar_c(flow.schedule().coupling().eigenvalues()[0], t);
    const double sd = std::sqrt(2.0 * c);
    std::vector<double> log_w(rule.nodes.size());
    std::vector<double> fv(rule.nodes.size());
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
      const double z = phi + sd * rule.nodes[i];
      Eigen::VectorXd zv(1);
      zv[0] = z;
      log_w[i] = std::log(rule.weights[i]) - flow.v0(zv);
      fv[i] = f(z);
    }
    const double log_z = log_sum_exp(log_w);
    pf = 0.0;
    double pff = 0.0;
    for (size_t i = 0; i < log_w.size(); ++i) {
      const double w = std::exp(log_w[i] - log_z);
      pf += w * fv[i];
      pff += w * phi_fn(fv[i]);
    }
    ent = pff - phi_fn(pf);
  };

  const double e_pf = nu_t_expect(
      flow, t,
      [&](double phi) {
        double pf, ent;
        conditional(phi, pf, ent);
        return pf;
      },
      outer_order, opts);
  const double e_phi_pf = nu_t_expect(
      flow, t,
      [&](double phi) {
        double pf, ent;
        conditional(phi, pf, ent);
        return phi_fn(pf);
      },
      outer_order, opts);
  const double e_ent = nu_t_expect(
      flow, t,
      [&](double phi) {
        double pf, ent;
        conditional(phi, pf, ent);
        return ent;
      },
      outer_order, opts);

  EntropySplit out;
  out.total = total;
  out.renormalised = e_phi_pf - phi_fn(e_pf);
  out.fluctuation_mean = e_ent;
  return out;
}

ObservedMinimum hessian_min_over_phi(const RenormEvaluator& flow, double t, double radius,
                                     int grid_points, int descent_iters,
                                     const RenormOptions& opts) {
  const auto h = [&](double phi) { return flow.hess1d(t, phi, opts); };

  double best_phi = 0.0;
  double best = std::numeric_limits<double>::infinity();
  // (i) deterministic grid
  for (int i = 0; i < grid_points; ++i) {
    const double phi = -radius + 2.0 * radius * i / (grid_points - 1);
    const double v = h(phi);
    if (v < best) {
      best = v;
      best_phi = phi;
    }
  }
  // (ii) a light scan at nu_t-typical scale (quantile points of the Gaussian
  // envelope; cheaper than MCMC and covers the same region)
  const double a = flow.schedule().coupling().eigenvalues()[0];
  const double sd = std::sqrt(std::max(1e-12, flow.schedule().scalar_c_tail(a, t)));
  for (int i = -8; i <= 8; ++i) {
    const double phi = 0.45 * sd * i;
    const double v = h(phi);
    if (v < best) {
      best = v;
      best_phi = phi;
    }
  }
  // (iii) golden-section descent around the incumbent
  double lo = best_phi - 2.0 * radius / (grid_points - 1);
  double hi = best_phi + 2.0 * radius / (grid_points - 1);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = h(x1), f2 = h(x2);
  for (int it = 0; it < descent_iters; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = h(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = h(x2);
    }
  }
  const double xm = 0.5 * (lo + hi);
  const double fm = h(xm);
  if (fm < best) {
    best = fm;
    best_phi = xm;
  }
  return ObservedMinimum{best, best_phi};
}

}  // namespace polchinski
