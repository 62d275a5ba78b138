#include <doctest.h>

#include "polchinski/pde1d.hpp"
#include "polchinski/renorm.hpp"
#include "polchinski/rng.hpp"
#include "polchinski/sampling.hpp"

using namespace polchinski;

namespace {

RenormEvaluator double_well_flow(double horizon = 1.0) {
  return RenormEvaluator(
      ContinuousModel::single_site(PotentialSpec::double_well(1.0), 1.0 / horizon),
      CovarianceSchedule::unit1d(horizon));
}

}  // namespace

TEST_CASE("renormalised potential: Gaussian closed form and limits") {
  RenormEvaluator flow(ContinuousModel::single_site(PotentialSpec::quadratic(1.0), 1.0),
                       CovarianceSchedule::unit1d(2.0));
  // V_t(phi) = phi^2/(2(1+t)) + log(1+t)/2; at (t, phi) = (1, 2) this is
  // 1 + log(2)/2.
  CHECK(flow.value1d(1.0, 2.0) ==
        doctest::Approx(1.0 + 0.5 * std::log(2.0)).epsilon(1e-12));

  // Zero-covariance limit.
  CHECK(flow.value1d(0.0, 1.3) == doctest::Approx(0.5 * 1.3 * 1.3));

  // Small-t consistency with the direct potential.
  RenormEvaluator dw = double_well_flow();
  CHECK(std::abs(dw.value1d(1e-6, 0.7) - dw.model().potential.value(0.7)) < 1e-4);
}

TEST_CASE("double-well regression values (high-order quadrature oracle)") {
  RenormEvaluator dw = double_well_flow();
  // Frozen from a 30-digit quadrature run of -log E_{c=1/2}[e^{-V0}].
  CHECK(dw.value1d(0.5, 0.0) == doctest::Approx(0.55664562380593157).epsilon(1e-10));
  CHECK(dw.value1d(0.5, 1.3) == doctest::Approx(0.84389568616010756).epsilon(1e-10));
}

TEST_CASE("overflow guard: steep potentials stay finite") {
  RenormEvaluator steep(
      ContinuousModel::single_site(PotentialSpec::double_well(4.0), 1.0),
      CovarianceSchedule::unit1d(1.0));
  // At phi = 8 every node weight underflows without the max-shift.
  const double v = steep.value1d(0.5, 8.0);
  CHECK(std::isfinite(v));
  CHECK(v > 10.0);  // the tilted mode sits near the well, g(mode) ~ 48
}

TEST_CASE("fluctuation moments: Gaussian completion of squares") {
  RenormEvaluator flow(ContinuousModel::single_site(PotentialSpec::quadratic(1.0), 1.0),
                       CovarianceSchedule::unit1d(2.0));
  Eigen::VectorXd phi(1);
  phi[0] = 2.0;
  const FluctuationMoments m = flow.moments(1.0, phi);
  CHECK(m.mean[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.covariance(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m.grad_v[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.hess_v(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("moment formulas consistent with finite differences of V_t") {
  RenormEvaluator dw = double_well_flow();
  const double h = 1e-4;
  for (double t : {0.3, 0.7}) {
    for (double phi : {-1.2, 0.0, 0.9}) {
      const double grad = dw.grad1d(t, phi);
      const double hess = dw.hess1d(t, phi);
      const double fd_grad = (dw.value1d(t, phi + h) - dw.value1d(t, phi - h)) / (2 * h);
      const double fd_hess =
          (dw.value1d(t, phi + h) - 2 * dw.value1d(t, phi) + dw.value1d(t, phi - h)) / (h * h);
      CHECK(std::abs(grad - fd_grad) < 1e-4);
      CHECK(std::abs(hess - fd_hess) < 1e-4);
    }
  }
  // Near-singular C_t is signalled for the moment formulas.
  Eigen::VectorXd phi(1);
  phi[0] = 0.3;
  CHECK_THROWS_AS(dw.moments(0.0, phi), std::domain_error);
}

TEST_CASE("convexity is preserved along the flow") {
  for (const auto& pot :
       {PotentialSpec::quadratic(0.8), PotentialSpec::phi4(0.5, 0.3, 0.0)}) {
    RenormEvaluator flow(ContinuousModel::single_site(pot, 1.0),
                         CovarianceSchedule::unit1d(1.0));
    for (double t : {0.2, 0.6, 0.95}) {
      double worst = std::numeric_limits<double>::infinity();
      for (int i = 0; i <= 40; ++i) {
        const double phi = -4.0 + 8.0 * i / 40.0;
        worst = std::min(worst, flow.hess1d(t, phi));
      }
      CHECK(worst >= -1e-8);
    }
  }
}

TEST_CASE("Brascamp-Lieb consistency for the fluctuation measure") {
  // Strictly convex H: var(zeta) <= E[(Hess H)^{-1}] for the linear test
  // function, with H(zeta) = (zeta - phi)^2/(2c) + V0(zeta).
  RenormEvaluator flow(ContinuousModel::single_site(PotentialSpec::phi4(0.4, 0.5, 0.0), 1.0),
                       CovarianceSchedule::unit1d(1.0));
  for (double t : {0.3, 0.8}) {
    for (double phi_v : {-0.8, 0.4}) {
      Eigen::VectorXd phi(1);
      phi[0] = phi_v;
      const FluctuationMoments m = flow.moments(t, phi);
      const double c = t;
      // E_mu[(1/c + V0'')^{-1}] by dedicated quadrature over the nodes of mu.
      const double bound = [&] {
        const GaussHermite& rule = GaussHermite::order(320);
        const double sd = std::sqrt(2.0 * c);
        std::vector<double> w(rule.nodes.size());
        double z = 0.0, acc = 0.0;
        for (size_t i = 0; i < rule.nodes.size(); ++i) {
          const double zeta = phi_v + sd * rule.nodes[i];
          const double wt =
              rule.weights[i] * std::exp(-flow.model().potential.value(zeta));
          z += wt;
          acc += wt / (1.0 / c + flow.model().potential.d2(zeta));
        }
        return acc / z;
      }();
      CHECK(bound - m.covariance(0, 0) >= -1e-8);
    }
  }
}

TEST_CASE("ising fluctuation moments match finite differences (N = 4)") {
  IsingModel model = IsingModel::make(normalised_ring_coupling(4), 0.5);
  CovarianceSchedule sched = CovarianceSchedule::ising(model.coupling, 0.5, 0.6);
  Rng rng(17);
  const double t = 0.3, h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd phi(4);
    for (int i = 0; i < 4; ++i) phi[i] = 0.8 * rng.normal();
    const FluctuationMoments m = ising_fluctuation_moments(model, sched, t, phi);
    for (int i = 0; i < 4; ++i) {
      Eigen::VectorXd up = phi, dn = phi;
      up[i] += h;
      dn[i] -= h;
      const double fd = (ising_renorm_potential(model, sched, t, up) -
                         ising_renorm_potential(model, sched, t, dn)) /
                        (2 * h);
      CHECK(std::abs(fd - m.grad_v[i]) < 1e-6);
      // Hessian row against gradient differences.
      const FluctuationMoments mu = ising_fluctuation_moments(model, sched, t, up);
      const FluctuationMoments md = ising_fluctuation_moments(model, sched, t, dn);
      for (int k = 0; k < 4; ++k)
        CHECK(std::abs((mu.grad_v[k] - md.grad_v[k]) / (2 * h) - m.hess_v(i, k)) < 1e-6);
    }
  }
}

TEST_CASE("polchinski semigroup") {
  RenormEvaluator dw = double_well_flow();
  Eigen::VectorXd phi(1);
  phi[0] = 0.4;

  // P_{s,t} 1 = 1 and positivity.
  const auto one = [](const Eigen::VectorXd&) { return 1.0; };
  CHECK(dw.semigroup_apply(one, 0.1, 0.9, phi) == doctest::Approx(1.0).epsilon(1e-12));

  // P_{t,t} F = F.
  const auto sq = [](const Eigen::VectorXd& z) { return z[0] * z[0]; };
  CHECK(dw.semigroup_apply(sq, 0.5, 0.5, phi) == doctest::Approx(sq(phi)));

  // Composition law via independent quadratures: P_{r,t}(P_{s,r} F) = P_{s,t} F.
  const double s = 0.1, r = 0.4, t = 0.9;
  const auto inner = [&](const Eigen::VectorXd& z) { return dw.semigroup_apply(sq, s, r, z); };
  const double composed = dw.semigroup_apply(inner, r, t, phi);
  const double direct = dw.semigroup_apply(sq, s, t, phi);
  CHECK(std::abs(composed - direct) < 1e-6);

  // Gaussian model: P_{0,t} identity = fluctuation mean.
  RenormEvaluator gauss(ContinuousModel::single_site(PotentialSpec::quadratic(1.0), 1.0),
                        CovarianceSchedule::unit1d(2.0));
  Eigen::VectorXd p2(1);
  p2[0] = 2.0;
  const auto ident = [](const Eigen::VectorXd& z) { return z[0]; };
  CHECK(gauss.semigroup_apply(ident, 0.0, 1.0, p2) ==
        doctest::Approx(gauss.moments(1.0, p2).mean[0]).epsilon(1e-10));
}

TEST_CASE("1-D flow equation solver") {
  // Quadratic initial data follows the closed form.
  Pde1dOptions opt;
  opt.radius = 6.0;
  opt.points = 3001;
  const PdeGrid1d grid =
      polchinski_pde_solve_1d([](double x) { return 0.5 * x * x; }, 0.5, opt);
  double worst = 0.0;
  for (size_t i = 0; i < grid.x.size(); ++i) {
    if (std::abs(grid.x[i]) > 4.0) continue;
    const double exact = grid.x[i] * grid.x[i] / (2.0 * 1.5) + 0.5 * std::log(1.5);
    worst = std::max(worst, std::abs(grid.v[i] - exact));
  }
  CHECK(worst < 1e-5);

  // Constant initial data stays constant.
  const PdeGrid1d flat = polchinski_pde_solve_1d([](double) { return 2.5; }, 0.3, opt);
  for (double v : flat.v) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));

  // Double-well vs quadrature at t = 0.5 (light version of the acceptance run).
  Pde1dOptions dwopt;
  dwopt.radius = 4.0;
  dwopt.points = 4097;
  const PdeGrid1d dwgrid = polchinski_pde_solve_1d(
      [](double x) { return (x * x - 1.0) * (x * x - 1.0); }, 0.5, dwopt);
  RenormEvaluator dw = double_well_flow();
  double sup = 0.0;
  for (size_t i = dwgrid.x.size() / 10; i < dwgrid.x.size() * 9 / 10; i += 8)
    sup = std::max(sup, std::abs(dwgrid.v[i] - dw.value1d(0.5, dwgrid.x[i])));
  CHECK(sup < 1e-4);
}

TEST_CASE("renormalised measure sampling") {
  // Free field: exact Gaussian with covariance C_inf - C_t.
  RenormEvaluator free(ContinuousModel::single_site(PotentialSpec::zero(), 1.0),
                       CovarianceSchedule::unit1d(1.0));
  const RenormSampleResult g = renorm_measure_sample(free, 0.36, 20000, 5);
  CHECK(g.method == "gaussian-exact");
  double m1 = 0, m2 = 0;
  for (const auto& s : g.samples) {
    m1 += s[0];
    m2 += s[0] * s[0];
  }
  m1 /= g.samples.size();
  m2 /= g.samples.size();
  CHECK(std::abs(m1) < 3.0 * std::sqrt(0.64 / 20000));
  CHECK(m2 == doctest::Approx(0.64).epsilon(0.03));

  // Double-well at t = 0: first two moments of the grid sampler match
  // quadrature within 3 standard errors.
  RenormEvaluator dw = double_well_flow();
  const int count = 100000;
  const RenormSampleResult r = renorm_measure_sample(dw, 0.0, count, 7);
  CHECK(r.method == "grid-inverse-cdf");
  double s1 = 0, s2 = 0;
  for (const auto& s : r.samples) {
    s1 += s[0];
    s2 += s[0] * s[0];
  }
  s1 /= count;
  s2 /= count;
  const auto moment = [&](int p) {
    const GaussHermite& rule = GaussHermite::order(320);
    double z = 0, acc = 0;
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
      const double x = std::sqrt(2.0) * rule.nodes[i];
      const double w = rule.weights[i] * std::exp(-dw.model().potential.value(x));
      z += w;
      acc += w * std::pow(x, p);
    }
    return acc / z;
  };
  const double mu1 = moment(1), mu2 = moment(2);
  const double se1 = std::sqrt((mu2 - mu1 * mu1) / count);
  CHECK(std::abs(s1 - mu1) < 3 * se1);
  CHECK(std::abs(s2 - mu2) < 3 * std::sqrt((moment(4) - mu2 * mu2) / count));

  // Near the horizon the measure degenerates at 0.
  CHECK_THROWS_AS(renorm_measure_sample(dw, 1.0, 10, 1), std::domain_error);
  RenormEvaluator heat_dw(
      ContinuousModel::single_site(PotentialSpec::double_well(1.0), 1.0),
      CovarianceSchedule::heat(CouplingMatrix::scalar(1.0), 14.0));
  const RenormSampleResult tail = renorm_measure_sample(heat_dw, 14.0, 4000, 3);
  double tm = 0;
  for (const auto& s : tail.samples) tm += s[0];
  tm /= tail.samples.size();
  CHECK(std::abs(tm) < 3.0 * 1e-3 + 3.0 / std::sqrt(4000.0) * 1e-3);

  // MALA path reports acceptance and autocorrelation.
  const RenormSampleResult mala = renorm_measure_sample(dw, 0.2, 2000, 9, NuSampleMethod::Mala);
  CHECK(mala.method == "mala");
  CHECK(mala.acceptance_rate > 0.1);
  CHECK(mala.autocorrelation_time >= 1.0);
}

TEST_CASE("entropy decomposition basics") {
  RenormEvaluator dw = double_well_flow(2.0);

  // Constant F: all three entropies vanish.
  const EntropySplit flat = entropy_decomposition(dw, [](double) { return 3.0; }, 0.5);
  CHECK(std::abs(flat.total) < 1e-12);
  CHECK(std::abs(flat.renormalised) < 1e-12);
  CHECK(std::abs(flat.fluctuation_mean) < 1e-12);

  // t = 0: the fluctuation measure is a Dirac.
  const auto f = [](double x) { return std::exp(0.3 * x); };
  const EntropySplit zero = entropy_decomposition(dw, f, 0.0);
  CHECK(zero.fluctuation_mean == 0.0);
  CHECK(zero.renormalised == doctest::Approx(zero.total).epsilon(1e-12));

  // Identity at an interior time.
  const EntropySplit mid = entropy_decomposition(dw, f, 0.5);
  CHECK(std::abs(mid.total - mid.renormalised - mid.fluctuation_mean) < 1e-6);
  CHECK(mid.fluctuation_mean > 0.0);
}

TEST_CASE("entropy production matches the gradient form (de Bruijn)") {
  RenormEvaluator dw = double_well_flow(2.0);
  const auto f = [](double x) { return std::exp(0.3 * x); };
  const auto phi_fn = [](double x) { return x * std::log(x); };

  const auto renorm_entropy_part = [&](double t) {
    // E_{nu_t}[Phi(P_{0,t} F)]
    return nu_t_expect(dw, t, [&](double phi) {
      Eigen::VectorXd p(1);
      p[0] = phi;
      const auto fv = [&](const Eigen::VectorXd& z) { return f(z[0]); };
      return phi_fn(dw.semigroup_apply(fv, 0.0, t, p));
    });
  };

  for (double t : {0.2, 0.35, 0.5, 0.8, 1.1}) {
    const double h = 2e-3;
    const double lhs = (renorm_entropy_part(t + h) - renorm_entropy_part(t - h)) / (2 * h);
    const double rhs = -2.0 * nu_t_expect(dw, t, [&](double phi) {
      const double dphi = 2e-4;
      const auto fv = [&](const Eigen::VectorXd& z) { return f(z[0]); };
      Eigen::VectorXd up(1), dn(1);
      up[0] = phi + dphi;
      dn[0] = phi - dphi;
      const double root_up = std::sqrt(dw.semigroup_apply(fv, 0.0, t, up));
      const double root_dn = std::sqrt(dw.semigroup_apply(fv, 0.0, t, dn));
      const double grad_root = (root_up - root_dn) / (2 * dphi);
      return grad_root * grad_root;  // cdot = 1 on the unit-1d schedule
    });
    CHECK(std::abs(lhs - rhs) < 1e-4);
  }
}

TEST_CASE("Monte Carlo backend agrees with quadrature") {
  RenormEvaluator dw = double_well_flow();
  RenormOptions mc;
  mc.backend = Backend::MonteCarlo;
  mc.samples = 200000;
  mc.seed = 42;
  Eigen::VectorXd phi(1);
  phi[0] = 0.6;

  const double exact = dw.value1d(0.5, 0.6);
  const ValueWithError est = dw.value(0.5, phi, mc);
  CHECK(est.std_error > 0.0);
  CHECK(std::abs(est.value - exact) < 4.0 * est.std_error + 1e-4);

  const FluctuationMoments m = dw.moments(0.5, phi, mc);
  const FluctuationMoments q = dw.moments(0.5, phi);
  CHECK(std::abs(m.mean[0] - q.mean[0]) < 4.0 * m.mean_std_error[0] + 1e-4);
}

TEST_CASE("hessian worst case reporting") {
  RenormEvaluator dw = double_well_flow();
  const ObservedMinimum om = hessian_min_over_phi(dw, 0.4);
  CHECK(om.provenance == "observed-minimum");
  // The minimum sits at the symmetric point for the double well.
  CHECK(std::abs(om.argmin) < 0.05);
  CHECK(om.value == doctest::Approx(dw.hess1d(0.4, 0.0)).epsilon(1e-6));
}
