#include <doctest.h>

#include "polchinski/ising_exact.hpp"
#include "polchinski/models.hpp"
#include "polchinski/rng.hpp"

using namespace polchinski;

TEST_CASE("potential kinds and derivatives") {
  const PotentialSpec dw = PotentialSpec::double_well(1.0);
  CHECK(dw.value(1.0) == 0.0);
  CHECK(dw.d1(1.0) == 0.0);  // critical point of (phi^2-1)^2

  const PotentialSpec p4 = PotentialSpec::phi4(1.0, 0.0, 0.0);
  CHECK(p4.d1(2.0) == doctest::Approx(8.0));  // g phi^3

  // Tabulated spline reproduces a parabola away from the ends and rejects
  // evaluation outside its grid.
  std::vector<double> grid, values;
  for (int i = 0; i <= 40; ++i) {
    const double x = -2.0 + 4.0 * i / 40.0;
    grid.push_back(x);
    values.push_back(x * x);
  }
  const PotentialSpec tab = PotentialSpec::tabulated(grid, values);
  CHECK(tab.value(0.33) == doctest::Approx(0.33 * 0.33).epsilon(1e-6));
  CHECK(tab.d1(0.5) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK_THROWS_AS(tab.value(3.0), std::domain_error);

  CHECK_NOTHROW(dw.check_bounded_below());
  CHECK(dw.min_second_derivative() == doctest::Approx(-4.0).epsilon(1e-6));
}

TEST_CASE("energy, gradient, Hessian") {
  const LatticeGeometry ring = build_torus(1, 4, 1);
  ContinuousModel model = ContinuousModel::lattice(ring, PotentialSpec::double_well(0.7));

  // Pure quadratic: gradient is A phi.
  ContinuousModel quad = ContinuousModel::single_site(PotentialSpec::zero(), 1.0);
  Eigen::VectorXd one(1);
  one[0] = 1.7;
  CHECK(energy_grad_hess(quad, one).gradient[0] == doctest::Approx(1.7));

  // Gradient vs centered finite differences on random fields.
  Rng rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd phi(4);
    for (int i = 0; i < 4; ++i) phi[i] = 1.5 * rng.normal();
    const EnergyGradHess egh = energy_grad_hess(model, phi);
    const double h = 1e-5;
    for (int i = 0; i < 4; ++i) {
      Eigen::VectorXd up = phi, dn = phi;
      up[i] += h;
      dn[i] -= h;
      const double fd = (model.hamiltonian(up) - model.hamiltonian(dn)) / (2 * h);
      worst = std::max(worst, std::abs(fd - egh.gradient[i]) /
                                  std::max(1.0, std::abs(egh.gradient[i])));
    }
    // Hessian structure: A + w diag V''.
    Eigen::MatrixXd expected = model.coupling.matrix();
    for (int i = 0; i < 4; ++i) expected(i, i) += model.weight * model.potential.d2(phi[i]);
    CHECK((egh.hessian - expected).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("phi4 counterterm") {
  const LatticeGeometry ring = build_torus(1, 4, 1);
  const CouplingMatrix lap = laplacian_matrix(ring);

  CHECK(counterterm(0.0, 1.0, ring, lap) == 0.0);

  // Frozen dense-inverse oracle value: G = (-Delta + 1)^{-1} on the ring of 4
  // has G(0,.) = (7, 3, 2, 3)/15, so a = -3 * 7/15 + 6 * 0.12 = -0.68.
  CHECK(counterterm(1.0, 1.0, ring, lap) == doctest::Approx(-0.68).epsilon(1e-12));

  // Homogeneity: the first term is linear and the second quadratic in g.
  const double a1 = counterterm(1.0, 1.0, ring, lap);
  const double a2 = counterterm(2.0, 1.0, ring, lap);
  const double linear = -3.0 * 7.0 / 15.0;
  const double quadratic = a1 - linear;
  CHECK(a2 == doctest::Approx(2.0 * linear + 4.0 * quadratic).epsilon(1e-12));
}

TEST_CASE("ising moments: closed forms") {
  // Single spin, zero field.
  Eigen::MatrixXd a1 = Eigen::MatrixXd::Zero(1, 1);
  IsingModel single = IsingModel::make(CouplingMatrix(a1, "scalar"), 0.5);
  const IsingMoments m1 = ising_moments(single);
  CHECK(m1.mean[0] == doctest::Approx(0.0));
  CHECK(m1.covariance(0, 0) == doctest::Approx(1.0));

  // Two spins with energy exponent K s1 s2: cov = tanh K. The normalised
  // coupling has bond -1/2, so K = beta/2.
  Eigen::MatrixXd a2(2, 2);
  a2 << 1, -1, -1, 1;
  IsingModel pair = IsingModel::make(CouplingMatrix(a2 / 2, "pair"), 0.9);
  const IsingMoments m2 = ising_moments(pair);
  CHECK(m2.covariance(0, 1) == doctest::Approx(std::tanh(0.45)).epsilon(1e-12));

  // Pinned configuration.
  Eigen::VectorXd pinned(2);
  pinned << std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity();
  const IsingMoments m3 = ising_moments(pair, pinned);
  CHECK(m3.mean[0] == 1.0);
  CHECK(m3.mean[1] == 1.0);
  CHECK(m3.covariance.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("blocked enumeration matches the serial reference") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 4 + static_cast<int>(rng.next_u64() % 5);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = i + 1; k < n; ++k) a(i, k) = a(k, i) = -std::abs(rng.normal());
    IsingModel model = IsingModel::make(normalise_spectrum(a), 0.3 + 0.5 * rng.uniform());
    Eigen::VectorXd h(n);
    for (int i = 0; i < n; ++i) h[i] = rng.normal();
    const IsingMoments fast = ising_moments(model, h);
    const IsingMoments slow = ref::ising_moments_serial(model, h);
    CHECK((fast.mean - slow.mean).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((fast.covariance - slow.covariance).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(fast.log_partition == doctest::Approx(slow.log_partition).epsilon(1e-13));
  }
}

TEST_CASE("transfer matrix agrees with enumeration on chains up to N = 12") {
  Rng rng(21);
  for (int n : {4, 8, 12}) {
    IsingModel model = IsingModel::make(normalised_ring_coupling(n), 0.6);
    Eigen::VectorXd h(n);
    for (int i = 0; i < n; ++i) h[i] = 0.4 * rng.normal();
    const IsingMoments te = ising_moments(model, h, IsingMethod::TransferMatrix);
    const IsingMoments en = ising_moments(model, h, IsingMethod::Enumeration);
    CHECK((te.mean - en.mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((te.second_moment - en.second_moment).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(te.log_partition == doctest::Approx(en.log_partition).epsilon(1e-12));
  }
  // Long chain goes through the transfer path.
  IsingModel longchain = IsingModel::make(normalised_ring_coupling(512), 0.5);
  CHECK_NOTHROW(susceptibility(longchain, SusceptibilityMode::RowSum));
}

TEST_CASE("susceptibility") {
  // beta = 0: product measure, identity correlation matrix.
  IsingModel free = IsingModel::make(normalised_ring_coupling(6), 0.0);
  CHECK(susceptibility(free, SusceptibilityMode::RowSum) == doctest::Approx(1.0));
  CHECK(susceptibility(free, SusceptibilityMode::Spectral) == doctest::Approx(1.0));

  // Pair: 1 + tanh(beta/2), from the 2-state enumeration.
  Eigen::MatrixXd a2(2, 2);
  a2 << 1, -1, -1, 1;
  IsingModel pair = IsingModel::make(CouplingMatrix(a2 / 2, "pair"), 0.9);
  CHECK(susceptibility(pair, SusceptibilityMode::RowSum) ==
        doctest::Approx(1.0 + std::tanh(0.45)).epsilon(1e-12));

  // Translation-invariant ring: rowsum equals spectral.
  IsingModel ring = IsingModel::make(normalised_ring_coupling(6), 0.7);
  CHECK(susceptibility(ring, SusceptibilityMode::RowSum) ==
        doctest::Approx(susceptibility(ring, SusceptibilityMode::Spectral)).epsilon(1e-12));

  // Spectral <= rowsum for ferromagnets with nonnegative correlation entries.
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + static_cast<int>(rng.next_u64() % 6);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = i + 1; k < n; ++k)
        a(i, k) = a(k, i) = rng.uniform() < 0.6 ? -std::abs(rng.normal()) : 0.0;
    a(0, 1) = a(1, 0) = -1.0;
    IsingModel model = IsingModel::make(normalise_spectrum(a), 0.2 + rng.uniform());
    CHECK(susceptibility(model, SusceptibilityMode::Spectral) <=
          susceptibility(model, SusceptibilityMode::RowSum) + 1e-12);
  }

  // Nonzero field rejected.
  Eigen::VectorXd h = Eigen::VectorXd::Ones(6);
  IsingModel with_field = IsingModel::make(normalised_ring_coupling(6), 0.4, h);
  CHECK_THROWS_AS(susceptibility(with_field, SusceptibilityMode::RowSum),
                  std::invalid_argument);
}

TEST_CASE("ising model validation and JSON") {
  Eigen::MatrixXd bad(2, 2);
  bad << 3, -1, -1, 3;
  CHECK_THROWS_WITH_AS(IsingModel::make(CouplingMatrix(bad, "raw"), 0.5),
                       doctest::Contains("normalise"), std::invalid_argument);

  IsingModel model = IsingModel::make(normalised_ring_coupling(5), 0.4);
  CHECK(model.ferromagnetic());
  CHECK(model.alpha == doctest::Approx(0.4 + 1e-3));  // default alpha = beta + 1e-3

  Eigen::VectorXd h(5);
  h << 0.5, -0.25, std::numeric_limits<double>::infinity(), 0.0,
      -std::numeric_limits<double>::infinity();
  IsingModel pinned = IsingModel::make(normalised_ring_coupling(5), 0.4, h);
  IsingModel back = IsingModel::from_json(pinned.to_json());
  CHECK(back.field[2] == std::numeric_limits<double>::infinity());
  CHECK(back.field[4] == -std::numeric_limits<double>::infinity());
  CHECK(back.hash() == pinned.hash());

  ContinuousModel cm = ContinuousModel::single_site(PotentialSpec::double_well(2.0), 1.0);
  ContinuousModel cback = ContinuousModel::from_json(cm.to_json());
  CHECK(cback.potential.value(0.5) == cm.potential.value(0.5));
}
