#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "polchinski/schedule.hpp"

using namespace polchinski;

TEST_CASE("torus geometry") {
  const LatticeGeometry ring = build_torus(1, 4, 1);
  CHECK(ring.n_sites == 4);
  for (const auto& nb : ring.neighbours) CHECK(nb.size() == 2);

  // Smallest 2-torus: 4 sites, multi-edges allowed.
  const LatticeGeometry torus = build_torus(2, 2, 1);
  CHECK(torus.n_sites == 4);
  for (const auto& nb : torus.neighbours) CHECK(nb.size() == 4);

  // Mesh refinement.
  CHECK(build_torus(1, 1, 0.25).n_sites == 4);

  CHECK_THROWS_WITH_AS(build_torus(1, 4, 0.3), doctest::Contains("integer"),
                       std::invalid_argument);
  CHECK_THROWS_AS(build_torus(2, 1, 1), std::invalid_argument);  // single site per direction
}

TEST_CASE("laplacian matrix on the ring of 4") {
  const LatticeGeometry ring = build_torus(1, 4, 1);
  const CouplingMatrix lap = laplacian_matrix(ring);

  // Row sums zero, constant vector in the kernel.
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
  CHECK((lap.matrix() * ones).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-14));

  // Eigenvalues 2(1 - cos(2 pi k / 4)) = {0, 2, 2, 4} by explicit
  // diagonalisation of the circulant.
  std::vector<double> expected{0, 2, 2, 4};
  for (int k = 0; k < 4; ++k)
    CHECK(lap.eigenvalues()[k] == doctest::Approx(expected[k]).epsilon(1e-12));
}

TEST_CASE("schedule point values") {
  // unit-1d at t = 0.
  CovarianceSchedule unit = CovarianceSchedule::unit1d(1.0);
  const ScheduleEval e0 = unit.eval(0.0);
  CHECK(e0.c(0, 0) == 0.0);
  CHECK(e0.c_dot(0, 0) == 1.0);
  CHECK(e0.c_ddot(0, 0) == 0.0);

  // pauli-villars, scalar A = 1, t = 1: C = t/(1+t), by hand-checked calculus
  // dC = 1/(1+t)^2, ddC = -2/(1+t)^3.
  CovarianceSchedule pv = CovarianceSchedule::pauli_villars(CouplingMatrix::scalar(1.0), 10.0);
  const ScheduleEval e1 = pv.eval(1.0);
  CHECK(e1.c(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(e1.c_dot(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(e1.c_ddot(0, 0) == doctest::Approx(-0.25).epsilon(1e-15));

  // heat, scalar A = 2, t = 0.5: dC = e^{-1}.
  CovarianceSchedule heat = CovarianceSchedule::heat(CouplingMatrix::scalar(2.0), 10.0);
  CHECK(heat.eval(0.5).c_dot(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

  // ising kind has C_0 = alpha^{-1} id.
  CovarianceSchedule ising =
      CovarianceSchedule::ising(normalised_ring_coupling(4), 0.5, 0.7);
  const Eigen::MatrixXd c0 = ising.c_matrix(0.0);
  CHECK((c0 - Eigen::MatrixXd::Identity(4, 4) / 0.7).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(unit.eval(2.0), std::domain_error);
  CHECK_THROWS_AS(unit.eval(-0.1), std::domain_error);
}

TEST_CASE("cdot matches centered finite differences of c") {
  const LatticeGeometry ring = build_torus(1, 8, 1);
  Eigen::MatrixXd a = laplacian_matrix(ring).matrix() +
                      0.5 * Eigen::MatrixXd::Identity(8, 8);
  const CouplingMatrix coupling(a, "laplacian+mass");
  const double h = 1e-3;
  for (const auto& sched : {CovarianceSchedule::heat(coupling, 5.0),
                            CovarianceSchedule::pauli_villars(coupling, 5.0),
                            CovarianceSchedule::ising(normalised_ring_coupling(8), 0.8, 1.5)}) {
    for (double t : {0.2, 0.7}) {
      const Eigen::MatrixXd fd =
          (sched.c_matrix(t + h) - sched.c_matrix(t - h)) / (2.0 * h);
      const Eigen::MatrixXd an = sched.eval(t).c_dot;
      CHECK((fd - an).cwiseAbs().maxCoeff() < 10.0 * h * h);
    }
  }
}

TEST_CASE("monotone PSD decomposition on a 20-point grid") {
  const LatticeGeometry ring = build_torus(1, 6, 1);
  Eigen::MatrixXd a =
      laplacian_matrix(ring).matrix() + Eigen::MatrixXd::Identity(6, 6);
  const CouplingMatrix coupling(a, "laplacian+mass");
  for (const auto& sched : {CovarianceSchedule::unit1d(2.0, 6),
                            CovarianceSchedule::heat(coupling, 4.0),
                            CovarianceSchedule::pauli_villars(coupling, 4.0),
                            CovarianceSchedule::ising(normalised_ring_coupling(6), 0.9, 1.1)}) {
    const double t_end = sched.t_end();
    Eigen::MatrixXd prev = sched.c_matrix(0.0);
    for (int k = 1; k < 20; ++k) {
      const Eigen::MatrixXd cur = sched.c_matrix(t_end * k / 20.0);
      const Eigen::MatrixXd diff = cur - prev;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff);
      CHECK(es.eigenvalues().minCoeff() > -1e-12);
      prev = cur;
    }
  }
}

TEST_CASE("trapezoid integral of cdot reproduces c") {
  const CouplingMatrix coupling = CouplingMatrix::scalar(1.0);
  for (const auto& sched : {CovarianceSchedule::heat(coupling, 2.0),
                            CovarianceSchedule::pauli_villars(coupling, 2.0)}) {
    const double t_end = 1.0;
    const int steps = 1000;
    double acc = 0.0;
    double prev = sched.scalar_c_dot(1.0, 0.0);
    for (int k = 1; k <= steps; ++k) {
      const double t = t_end * k / steps;
      const double cur = sched.scalar_c_dot(1.0, t);
      acc += 0.5 * (prev + cur) * (t_end / steps);
      prev = cur;
    }
    const double exact = sched.scalar_c(1.0, t_end);
    CHECK(std::abs(acc - exact) / exact < 1e-6);
  }
}

TEST_CASE("eigenbasis evaluation agrees with dense matrix functions") {
  const LatticeGeometry ring = build_torus(1, 8, 1);
  Eigen::MatrixXd a = laplacian_matrix(ring).matrix() +
                      0.3 * Eigen::MatrixXd::Identity(8, 8);
  const CouplingMatrix coupling(a, "laplacian+mass");
  const double t = 0.8;

  const Eigen::MatrixXd heat_dense = (-t * a).exp() ;
  CHECK((CovarianceSchedule::heat(coupling, 5.0).eval(t).c_dot - heat_dense)
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  const Eigen::MatrixXd pv_dense =
      (a + Eigen::MatrixXd::Identity(8, 8) / t).inverse();
  CHECK((CovarianceSchedule::pauli_villars(coupling, 5.0).c_matrix(t) - pv_dense)
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("reparametrisation") {
  CovarianceSchedule unit = CovarianceSchedule::unit1d(1.0);

  // Identity map leaves values unchanged.
  CovarianceSchedule ident = unit.reparametrize(TimeMap::identity());
  CHECK(ident.scalar_c(1.0, 0.37) == unit.scalar_c(1.0, 0.37));

  // a(t) = t^2: dC^a_t = 2t.
  CovarianceSchedule squared = unit.reparametrize(TimeMap::power(2.0));
  CHECK(squared.scalar_c_dot(1.0, 0.25) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(squared.scalar_c(1.0, 0.5) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(squared.t_end() == doctest::Approx(1.0));

  // a(t) = 2t halves the domain.
  CovarianceSchedule scaled = unit.reparametrize(TimeMap::scale(2.0));
  CHECK(scaled.t_end() == doctest::Approx(0.5));

  CHECK_THROWS_AS(unit.reparametrize(TimeMap::scale(-1.0)), std::invalid_argument);
}

TEST_CASE("schedule and geometry JSON round-trip") {
  const LatticeGeometry g = build_torus(2, 4, 0.5);
  const LatticeGeometry g2 = LatticeGeometry::from_json(g.to_json());
  CHECK(g2.n_sites == g.n_sites);
  CHECK(g2.mesh == g.mesh);

  CovarianceSchedule pv =
      CovarianceSchedule::pauli_villars(CouplingMatrix::scalar(2.0), 7.0)
          .reparametrize(TimeMap::power(2.0));
  CovarianceSchedule back = CovarianceSchedule::from_json(pv.to_json());
  CHECK(back.kind() == ScheduleKind::PauliVillars);
  CHECK(back.scalar_c(2.0, 0.6) == doctest::Approx(pv.scalar_c(2.0, 0.6)).epsilon(1e-15));
}
