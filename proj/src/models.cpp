#include "polchinski/models.hpp"

#include <cmath>
#include <stdexcept>

namespace polchinski {

std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ContinuousModel ContinuousModel::single_site(PotentialSpec potential, double gaussian_mass) {
  ContinuousModel m;
  m.geometry.dimension = 1;
  m.geometry.side_length = 1;
  m.geometry.mesh = 1;
  m.geometry.sites_per_side = 1;
  m.geometry.n_sites = 1;
  m.geometry.neighbours = {{}};
  m.coupling = CouplingMatrix::scalar(gaussian_mass);
  m.potential = std::move(potential);
  m.potential.check_bounded_below();
  return m;
}

ContinuousModel ContinuousModel::lattice(const LatticeGeometry& geometry, PotentialSpec potential,
                                         double mass_shift) {
  ContinuousModel m;
  m.geometry = geometry;
  CouplingMatrix lap = laplacian_matrix(geometry);
  Eigen::MatrixXd a = lap.matrix();
  if (mass_shift != 0.0)
    a += mass_shift * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  m.coupling = CouplingMatrix(a, mass_shift == 0.0 ? "scaled-laplacian" : "laplacian+mass");
  m.potential = std::move(potential);
  m.potential.check_bounded_below();
  m.weight = geometry.volume_weight();
  return m;
}

double ContinuousModel::hamiltonian(const Eigen::VectorXd& phi) const {
  double v = 0.5 * phi.dot(coupling.matrix() * phi);
  for (Eigen::Index x = 0; x < phi.size(); ++x) v += weight * potential.value(phi[x]);
  return v;
}

Eigen::VectorXd ContinuousModel::gradient(const Eigen::VectorXd& phi) const {
  Eigen::VectorXd g = coupling.matrix() * phi;
  for (Eigen::Index x = 0; x < phi.size(); ++x) g[x] += weight * potential.d1(phi[x]);
  return g;
}

Eigen::MatrixXd ContinuousModel::hessian(const Eigen::VectorXd& phi) const {
  Eigen::MatrixXd h = coupling.matrix();
  for (Eigen::Index x = 0; x < phi.size(); ++x) h(x, x) += weight * potential.d2(phi[x]);
  return h;
}

json ContinuousModel::to_json() const {
  json j;
  j["type"] = "continuous";
  if (geometry.n_sites > 1) j["geometry"] = geometry.to_json();
  j["coupling"] = coupling.to_json();
  j["potential"] = potential.to_json();
  j["weight"] = weight;
  return j;
}

ContinuousModel ContinuousModel::from_json(const json& j) {
  ContinuousModel m = single_site(PotentialSpec::from_json(j.at("potential")));
  if (j.contains("geometry")) m.geometry = LatticeGeometry::from_json(j.at("geometry"));
  m.coupling = CouplingMatrix::from_json(j.at("coupling"));
  m.weight = j.value("weight", 1.0);
  return m;
}

std::uint64_t ContinuousModel::hash() const { return fnv1a_hash(to_json().dump()); }

EnergyGradHess energy_grad_hess(const ContinuousModel& model, const Eigen::VectorXd& phi) {
  if (!phi.allFinite()) throw std::invalid_argument("energy_grad_hess: non-finite field");
  return EnergyGradHess{model.hamiltonian(phi), model.gradient(phi), model.hessian(phi)};
}

double counterterm(double g, double mass_squared, const LatticeGeometry& geometry,
                   const CouplingMatrix& laplacian) {
  if (g == 0.0) return 0.0;
  if (mass_squared <= 0) throw std::invalid_argument("counterterm: m^2 must be positive");
  const int n = geometry.n_sites;
  if (laplacian.size() != n)
    throw std::invalid_argument("counterterm: coupling does not match geometry");
  Eigen::MatrixXd op =
      laplacian.matrix() + mass_squared * Eigen::MatrixXd::Identity(n, n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(op);
  if (!lu.isInvertible()) throw std::runtime_error("counterterm: singular -Delta + m^2");
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(n);
  e0[0] = 1.0;
  const Eigen::VectorXd green = lu.solve(e0);  // G(0, .)
  const double w = geometry.volume_weight();
  double l3 = 0.0;
  for (int x = 0; x < n; ++x) l3 += std::pow(std::abs(green[x]), 3.0);
  l3 *= w;
  return -3.0 * g * green[0] + 6.0 * g * g * l3;
}

IsingModel IsingModel::make(CouplingMatrix coupling, double beta,
                            std::optional<Eigen::VectorXd> field, std::optional<double> alpha) {
  if (beta < 0) throw std::invalid_argument("IsingModel: beta must be nonnegative");
  if (coupling.min_eigenvalue() < -1e-9 || coupling.max_eigenvalue() > 1.0 + 1e-9)
    throw std::invalid_argument(
        "IsingModel: coupling spectrum must lie in [0,1]; normalise it first");
  IsingModel m;
  m.coupling = std::move(coupling);
  m.beta = beta;
  m.field = field.value_or(Eigen::VectorXd::Zero(m.coupling.size()));
  if (m.field.size() != m.coupling.size())
    throw std::invalid_argument("IsingModel: field size mismatch");
  m.alpha = alpha.value_or(beta + 1e-3);
  if (m.alpha <= beta) throw std::invalid_argument("IsingModel: requires alpha > beta");
  return m;
}

bool IsingModel::ferromagnetic() const {
  const auto& a = coupling.matrix();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (i != j && a(i, j) > 1e-12) return false;
  return true;
}

json IsingModel::to_json() const {
  json j;
  j["type"] = "ising";
  j["coupling"] = coupling.to_json();
  j["beta"] = beta;
  j["alpha"] = alpha;
  std::vector<json> h;
  for (Eigen::Index i = 0; i < field.size(); ++i) {
    if (std::isinf(field[i]))
      h.push_back(field[i] > 0 ? "+inf" : "-inf");
    else
      h.push_back(field[i]);
  }
  j["field"] = h;
  return j;
}

IsingModel IsingModel::from_json(const json& j) {
  CouplingMatrix coupling = CouplingMatrix::from_json(j.at("coupling"));
  Eigen::VectorXd field = Eigen::VectorXd::Zero(coupling.size());
  if (j.contains("field")) {
    const auto& h = j.at("field");
    for (size_t i = 0; i < h.size(); ++i) {
      if (h[i].is_string()) {
        const std::string s = h[i].get<std::string>();
        field[i] = (s == "+inf") ? std::numeric_limits<double>::infinity()
                                 : -std::numeric_limits<double>::infinity();
      } else {
        field[i] = h[i].get<double>();
      }
    }
  }
  std::optional<double> alpha;
  if (j.contains("alpha")) alpha = j.at("alpha").get<double>();
  return make(std::move(coupling), j.at("beta").get<double>(), field, alpha);
}

std::uint64_t IsingModel::hash() const { return fnv1a_hash(to_json().dump()); }

}  // namespace polchinski
