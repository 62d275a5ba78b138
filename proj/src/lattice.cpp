#include "polchinski/lattice.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace polchinski {

double LatticeGeometry::volume_weight() const { return std::pow(mesh, dimension); }

LatticeGeometry build_torus(int dimension, double side_length, double mesh) {
  if (dimension < 1) throw std::invalid_argument("build_torus: dimension must be >= 1");
  if (side_length <= 0 || mesh <= 0)
    throw std::invalid_argument("build_torus: side length and mesh must be positive");
  const double ratio = side_length / mesh;
  const int m = static_cast<int>(std::lround(ratio));
  if (std::abs(ratio - m) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream msg;
    msg << "build_torus: L/eps must be an integer, got L=" << side_length << ", eps=" << mesh
        << " (ratio " << ratio << ")";
    throw std::invalid_argument(msg.str());
  }
  if (m < 2)
    throw std::invalid_argument("build_torus: degenerate torus with one site per direction");

  LatticeGeometry g;
  g.dimension = dimension;
  g.side_length = side_length;
  g.mesh = mesh;
  g.sites_per_side = m;
  double n = std::pow(static_cast<double>(m), dimension);
  if (n > 1 << 24) throw std::invalid_argument("build_torus: lattice too large");
  g.n_sites = static_cast<int>(std::lround(n));

  g.neighbours.assign(g.n_sites, {});
  std::vector<int> coord(dimension);
  for (int s = 0; s < g.n_sites; ++s) {
    int rem = s;
    for (int k = dimension - 1; k >= 0; --k) {
      coord[k] = rem % m;
      rem /= m;
    }
    auto& nb = g.neighbours[s];
    nb.reserve(2 * dimension);
    for (int k = 0; k < dimension; ++k) {
      for (int step : {-1, +1}) {
        int c = (coord[k] + step + m) % m;
        int idx = 0;
        for (int j = 0; j < dimension; ++j) idx = idx * m + (j == k ? c : coord[j]);
        nb.push_back(idx);
      }
    }
  }
  return g;
}

json LatticeGeometry::to_json() const {
  return json{{"dimension", dimension}, {"side_length", side_length}, {"mesh", mesh}};
}

LatticeGeometry LatticeGeometry::from_json(const json& j) {
  return build_torus(j.at("dimension").get<int>(), j.at("side_length").get<double>(),
                     j.at("mesh").get<double>());
}

CouplingMatrix::CouplingMatrix(Eigen::MatrixXd matrix, std::string label)
    : matrix_(std::move(matrix)), label_(std::move(label)) {
  if (matrix_.rows() != matrix_.cols())
    throw std::invalid_argument("CouplingMatrix: matrix must be square");
  if (matrix_.rows() > 4096)
    throw std::invalid_argument("CouplingMatrix: dense path capped at N=4096");
  const double asym = (matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, matrix_.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("CouplingMatrix: matrix is not symmetric");
  matrix_ = 0.5 * (matrix_ + matrix_.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix_);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("CouplingMatrix: eigen-decomposition failed");
  eigenvalues_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();
}

CouplingMatrix CouplingMatrix::scalar(double value) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = value;
  return CouplingMatrix(m, "scalar");
}

Eigen::MatrixXd CouplingMatrix::apply(const std::function<double(double)>& f) const {
  Eigen::VectorXd d(eigenvalues_.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = f(eigenvalues_[i]);
  return eigenvectors_ * d.asDiagonal() * eigenvectors_.transpose();
}

json CouplingMatrix::to_json() const {
  json j;
  j["label"] = label_;
  j["entries"] = std::vector<std::vector<double>>();
  for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
    std::vector<double> row(matrix_.cols());
    for (Eigen::Index k = 0; k < matrix_.cols(); ++k) row[k] = matrix_(i, k);
    j["entries"].push_back(row);
  }
  return j;
}

CouplingMatrix CouplingMatrix::from_json(const json& j) {
  const auto& rows = j.at("entries");
  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) m(i, k) = rows[i][k].get<double>();
  return CouplingMatrix(m, j.value("label", "dense"));
}

CouplingMatrix laplacian_matrix(const LatticeGeometry& geometry) {
  const int n = geometry.n_sites;
  const double w = 1.0 / (geometry.mesh * geometry.mesh);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x) {
    for (int y : geometry.neighbours[x]) {
      m(x, x) += w;
      m(x, y) -= w;
    }
  }
  return CouplingMatrix(m, "scaled-laplacian");
}

CouplingMatrix normalise_spectrum(const Eigen::MatrixXd& coupling, double* shift, double* scale) {
  CouplingMatrix raw(coupling, "dense");
  const double lo = raw.min_eigenvalue();
  const double hi = raw.max_eigenvalue();
  const double span = hi - lo;
  if (span < 1e-14) throw std::invalid_argument("normalise_spectrum: spectrum is a point");
  if (shift) *shift = -lo;
  if (scale) *scale = 1.0 / span;
  Eigen::MatrixXd m =
      (coupling - lo * Eigen::MatrixXd::Identity(coupling.rows(), coupling.cols())) / span;
  return CouplingMatrix(m, "normalised");
}

CouplingMatrix normalised_ring_coupling(int n_sites, double* reported_shift) {
  if (n_sites < 3) throw std::invalid_argument("normalised_ring_coupling: need at least 3 sites");
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n_sites, n_sites);
  for (int i = 0; i < n_sites; ++i) {
    adj(i, (i + 1) % n_sites) -= 1.0;
    adj(i, (i + n_sites - 1) % n_sites) -= 1.0;
  }
  double shift = 0.0, scale = 1.0;
  CouplingMatrix m = normalise_spectrum(adj, &shift, &scale);
  if (reported_shift) *reported_shift = shift;
  return CouplingMatrix(m.matrix(), "ferromagnetic-ring");
}

CouplingMatrix mean_field_projector(int n_sites) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Constant(n_sites, n_sites, 1.0 / n_sites);
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n_sites, n_sites) - q;
  return CouplingMatrix(p, "mean-field-projector");
}

}  // namespace polchinski
