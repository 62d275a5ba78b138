#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <json.hpp>

namespace polchinski {

using json = nlohmann::json;

// Discrete torus: side length L, mesh eps, N = (L/eps)^d sites, periodic
// neighbour lists. Sites are indexed in row-major order over the d
// coordinates.
struct LatticeGeometry {
  int dimension = 1;
  double side_length = 1.0;
  double mesh = 1.0;
  int sites_per_side = 1;
  int n_sites = 1;
  std::vector<std::vector<int>> neighbours;  // 2d entries per site

  double volume_weight() const;  // eps^d

  json to_json() const;
  static LatticeGeometry from_json(const json& j);
};

// Rejects non-integer L/eps and the single-site degenerate torus.
LatticeGeometry build_torus(int dimension, double side_length, double mesh);

// Symmetric coupling matrix with a cached spectral decomposition and a label
// for structured forms.
class CouplingMatrix {
 public:
  CouplingMatrix() : CouplingMatrix(Eigen::MatrixXd::Identity(1, 1), "scalar") {}
  explicit CouplingMatrix(Eigen::MatrixXd matrix, std::string label = "dense");
  static CouplingMatrix scalar(double value);

  int size() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const std::string& label() const { return label_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  double min_eigenvalue() const { return eigenvalues_.minCoeff(); }
  double max_eigenvalue() const { return eigenvalues_.maxCoeff(); }

  // Q f(diag) Q^T for a scalar function applied to the spectrum.
  Eigen::MatrixXd apply(const std::function<double(double)>& f) const;

  json to_json() const;
  static CouplingMatrix from_json(const json& j);

 private:
  Eigen::MatrixXd matrix_;
  std::string label_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

// -Delta^eps on the torus: (Delta f)_x = eps^-2 sum_{y~x} (f_y - f_x),
// returned positive semi-definite with row sums zero.
CouplingMatrix laplacian_matrix(const LatticeGeometry& geometry);

// Ferromagnetic ring coupling normalised to spectrum [0,1]; the constant
// vector sits at eigenvalue 0. `reported_shift` receives the additive
// identity shift applied during normalisation if non-null.
CouplingMatrix normalised_ring_coupling(int n_sites, double* reported_shift = nullptr);

// Shift-and-scale an arbitrary symmetric coupling so its spectrum lies in
// [0,1]; records shift/scale so the caller can report them.
CouplingMatrix normalise_spectrum(const Eigen::MatrixXd& coupling, double* shift = nullptr,
                                  double* scale = nullptr);

// Mean-field projector P = id - Q with Q the projection onto constants.
CouplingMatrix mean_field_projector(int n_sites);

}  // namespace polchinski
