#pragma once

#include <Eigen/Core>

#include <vector>

namespace scs {

/// Input-graph edge weights |D_i^T (D_i D_i^T)^{-1} D_i| of one submodel.
/// Zero input columns are dropped first; they never affect identifiability.
/// Throws when D_i D_i^T is rank deficient.
Eigen::MatrixXd input_graph_weights(const Eigen::MatrixXd& d_block);

/// Multiplicity of the zero eigenvalue of the unnormalized Laplacian
/// diag(row sums) - W, counting eigenvalues below rel_tol * lambda_max.
/// Equals the number of connected components of the graph.
int zero_multiplicity(const Eigen::MatrixXd& w, double rel_tol = 1e-8);

struct SubmodelIdentifiability {
  int zero_multiplicity = 0;
  std::vector<double> smallest_eigenvalues;  // up to 3, ascending, unnormalized Laplacian
};

struct IdentifiabilityReport {
  std::vector<SubmodelIdentifiability> per_submodel;
  bool identifiable = false;  // every multiplicity equals 1
  double tolerance = 0.0;
};

/// A noiseless design is uniquely identified (up to submodel permutation)
/// exactly when every per-submodel input graph is connected.
IdentifiabilityReport check_identifiable(
    const std::vector<Eigen::MatrixXd>& submodel_inputs, double rel_tol = 1e-8);

}  // namespace scs
