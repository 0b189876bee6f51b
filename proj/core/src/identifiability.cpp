#include "scs/identifiability.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <stdexcept>
#include <string>

namespace scs {

namespace {

Eigen::VectorXd laplacian_spectrum(const Eigen::MatrixXd& w) {
  if (w.rows() != w.cols()) throw std::invalid_argument("weight matrix must be square");
  Eigen::MatrixXd lap = Eigen::MatrixXd(w.rowwise().sum().asDiagonal()) - w;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigensolver failed on the input-graph Laplacian");
  return solver.eigenvalues();
}

int count_zeros(const Eigen::VectorXd& ascending, double rel_tol) {
  const double max = ascending[ascending.size() - 1];
  if (max <= 0.0) return static_cast<int>(ascending.size());
  int count = 0;
  for (Eigen::Index i = 0; i < ascending.size(); ++i)
    if (ascending[i] < rel_tol * max) ++count;
  return count;
}

}  // namespace

Eigen::MatrixXd input_graph_weights(const Eigen::MatrixXd& d_block) {
  const Eigen::Index n_d = d_block.rows();
  if (n_d < 1) throw std::invalid_argument("input block has no rows");

  std::vector<Eigen::Index> nonzero;
  for (Eigen::Index c = 0; c < d_block.cols(); ++c)
    if (!d_block.col(c).isZero(0.0)) nonzero.push_back(c);
  Eigen::MatrixXd d(n_d, static_cast<Eigen::Index>(nonzero.size()));
  for (std::size_t c = 0; c < nonzero.size(); ++c) d.col(c) = d_block.col(nonzero[c]);

  if (d.cols() < n_d)
    throw std::runtime_error("rank-deficient input block: " + std::to_string(d.cols()) +
                             " nonzero columns for " + std::to_string(n_d) + " rows");

  const Eigen::MatrixXd gram = d * d.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigensolver failed on D D^T");
  const auto& evals = solver.eigenvalues();
  if (evals[0] <= 1e-12 * std::max(evals[n_d - 1], 0.0) || evals[0] <= 0.0)
    throw std::runtime_error("rank-deficient D D^T: input block does not have full row rank");

  const Eigen::MatrixXd inv =
      solver.eigenvectors() * evals.cwiseInverse().asDiagonal() *
      solver.eigenvectors().transpose();
  Eigen::MatrixXd projector = d.transpose() * inv * d;
  projector = 0.5 * (projector + projector.transpose());
  return projector.cwiseAbs();
}

int zero_multiplicity(const Eigen::MatrixXd& w, double rel_tol) {
  return count_zeros(laplacian_spectrum(w), rel_tol);
}

IdentifiabilityReport check_identifiable(
    const std::vector<Eigen::MatrixXd>& submodel_inputs, double rel_tol) {
  if (submodel_inputs.empty())
    throw std::invalid_argument("no submodel input blocks given");

  IdentifiabilityReport report;
  report.tolerance = rel_tol;
  report.identifiable = true;
  for (const auto& block : submodel_inputs) {
    const Eigen::VectorXd spectrum = laplacian_spectrum(input_graph_weights(block));
    SubmodelIdentifiability sub;
    sub.zero_multiplicity = count_zeros(spectrum, rel_tol);
    const Eigen::Index keep = std::min<Eigen::Index>(3, spectrum.size());
    sub.smallest_eigenvalues.assign(spectrum.data(), spectrum.data() + keep);
    report.identifiable = report.identifiable && sub.zero_multiplicity == 1;
    report.per_submodel.push_back(std::move(sub));
  }
  return report;
}

}  // namespace scs
