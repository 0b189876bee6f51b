#include "scs/subspace.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "internal_util.hpp"

namespace scs {

SignalSubspace signal_subspace(const StackedObservations& z, int rank,
                               double gap_threshold) {
  const Eigen::Index min_dim = std::min(z.z.rows(), z.z.cols());
  if (rank < 1 || rank > min_dim)
    throw std::invalid_argument("rank " + std::to_string(rank) +
                                " outside [1, " + std::to_string(min_dim) + "]");

  SignalSubspace out;
  if (min_dim <= 32) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(z.z, Eigen::ComputeThinV);
    out.singular_values = svd.singularValues();
    out.v = svd.matrixV().leftCols(rank);
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(z.z, Eigen::ComputeThinV);
    out.singular_values = svd.singularValues();
    out.v = svd.matrixV().leftCols(rank);
  }
  detail::fix_column_signs(out.v);

  out.gap_ratio = std::numeric_limits<double>::infinity();
  if (rank < out.singular_values.size()) {
    const double next = out.singular_values[rank];
    if (next > 0.0) out.gap_ratio = out.singular_values[rank - 1] / next;
  }
  out.weak_gap = out.gap_ratio < gap_threshold;
  return out;
}

SimilarityGraph similarity(const SignalSubspace& subspace) {
  const Eigen::Index n = subspace.v.rows();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  w.selfadjointView<Eigen::Lower>().rankUpdate(subspace.v);
  w = w.selfadjointView<Eigen::Lower>();  // exact symmetry
  w = w.cwiseAbs();
  return SimilarityGraph{std::move(w)};
}

}  // namespace scs
