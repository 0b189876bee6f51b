#pragma once

#include <Eigen/Core>

#include "scs/model.hpp"

namespace scs {

/// Top-r right-singular subspace of the stacked observations.
struct SignalSubspace {
  Eigen::MatrixXd v;                // N x r, orthonormal columns
  Eigen::VectorXd singular_values;  // full spectrum, descending
  double gap_ratio = 0.0;           // sigma_r / sigma_{r+1}, +inf when r is maximal
  bool weak_gap = false;            // gap_ratio fell below the configured threshold

  Eigen::Index rank() const { return v.cols(); }
};

/// Dense nonnegative symmetric edge-weight matrix over the N samples.
struct SimilarityGraph {
  Eigen::MatrixXd w;  // N x N

  Eigen::Index n() const { return w.rows(); }
};

/// Rank-r truncated right-singular basis of Z. Column signs are fixed so the
/// entry of largest magnitude in each column (first on ties) is nonnegative.
/// A gap ratio below `gap_threshold` only raises the weak_gap diagnostic.
SignalSubspace signal_subspace(const StackedObservations& z, int rank,
                               double gap_threshold = 10.0);

/// Edge weights W = |V V^T| entrywise. For noiseless data W is the
/// absolute value of the orthogonal projector onto the input row space and is
/// block diagonal (one block per submodel) up to the sample permutation.
SimilarityGraph similarity(const SignalSubspace& subspace);

}  // namespace scs
