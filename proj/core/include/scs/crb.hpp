#pragma once

#include <Eigen/Core>

#include <vector>

#include "scs/model.hpp"

namespace scs {

// Clairvoyant bounds for one submodel observed through
//   x_t = d_t + e_t,   y_t = Theta d_t + w_t,
// with the sample-to-submodel association known. The parameter vector is
// theta = vec(Theta^T) (rows of Theta stacked), so H(d) = I kron d^T maps
// theta to Theta d and the theta block of the Fisher information is
// (1/sw2) I kron (D D^T).

struct FisherBlocks {
  Eigen::MatrixXd theta_block;               // (n_y n_d) x (n_y n_d)
  Eigen::MatrixXd d_block;                   // n_d x n_d, identical for every sample
  std::vector<Eigen::MatrixXd> cross_blocks; // N blocks, each (n_y n_d) x n_d

  /// Arrow-structured full information matrix over (theta, d_1, ..., d_N).
  Eigen::MatrixXd assemble() const;
};

/// Fisher information blocks. Requires se2 > 0, sw2 > 0 and D of full row
/// rank; the sw2 = 0 constrained problem is refused as out of scope.
FisherBlocks fisher(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& d,
                    double se2, double sw2);

/// Lower bound on Cov(theta):
///   sw2 ( I kron (D D^T) - se2 sum_t H^T(d_t) S H(d_t) )^{-1},
/// S = Theta (sw2 I + se2 Theta^T Theta)^{-1} Theta^T. The result is checked
/// against the blockwise Schur complement of the full information matrix
/// before returning.
Eigen::MatrixXd ccrb_theta(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& d,
                           double se2, double sw2);

/// Lower bound on Cov(d_i):
///   se2 ( I + (se2/sw2) Theta^T Theta
///         - (se2/sw2^2) Theta^T H(d_i) C_i H^T(d_i) Theta )^{-1},
/// where C_i is the theta bound of the model in which d_i is known, i.e.
/// C_i^{-1} = (1/sw2)( I kron (D D^T) - se2 sum_{t != i} H^T(d_t) S H(d_t) ).
/// With that C_i the expression equals the (d_i, d_i) block of the inverse of
/// the full information matrix.
Eigen::MatrixXd ccrb_d(Eigen::Index i, const Eigen::MatrixXd& theta,
                       const Eigen::MatrixXd& d, double se2, double sw2);

/// Per-submodel bounds evaluated on the samples of each submodel.
struct CrbReport {
  struct Submodel {
    Eigen::MatrixXd cov_theta_bound;            // (n_y n_d)^2
    std::vector<Eigen::Index> d_sample_indices; // global time indices, 0-based
    std::vector<Eigen::MatrixXd> cov_d_bounds;  // one per listed sample
  };
  std::vector<Submodel> per_submodel;
  int n_y = 0;
  int n_d = 0;
  double sigma_e2 = 0.0;
  double sigma_w2 = 0.0;
};

/// Evaluate the bounds for every submodel of `spec` on the design `d` with
/// labels `labels`; Cov(d_i) is reported for the first
/// `d_samples_per_submodel` samples of each submodel (0 disables, -1 = all).
CrbReport crb_report(const ModelSpec& spec, const Eigen::MatrixXd& d,
                     const std::vector<int>& labels, int d_samples_per_submodel = 1);

}  // namespace scs
