#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scs/clustering.hpp"
#include "scs/model.hpp"

namespace scs {

/// Total-least-squares fit of one submodel block.
struct TlsFit {
  Eigen::MatrixXd theta;  // n_y x n_d
  Eigen::MatrixXd d;      // n_d x n_i denoised inputs
  double residual = 0.0;  // energy of the discarded singular values
};

/// Rank-n_d truncation of Z_i = [X_i; Y_i]: with U1 = [U_x; U_y] the top left
/// singular block, the estimate is Theta = U_y U_x^{-1} and D = U_x S1 V1^T,
/// i.e. the extended matrix is normalized to [I; Theta]. When the noise ratio
/// sigma_w^2 / sigma_e^2 is known the output rows are pre-whitened first and
/// the estimate rescaled back. Throws when n_i < n_d or when U_x is singular
/// beyond `cond_limit`.
TlsFit tls_submodel(const Eigen::MatrixXd& z_block, Eigen::Index n_d,
                    std::optional<double> noise_ratio = std::nullopt,
                    double cond_limit = 1e8);

struct ModelEstimate {
  std::vector<Eigen::MatrixXd> thetas_hat;  // K matrices n_y x n_d
  Eigen::MatrixXd d_hat;                    // n_d x N, original time order
  LabelAssignment labels;
  std::vector<double> residuals;  // per submodel
};

/// Raised when a submodel block cannot be fit; keeps the labeling that led to
/// the failure so callers can report diagnostics.
class IdentifyError : public std::runtime_error {
 public:
  IdentifyError(const std::string& what, LabelAssignment labels, int submodel)
      : std::runtime_error(what), labels(std::move(labels)), failed_submodel(submodel) {}

  LabelAssignment labels;
  int failed_submodel = -1;
};

struct IdentifyConfig {
  ScsConfig scs;
  std::optional<double> noise_ratio;  // sigma_w^2 / sigma_e^2 when known
  double cond_limit = 1e8;
};

/// SCS identification: cluster with scs_labels, then fit each submodel by TLS.
ModelEstimate identify(const Dataset& ds, int k, int n_d,
                       const IdentifyConfig& cfg = {},
                       ScsIntermediates* capture = nullptr);

/// The estimation half of identify() with externally supplied labels.
ModelEstimate identify_with_labels(const Dataset& ds, const LabelAssignment& labels,
                                   std::optional<double> noise_ratio = std::nullopt,
                                   double cond_limit = 1e8);

/// Maximum-likelihood reference: per-submodel TLS with the true labels and the
/// true noise ratio. Requires ds.truth.
ModelEstimate clairvoyant_ml(const Dataset& ds, const ModelSpec& spec);

/// Estimate relabeled against ground truth. permutation[i] is the estimated
/// submodel matched to true submodel i, minimizing the summed squared
/// Frobenius distance over all K! permutations (K <= 8), lexicographic
/// tie-break.
struct Alignment {
  std::vector<int> permutation;
  ModelEstimate estimate;
  double parameter_distance = 0.0;
};

Alignment align_to_truth(const ModelEstimate& est, const ModelSpec& spec);

}  // namespace scs
