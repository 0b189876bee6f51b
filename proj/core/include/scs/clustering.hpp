#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <vector>

#include "scs/subspace.hpp"

namespace scs {

/// Random-walk normalized Laplacian I - R^{-1} W with R = diag(row sums).
/// Vertices with zero row sum are given a unit self-loop (their row of
/// R^{-1} W becomes the indicator of the vertex) and reported in `isolated`.
struct NormalizedLaplacian {
  Eigen::MatrixXd matrix;     // N x N, rows sum to zero
  Eigen::VectorXd degrees;    // diagonal of R after the self-loop repair
  std::vector<int> isolated;  // vertices that had zero row sum
};

NormalizedLaplacian normalized_laplacian(const SimilarityGraph& graph);

/// Rows of `coords` embed the samples via the K eigenvectors of the smallest
/// Laplacian eigenvalues. `next_eigenvalue` is lambda_{K+1} (NaN when K = N).
struct SpectralEmbedding {
  Eigen::MatrixXd coords;       // N x K
  Eigen::VectorXd eigenvalues;  // K smallest, ascending, within [0, 2]
  double next_eigenvalue = std::numeric_limits<double>::quiet_NaN();
};

/// Solves the symmetric equivalent L_sym = I - R^{-1/2} W R^{-1/2} and maps
/// eigenvectors back through R^{-1/2}, which reproduces the spectrum of the
/// (non-symmetric) random-walk Laplacian with a guaranteed real
/// decomposition. Set normalize_rows to rescale each embedding row to unit
/// length before clustering.
SpectralEmbedding spectral_embed(const NormalizedLaplacian& laplacian, int k,
                                 bool normalize_rows = false);

struct LabelAssignment {
  std::vector<int> labels;  // values in [0, k)
  int k = 0;

  struct Diagnostics {
    double eigen_gap = std::numeric_limits<double>::quiet_NaN();  // lambda_{K+1} - lambda_K
    std::vector<int> cluster_sizes;
    std::vector<int> isolated_vertices;
    double svd_gap_ratio = std::numeric_limits<double>::infinity();
    bool weak_svd_gap = false;
    double kmeans_objective = 0.0;
  } diagnostics;
};

/// Plain Lloyd iterations over the rows of `points`, k-means++ seeding, best
/// of `restarts` by within-cluster sum of squares (ties to the lowest restart
/// index). Distance ties assign to the lower cluster index. Clusters left
/// empty at convergence are repaired by moving in the farthest point.
struct KmeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;  // k x dim
  double objective = 0.0;
};

KmeansResult kmeans_rows(const Eigen::MatrixXd& points, int k, int restarts,
                         int max_iterations, std::uint64_t seed);

LabelAssignment cluster(const SpectralEmbedding& embedding, int k, int restarts,
                        std::uint64_t seed);

/// Count of eigenvalues below rel_tol * lambda_max in an ascending spectrum.
int zero_eigenvalue_count(const Eigen::VectorXd& ascending_eigenvalues,
                          double rel_tol);

struct ScsConfig {
  int restarts = 20;
  int max_iterations = 300;
  std::uint64_t seed = 0;
  double zero_eigenvalue_tol = 1e-9;  // relative to lambda_max, diagnostics only
  double svd_gap_threshold = 10.0;
  bool normalize_embedding_rows = false;
};

/// Stage outputs captured for inspection (CLI dumps, tests).
struct ScsIntermediates {
  SignalSubspace subspace;
  SimilarityGraph graph;
  SpectralEmbedding embedding;
};

/// Full data-association pipeline: signal subspace of rank k*n_d, similarity
/// graph, normalized Laplacian, spectral embedding, k-means.
LabelAssignment scs_labels(const StackedObservations& z, int k, int n_d,
                           const ScsConfig& cfg = {},
                           ScsIntermediates* capture = nullptr);

}  // namespace scs
