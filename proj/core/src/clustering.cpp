#include "scs/clustering.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "internal_util.hpp"

namespace scs {

namespace {

constexpr std::uint64_t kKmeansStream = 0x6b6d65616e73ULL;

/// k-means++ seeding; falls back to the lowest unused index when every
/// remaining point coincides with a chosen center.
Eigen::MatrixXd seed_centroids(const Eigen::MatrixXd& points, int k, detail::Rng& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());
  std::vector<bool> used(static_cast<std::size_t>(n), false);

  Eigen::Index first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  centroids.row(0) = points.row(first);
  used[static_cast<std::size_t>(first)] = true;

  Eigen::VectorXd dist2 =
      (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Eigen::Index chosen = -1;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double cumulative = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        cumulative += dist2[i];
        if (cumulative >= target) {
          chosen = i;
          break;
        }
      }
      if (chosen < 0) chosen = n - 1;  // guard against rounding in the prefix sum
    } else {
      for (Eigen::Index i = 0; i < n; ++i)
        if (!used[static_cast<std::size_t>(i)]) {
          chosen = i;
          break;
        }
      if (chosen < 0) chosen = 0;
    }
    centroids.row(c) = points.row(chosen);
    used[static_cast<std::size_t>(chosen)] = true;
    dist2 = dist2.cwiseMin(
        (points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

int nearest_centroid(const Eigen::MatrixXd& centroids,
                     const Eigen::RowVectorXd& point) {
  int best = 0;
  double best_dist = (centroids.row(0) - point).squaredNorm();
  for (int c = 1; c < centroids.rows(); ++c) {
    const double dist = (centroids.row(c) - point).squaredNorm();
    if (dist < best_dist) {  // ties keep the lower index
      best_dist = dist;
      best = c;
    }
  }
  return best;
}

struct LloydOutcome {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;
  double objective = 0.0;
};

LloydOutcome lloyd_once(const Eigen::MatrixXd& points, int k, int max_iterations,
                        detail::Rng& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids = seed_centroids(points, k, rng);
  std::vector<int> labels(static_cast<std::size_t>(n), -1);

  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = nearest_centroid(centroids, points.row(i));
      if (c != labels[static_cast<std::size_t>(i)]) {
        labels[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }
    if (!changed) break;

    // Update step; clusters that lost every point keep their centroid.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
  }

  // Repair clusters that are empty at convergence by stealing the point
  // farthest from its assigned centroid (first on ties) from a donor cluster
  // with at least two members.
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  int repairs = 0;
  for (int empty = 0; empty < k; ++empty) {
    if (counts[static_cast<std::size_t>(empty)] > 0) continue;
    if (++repairs > 2 * k + 16)
      throw std::runtime_error("k-means could not repair empty clusters");
    Eigen::Index farthest = -1;
    double farthest_dist = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = labels[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(c)] < 2) continue;
      const double dist = (points.row(i) - centroids.row(c)).squaredNorm();
      if (dist > farthest_dist) {
        farthest_dist = dist;
        farthest = i;
      }
    }
    if (farthest < 0) throw std::runtime_error("k-means: empty cluster and no donor point");
    const int donor = labels[static_cast<std::size_t>(farthest)];
    labels[static_cast<std::size_t>(farthest)] = empty;
    --counts[static_cast<std::size_t>(donor)];
    ++counts[static_cast<std::size_t>(empty)];
    centroids.row(empty) = points.row(farthest);
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(points.cols());
    for (Eigen::Index i = 0; i < n; ++i)
      if (labels[static_cast<std::size_t>(i)] == donor) sum += points.row(i);
    centroids.row(donor) = sum / counts[static_cast<std::size_t>(donor)];
    empty = -1;  // rescan; a donor may have become empty
  }

  double objective = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    objective +=
        (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  return LloydOutcome{std::move(labels), std::move(centroids), objective};
}

}  // namespace

NormalizedLaplacian normalized_laplacian(const SimilarityGraph& graph) {
  const Eigen::Index n = graph.w.rows();
  if (graph.w.cols() != n) throw std::invalid_argument("similarity matrix must be square");
  if ((graph.w.array() < 0.0).any())
    throw std::invalid_argument("similarity weights must be nonnegative");
  if ((graph.w - graph.w.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("similarity matrix must be symmetric");

  NormalizedLaplacian out;
  Eigen::MatrixXd w = graph.w;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w.row(i).sum() == 0.0) {
      // isolated vertex: unit self-loop, so its row of R^{-1} W is e_i
      w(i, i) = 1.0;
      out.isolated.push_back(static_cast<int>(i));
    }
  }
  out.degrees = w.rowwise().sum();
  out.matrix = -w;
  out.matrix.array().colwise() /= out.degrees.array();
  out.matrix.diagonal().array() += 1.0;
  return out;
}

SpectralEmbedding spectral_embed(const NormalizedLaplacian& laplacian, int k,
                                 bool normalize_rows) {
  const Eigen::Index n = laplacian.matrix.rows();
  if (k < 1 || k > n)
    throw std::invalid_argument("cluster count " + std::to_string(k) +
                                " outside [1, " + std::to_string(n) + "]");

  // Symmetric equivalent L_sym = R^{1/2} Lbar R^{-1/2}; same spectrum, and
  // its eigenvectors map back through R^{-1/2}.
  const Eigen::VectorXd sqrt_deg = laplacian.degrees.cwiseSqrt();
  Eigen::MatrixXd sym = laplacian.matrix;
  sym.array().colwise() *= sqrt_deg.array();
  sym.array().rowwise() /= sqrt_deg.transpose().array();
  sym = 0.5 * (sym + sym.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigensolver failed on the normalized Laplacian");

  SpectralEmbedding out;
  out.eigenvalues = solver.eigenvalues().head(k);
  const double scale = std::max(1.0, std::abs(solver.eigenvalues()[n - 1]));
  for (Eigen::Index i = 0; i < k; ++i) {
    if (out.eigenvalues[i] < -1e-9 * scale)
      throw std::runtime_error("normalized Laplacian has a negative eigenvalue");
    out.eigenvalues[i] = std::max(out.eigenvalues[i], 0.0);
  }
  out.next_eigenvalue = k < n ? solver.eigenvalues()[k]
                              : std::numeric_limits<double>::quiet_NaN();

  out.coords = solver.eigenvectors().leftCols(k);
  out.coords.array().colwise() /= sqrt_deg.array();
  detail::fix_column_signs(out.coords);
  if (normalize_rows) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double norm = out.coords.row(i).norm();
      if (norm > 0.0) out.coords.row(i) /= norm;
    }
  }
  return out;
}

KmeansResult kmeans_rows(const Eigen::MatrixXd& points, int k, int restarts,
                         int max_iterations, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("cluster count must be positive");
  if (points.rows() < k)
    throw std::invalid_argument("fewer points than clusters: " +
                                std::to_string(points.rows()) + " < " + std::to_string(k));
  if (restarts < 1) throw std::invalid_argument("restarts must be at least 1");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");

  KmeansResult best;
  bool have_best = false;
  for (int r = 0; r < restarts; ++r) {
    detail::Rng rng(detail::mix_seed(seed, kKmeansStream, static_cast<std::uint64_t>(r)));
    LloydOutcome outcome = lloyd_once(points, k, max_iterations, rng);
    if (!have_best || outcome.objective < best.objective) {  // ties keep the earliest restart
      best.labels = std::move(outcome.labels);
      best.centroids = std::move(outcome.centroids);
      best.objective = outcome.objective;
      have_best = true;
    }
  }
  return best;
}

LabelAssignment cluster(const SpectralEmbedding& embedding, int k, int restarts,
                        std::uint64_t seed) {
  KmeansResult km = kmeans_rows(embedding.coords, k, restarts, 300, seed);

  LabelAssignment out;
  out.labels = std::move(km.labels);
  out.k = k;
  out.diagnostics.kmeans_objective = km.objective;
  out.diagnostics.cluster_sizes.assign(static_cast<std::size_t>(k), 0);
  for (int l : out.labels) ++out.diagnostics.cluster_sizes[static_cast<std::size_t>(l)];
  if (embedding.eigenvalues.size() == k && !std::isnan(embedding.next_eigenvalue))
    out.diagnostics.eigen_gap = embedding.next_eigenvalue - embedding.eigenvalues[k - 1];
  return out;
}

int zero_eigenvalue_count(const Eigen::VectorXd& ascending_eigenvalues, double rel_tol) {
  if (ascending_eigenvalues.size() == 0) return 0;
  const double max = ascending_eigenvalues[ascending_eigenvalues.size() - 1];
  if (max <= 0.0) return static_cast<int>(ascending_eigenvalues.size());
  int count = 0;
  for (Eigen::Index i = 0; i < ascending_eigenvalues.size(); ++i)
    if (ascending_eigenvalues[i] < rel_tol * max) ++count;
  return count;
}

LabelAssignment scs_labels(const StackedObservations& z, int k, int n_d,
                           const ScsConfig& cfg, ScsIntermediates* capture) {
  if (k < 1 || n_d < 1) throw std::invalid_argument("k and n_d must be positive");

  SignalSubspace subspace = signal_subspace(z, k * n_d, cfg.svd_gap_threshold);
  SimilarityGraph graph = similarity(subspace);

  // Vertices with zero similarity to everything (zero observation columns)
  // carry no association evidence. Keeping them in the spectral problem
  // would add spurious graph components, so they are clustered out and
  // assigned by the tie-break rule (lowest cluster index).
  std::vector<Eigen::Index> kept;
  std::vector<int> isolated;
  for (Eigen::Index i = 0; i < graph.n(); ++i) {
    if (graph.w.row(i).sum() == 0.0)
      isolated.push_back(static_cast<int>(i));
    else
      kept.push_back(i);
  }

  LabelAssignment labels;
  SpectralEmbedding embedding;
  if (isolated.empty()) {
    NormalizedLaplacian laplacian = normalized_laplacian(graph);
    embedding = spectral_embed(laplacian, k, cfg.normalize_embedding_rows);
    labels = cluster(embedding, k, cfg.restarts, cfg.seed);
  } else {
    SimilarityGraph reduced;
    reduced.w.resize(static_cast<Eigen::Index>(kept.size()),
                     static_cast<Eigen::Index>(kept.size()));
    for (std::size_t a = 0; a < kept.size(); ++a)
      for (std::size_t b = 0; b < kept.size(); ++b)
        reduced.w(a, b) = graph.w(kept[a], kept[b]);
    NormalizedLaplacian laplacian = normalized_laplacian(reduced);
    embedding = spectral_embed(laplacian, k, cfg.normalize_embedding_rows);
    const LabelAssignment connected = cluster(embedding, k, cfg.restarts, cfg.seed);

    labels.k = k;
    labels.labels.assign(static_cast<std::size_t>(graph.n()), 0);
    for (std::size_t a = 0; a < kept.size(); ++a)
      labels.labels[kept[a]] = connected.labels[a];
    labels.diagnostics = connected.diagnostics;
    labels.diagnostics.cluster_sizes.assign(k, 0);
    for (int l : labels.labels) ++labels.diagnostics.cluster_sizes[l];
  }

  labels.diagnostics.isolated_vertices = std::move(isolated);
  labels.diagnostics.svd_gap_ratio = subspace.gap_ratio;
  labels.diagnostics.weak_svd_gap = subspace.weak_gap;

  if (capture) {
    capture->subspace = std::move(subspace);
    capture->graph = std::move(graph);
    capture->embedding = std::move(embedding);
  }
  return labels;
}

}  // namespace scs
