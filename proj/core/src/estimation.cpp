#include "scs/estimation.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "internal_util.hpp"

namespace scs {

TlsFit tls_submodel(const Eigen::MatrixXd& z_block, Eigen::Index n_d,
                    std::optional<double> noise_ratio, double cond_limit) {
  const Eigen::Index rows = z_block.rows();
  const Eigen::Index n_i = z_block.cols();
  if (n_d < 1 || rows <= n_d)
    throw std::invalid_argument("stacked block must have more than n_d rows");
  if (n_i < n_d)
    throw std::invalid_argument("insufficient samples: " + std::to_string(n_i) +
                                " < n_d = " + std::to_string(n_d));

  double scale_back = 1.0;
  Eigen::MatrixXd whitened = z_block;
  if (noise_ratio && *noise_ratio != 1.0) {
    if (!(*noise_ratio > 0.0) || !std::isfinite(*noise_ratio))
      throw std::invalid_argument("noise ratio must be positive and finite");
    const double rho = std::sqrt(*noise_ratio);
    whitened.bottomRows(rows - n_d) /= rho;
    scale_back = rho;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(whitened,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::MatrixXd u1 = svd.matrixU().leftCols(n_d);
  const Eigen::MatrixXd u_x = u1.topRows(n_d);
  const Eigen::MatrixXd u_y = u1.bottomRows(rows - n_d);

  // Normalize the extended matrix to [I; Theta]: requires the input block of
  // the basis to be invertible.
  Eigen::JacobiSVD<Eigen::MatrixXd> ux_svd(u_x);
  const double smin = ux_svd.singularValues()[n_d - 1];
  const double smax = ux_svd.singularValues()[0];
  if (smin <= 0.0 || smax / smin > cond_limit)
    throw std::runtime_error(
        "unidentifiable submodel block: input block of the signal basis is "
        "singular (condition " +
        detail::format_double(smin > 0.0 ? smax / smin
                                         : std::numeric_limits<double>::infinity()) +
        ")");

  TlsFit fit;
  fit.theta =
      scale_back *
      u_x.transpose().partialPivLu().solve(u_y.transpose()).transpose();
  fit.d = u_x * svd.singularValues().head(n_d).asDiagonal() *
          svd.matrixV().leftCols(n_d).transpose();
  fit.residual = svd.singularValues().tail(svd.singularValues().size() - n_d).squaredNorm();
  return fit;
}

ModelEstimate identify_with_labels(const Dataset& ds, const LabelAssignment& labels,
                                   std::optional<double> noise_ratio, double cond_limit) {
  const Eigen::Index n = ds.n();
  if (static_cast<Eigen::Index>(labels.labels.size()) != n)
    throw std::invalid_argument("label count does not match the dataset horizon");
  const int k = labels.k;
  const Eigen::Index n_d = ds.x.rows();

  StackedObservations z = stack(ds);

  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(k));
  for (Eigen::Index t = 0; t < n; ++t) {
    const int l = labels.labels[static_cast<std::size_t>(t)];
    if (l < 0 || l >= k) throw std::invalid_argument("label outside [0, k)");
    members[static_cast<std::size_t>(l)].push_back(t);
  }

  ModelEstimate est;
  est.labels = labels;
  est.thetas_hat.resize(static_cast<std::size_t>(k));
  est.residuals.resize(static_cast<std::size_t>(k));
  est.d_hat.resize(n_d, n);

  for (int i = 0; i < k; ++i) {
    const auto& idx = members[static_cast<std::size_t>(i)];
    Eigen::MatrixXd block(z.z.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) block.col(static_cast<Eigen::Index>(c)) = z.z.col(idx[c]);
    try {
      TlsFit fit = tls_submodel(block, n_d, noise_ratio, cond_limit);
      est.thetas_hat[static_cast<std::size_t>(i)] = std::move(fit.theta);
      est.residuals[static_cast<std::size_t>(i)] = fit.residual;
      for (std::size_t c = 0; c < idx.size(); ++c)
        est.d_hat.col(idx[c]) = fit.d.col(static_cast<Eigen::Index>(c));
    } catch (const std::exception& e) {
      throw IdentifyError("submodel " + std::to_string(i + 1) + ": " + e.what(),
                          labels, i);
    }
  }
  return est;
}

ModelEstimate identify(const Dataset& ds, int k, int n_d, const IdentifyConfig& cfg,
                       ScsIntermediates* capture) {
  if (ds.x.rows() != n_d)
    throw std::invalid_argument("dataset has " + std::to_string(ds.x.rows()) +
                                " input rows, expected n_d = " + std::to_string(n_d));
  LabelAssignment labels = scs_labels(stack(ds), k, n_d, cfg.scs, capture);
  return identify_with_labels(ds, labels, cfg.noise_ratio, cfg.cond_limit);
}

ModelEstimate clairvoyant_ml(const Dataset& ds, const ModelSpec& spec) {
  if (!ds.truth) throw std::invalid_argument("clairvoyant estimate requires true labels");

  LabelAssignment labels;
  labels.labels = ds.truth->labels;
  labels.k = spec.k;
  labels.diagnostics.cluster_sizes.assign(static_cast<std::size_t>(spec.k), 0);
  for (int l : labels.labels)
    ++labels.diagnostics.cluster_sizes[static_cast<std::size_t>(l)];

  std::optional<double> ratio;
  if (spec.sigma_e2 > 0.0 && spec.sigma_w2 > 0.0)
    ratio = spec.sigma_w2 / spec.sigma_e2;
  return identify_with_labels(ds, labels, ratio);
}

Alignment align_to_truth(const ModelEstimate& est, const ModelSpec& spec) {
  const int k = spec.k;
  if (static_cast<int>(est.thetas_hat.size()) != k)
    throw std::invalid_argument("estimate has " + std::to_string(est.thetas_hat.size()) +
                                " submodels, truth has " + std::to_string(k));
  if (k > 8) throw std::invalid_argument("alignment enumerates permutations; k > 8 unsupported");
  for (const auto& th : est.thetas_hat)
    if (th.rows() != spec.n_y || th.cols() != spec.n_d)
      throw std::invalid_argument("estimate and truth have different gain shapes");

  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < k; ++i)
      cost += (est.thetas_hat[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] -
               spec.thetas[static_cast<std::size_t>(i)])
                  .squaredNorm();
    if (cost < best_cost) {  // strict: keeps the lexicographically first minimizer
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  Alignment out;
  out.permutation = best;
  out.parameter_distance = best_cost;
  out.estimate = est;
  std::vector<int> inverse(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    out.estimate.thetas_hat[static_cast<std::size_t>(i)] =
        est.thetas_hat[static_cast<std::size_t>(best[static_cast<std::size_t>(i)])];
    out.estimate.residuals[static_cast<std::size_t>(i)] =
        est.residuals[static_cast<std::size_t>(best[static_cast<std::size_t>(i)])];
    inverse[static_cast<std::size_t>(best[static_cast<std::size_t>(i)])] = i;
  }
  for (auto& label : out.estimate.labels.labels)
    label = inverse[static_cast<std::size_t>(label)];
  out.estimate.labels.diagnostics.cluster_sizes.assign(static_cast<std::size_t>(k), 0);
  for (int l : out.estimate.labels.labels)
    ++out.estimate.labels.diagnostics.cluster_sizes[static_cast<std::size_t>(l)];
  return out;
}

}  // namespace scs
