#include "scs/crb.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <stdexcept>
#include <string>

#include "internal_util.hpp"

namespace scs {

namespace {

constexpr double kConditionLimit = 1e12;

void validate_variances(double se2, double sw2) {
  if (!(sw2 > 0.0))
    throw std::invalid_argument(
        "sigma_w^2 = 0 turns the outputs into exact constraints on (theta, d); "
        "the constrained bound is out of scope");
  if (!(se2 > 0.0))
    throw std::invalid_argument("sigma_e^2 must be positive for the clairvoyant bound");
}

void validate_shapes(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& d) {
  if (theta.rows() < 1 || theta.cols() < 1)
    throw std::invalid_argument("gain matrix is empty");
  if (d.rows() != theta.cols())
    throw std::invalid_argument("design has " + std::to_string(d.rows()) +
                                " rows, gain matrix expects " + std::to_string(theta.cols()));
  if (d.cols() < 1) throw std::invalid_argument("design has no samples");
}

/// Inverse of a symmetric PD matrix with a conditioning guard.
Eigen::MatrixXd pd_inverse(const Eigen::MatrixXd& m, const std::string& context) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error(context + ": eigensolver failed");
  const auto& evals = solver.eigenvalues();
  const double max = evals[evals.size() - 1];
  const double min = evals[0];
  if (min <= 0.0 || max / min > kConditionLimit)
    throw std::runtime_error("degenerate design: " + context +
                             " is not positive definite within conditioning limits");
  return solver.eigenvectors() * evals.cwiseInverse().asDiagonal() *
         solver.eigenvectors().transpose();
}

void check_full_row_rank(const Eigen::MatrixXd& d) {
  const Eigen::MatrixXd gram = d * d.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  const auto& evals = solver.eigenvalues();
  if (evals[0] <= 1e-12 * std::max(evals[evals.size() - 1], 0.0) || evals[0] <= 0.0)
    throw std::runtime_error("design matrix is rank deficient");
}

/// S = Theta (sw2 I + se2 Theta^T Theta)^{-1} Theta^T.
Eigen::MatrixXd sigma_theta(const Eigen::MatrixXd& theta, double se2, double sw2) {
  const Eigen::Index n_d = theta.cols();
  const Eigen::MatrixXd m = sw2 * Eigen::MatrixXd::Identity(n_d, n_d) +
                            se2 * theta.transpose() * theta;
  return theta * m.llt().solve(theta.transpose());
}

Eigen::MatrixXd symmetrize(Eigen::MatrixXd m) { return 0.5 * (m + m.transpose()); }

}  // namespace

Eigen::MatrixXd FisherBlocks::assemble() const {
  const Eigen::Index p = theta_block.rows();
  const Eigen::Index n_d = d_block.rows();
  const Eigen::Index n = static_cast<Eigen::Index>(cross_blocks.size());
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(p + n * n_d, p + n * n_d);
  full.topLeftCorner(p, p) = theta_block;
  for (Eigen::Index t = 0; t < n; ++t) {
    full.block(0, p + t * n_d, p, n_d) = cross_blocks[t];
    full.block(p + t * n_d, 0, n_d, p) = cross_blocks[t].transpose();
    full.block(p + t * n_d, p + t * n_d, n_d, n_d) = d_block;
  }
  return full;
}

FisherBlocks fisher(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& d,
                    double se2, double sw2) {
  validate_variances(se2, sw2);
  validate_shapes(theta, d);
  check_full_row_rank(d);

  const Eigen::Index n_y = theta.rows();
  const Eigen::Index n_d = theta.cols();
  const Eigen::Index n = d.cols();

  FisherBlocks blocks;
  blocks.theta_block =
      detail::kron(Eigen::MatrixXd::Identity(n_y, n_y), d * d.transpose()) / sw2;
  blocks.d_block = Eigen::MatrixXd::Identity(n_d, n_d) / se2 +
                   theta.transpose() * theta / sw2;
  blocks.cross_blocks.reserve(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    // H^T(d_t) Theta / sw2: block row j is d_t theta_j^T with theta_j the
    // j-th row of Theta (the vec(Theta^T) parameter ordering).
    Eigen::MatrixXd cross(n_y * n_d, n_d);
    for (Eigen::Index j = 0; j < n_y; ++j)
      cross.middleRows(j * n_d, n_d) = d.col(t) * theta.row(j) / sw2;
    blocks.cross_blocks.push_back(std::move(cross));
  }
  return blocks;
}

Eigen::MatrixXd ccrb_theta(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& d,
                           double se2, double sw2) {
  FisherBlocks blocks = fisher(theta, d, se2, sw2);  // also validates

  const Eigen::Index n_y = theta.rows();
  const Eigen::MatrixXd gram = d * d.transpose();
  const Eigen::MatrixXd s = sigma_theta(theta, se2, sw2);
  const Eigen::MatrixXd m =
      detail::kron(Eigen::MatrixXd::Identity(n_y, n_y), gram) -
      se2 * detail::kron(s, gram);

  // The displayed bound must equal the Schur complement of the assembled
  // information matrix; evaluating both is the consistency check of the
  // closed form.
  Eigen::MatrixXd schur = blocks.theta_block;
  const Eigen::MatrixXd fd_inv = pd_inverse(blocks.d_block, "per-sample information block");
  for (const auto& cross : blocks.cross_blocks)
    schur -= cross * fd_inv * cross.transpose();
  if ((m / sw2 - schur).norm() > 1e-9 * schur.norm())
    throw std::runtime_error("theta bound disagrees with the Schur complement");

  return symmetrize(sw2 * pd_inverse(m, "theta bound"));
}

Eigen::MatrixXd ccrb_d(Eigen::Index i, const Eigen::MatrixXd& theta,
                       const Eigen::MatrixXd& d, double se2, double sw2) {
  validate_variances(se2, sw2);
  validate_shapes(theta, d);
  const Eigen::Index n = d.cols();
  if (n < 2) throw std::invalid_argument("per-sample bound needs at least two samples");
  if (i < 0 || i >= n) throw std::invalid_argument("sample index out of range");
  check_full_row_rank(d);

  const Eigen::Index n_y = theta.rows();
  const Eigen::Index n_d = theta.cols();
  const Eigen::MatrixXd gram = d * d.transpose();
  const Eigen::MatrixXd s = sigma_theta(theta, se2, sw2);

  // Theta bound of the model in which d_i is known: sample i keeps its output
  // information but contributes no input-noise coupling. This choice makes
  // the displayed bound the exact (d_i, d_i) block of the inverse
  // information matrix.
  const Eigen::MatrixXd c_i_inverse =
      (detail::kron(Eigen::MatrixXd::Identity(n_y, n_y), gram) -
       se2 * detail::kron(s, gram - d.col(i) * d.col(i).transpose())) /
      sw2;
  const Eigen::MatrixXd c_i = pd_inverse(c_i_inverse, "theta bound without sample");

  Eigen::MatrixXd h_i = Eigen::MatrixXd::Zero(n_y, n_y * n_d);
  for (Eigen::Index j = 0; j < n_y; ++j)
    h_i.block(j, j * n_d, 1, n_d) = d.col(i).transpose();
  const Eigen::MatrixXd b = theta.transpose() * h_i;

  const Eigen::MatrixXd inner =
      Eigen::MatrixXd::Identity(n_d, n_d) + (se2 / sw2) * theta.transpose() * theta -
      (se2 / (sw2 * sw2)) * b * c_i * b.transpose();
  return symmetrize(se2 * pd_inverse(inner, "d bound"));
}

CrbReport crb_report(const ModelSpec& spec, const Eigen::MatrixXd& d,
                     const std::vector<int>& labels, int d_samples_per_submodel) {
  if (d.rows() != spec.n_d)
    throw std::invalid_argument("design has " + std::to_string(d.rows()) +
                                " rows, spec expects " + std::to_string(spec.n_d));
  if (static_cast<Eigen::Index>(labels.size()) != d.cols())
    throw std::invalid_argument("label count does not match the design");

  std::vector<std::vector<Eigen::Index>> members(spec.k);
  for (Eigen::Index t = 0; t < d.cols(); ++t) {
    const int l = labels[t];
    if (l < 0 || l >= spec.k)
      throw std::invalid_argument("label outside [0, k)");
    members[l].push_back(t);
  }

  CrbReport report;
  report.n_y = spec.n_y;
  report.n_d = spec.n_d;
  report.sigma_e2 = spec.sigma_e2;
  report.sigma_w2 = spec.sigma_w2;
  for (int i = 0; i < spec.k; ++i) {
    const auto& idx = members[i];
    if (idx.empty())
      throw std::invalid_argument("submodel " + std::to_string(i + 1) + " has no samples");
    Eigen::MatrixXd d_i(spec.n_d, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) d_i.col(c) = d.col(idx[c]);

    CrbReport::Submodel sub;
    sub.cov_theta_bound = ccrb_theta(spec.thetas[i], d_i, spec.sigma_e2, spec.sigma_w2);
    Eigen::Index want = d_samples_per_submodel < 0
                            ? d_i.cols()
                            : std::min<Eigen::Index>(d_samples_per_submodel, d_i.cols());
    for (Eigen::Index c = 0; c < want; ++c) {
      sub.d_sample_indices.push_back(idx[c]);
      sub.cov_d_bounds.push_back(
          ccrb_d(c, spec.thetas[i], d_i, spec.sigma_e2, spec.sigma_w2));
    }
    report.per_submodel.push_back(std::move(sub));
  }
  return report;
}

}  // namespace scs
