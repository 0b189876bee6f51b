#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "scs/crb.hpp"
#include "test_support.hpp"

using namespace scs;
using test_support::TestRng;

namespace {

/// Gaussian log-likelihood of the errors-in-variables submodel, parameterized
/// by (vec(Theta^T), vec(D)); the oracle for the Fisher information tests.
double log_likelihood(const Eigen::VectorXd& params, int n_y, int n_d,
                      const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                      double se2, double sw2) {
  const Eigen::Index n = x.cols();
  Eigen::MatrixXd theta(n_y, n_d);
  for (int r = 0; r < n_y; ++r)
    for (int c = 0; c < n_d; ++c) theta(r, c) = params[r * n_d + c];
  Eigen::MatrixXd d(n_d, n);
  for (Eigen::Index t = 0; t < n; ++t)
    for (int r = 0; r < n_d; ++r) d(r, t) = params[n_y * n_d + t * n_d + r];
  double ll = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    ll -= (x.col(t) - d.col(t)).squaredNorm() / (2.0 * se2);
    ll -= (y.col(t) - theta * d.col(t)).squaredNorm() / (2.0 * sw2);
  }
  return ll;
}

/// Central-difference Hessian.
Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& at, double step) {
  const Eigen::Index p = at.size();
  Eigen::MatrixXd h(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) {
      Eigen::VectorXd pp = at, pm = at, mp = at, mm = at;
      pp[i] += step; pp[j] += step;
      pm[i] += step; pm[j] -= step;
      mp[i] -= step; mp[j] += step;
      mm[i] -= step; mm[j] -= step;
      h(i, j) = h(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * step * step);
    }
  }
  return h;
}

struct Instance {
  Eigen::MatrixXd theta;
  Eigen::MatrixXd d;
  double se2 = 0.0;
  double sw2 = 0.0;
};

Instance random_instance(TestRng& rng, int max_dim = 2, int max_n = 7) {
  Instance inst;
  const int n_y = 1 + rng.below(max_dim);
  const int n_d = 1 + rng.below(max_dim);
  const int n = n_d + 1 + rng.below(max_n - n_d);
  inst.theta = test_support::random_matrix(rng, n_y, n_d);
  inst.d = test_support::random_matrix(rng, n_d, n);
  inst.se2 = 0.005 + 0.05 * rng.uniform();
  inst.sw2 = 0.005 + 0.05 * rng.uniform();
  return inst;
}

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / b.norm();
}

}  // namespace

TEST_CASE("scalar Fisher block by hand") {
  Eigen::MatrixXd theta = Eigen::MatrixXd::Constant(1, 1, 0.7);
  Eigen::MatrixXd d(1, 2);
  d << 1.0, 1.0;
  const FisherBlocks blocks = fisher(theta, d, 0.01, 0.01);
  CHECK(blocks.theta_block(0, 0) == doctest::Approx(200.0).epsilon(1e-12));
  CHECK(blocks.d_block(0, 0) == doctest::Approx(100.0 + 49.0).epsilon(1e-12));
  CHECK(blocks.cross_blocks.size() == 2);
  CHECK(blocks.cross_blocks[0](0, 0) == doctest::Approx(70.0).epsilon(1e-12));
}

TEST_CASE("zero gains decouple the blocks") {
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(2, 2);
  TestRng rng(5);
  const Eigen::MatrixXd d = test_support::random_matrix(rng, 2, 6);
  const FisherBlocks blocks = fisher(theta, d, 0.02, 0.03);
  for (const auto& cross : blocks.cross_blocks)
    CHECK(cross.cwiseAbs().maxCoeff() == 0.0);
  CHECK((blocks.d_block - Eigen::MatrixXd::Identity(2, 2) / 0.02).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("Fisher information matches the finite-difference Hessian") {
  TestRng rng(11);
  for (int trial = 0; trial < 4; ++trial) {
    const Instance inst = random_instance(rng);
    const int n_y = inst.theta.rows(), n_d = inst.theta.cols();
    const Eigen::Index n = inst.d.cols();

    // noiseless data evaluated at the true parameters: the expected and the
    // realized Hessian coincide there
    const Eigen::MatrixXd x = inst.d;
    const Eigen::MatrixXd y = inst.theta * inst.d;
    Eigen::VectorXd at(n_y * n_d + n * n_d);
    for (int r = 0; r < n_y; ++r)
      for (int c = 0; c < n_d; ++c) at[r * n_d + c] = inst.theta(r, c);
    for (Eigen::Index t = 0; t < n; ++t)
      for (int r = 0; r < n_d; ++r) at[n_y * n_d + t * n_d + r] = inst.d(r, t);

    const auto f = [&](const Eigen::VectorXd& params) {
      return log_likelihood(params, n_y, n_d, x, y, inst.se2, inst.sw2);
    };
    const Eigen::MatrixXd fim = fisher(inst.theta, inst.d, inst.se2, inst.sw2).assemble();
    const Eigen::MatrixXd hess = fd_hessian(f, at, 1e-4);
    CHECK(relative_error(-hess, fim) < 1e-4);
  }
}

TEST_CASE("theta bound: hand value, zero-gain case, PD guard") {
  Eigen::MatrixXd theta = Eigen::MatrixXd::Constant(1, 1, 0.7);
  Eigen::MatrixXd d = Eigen::MatrixXd::Ones(1, 100);
  const Eigen::MatrixXd bound = ccrb_theta(theta, d, 0.01, 0.01);
  // (sw2 + se2 theta^2) / sum d^2 = 0.01 * 1.49 / 100
  CHECK(bound(0, 0) == doctest::Approx(1.49e-4).epsilon(1e-12));

  TestRng rng(7);
  const Eigen::MatrixXd d2 = test_support::random_matrix(rng, 2, 8);
  const Eigen::MatrixXd zero_bound = ccrb_theta(Eigen::MatrixXd::Zero(2, 2), d2, 0.5, 0.02);
  const Eigen::MatrixXd gram = d2 * d2.transpose();
  Eigen::MatrixXd classical = Eigen::MatrixXd::Zero(4, 4);
  classical.topLeftCorner(2, 2) = 0.02 * gram.inverse();
  classical.bottomRightCorner(2, 2) = 0.02 * gram.inverse();
  CHECK(relative_error(zero_bound, classical) < 1e-12);

  // degenerate design: repeated identical columns with n_d = 2
  Eigen::MatrixXd flat(2, 4);
  flat.row(0) << 1.0, 1.0, 1.0, 1.0;
  flat.row(1) << 2.0, 2.0, 2.0, 2.0;
  CHECK_THROWS_AS(ccrb_theta(Eigen::MatrixXd::Identity(2, 2), flat, 0.01, 0.01),
                  std::runtime_error);
}

TEST_CASE("theta bound converges to the classical linear-model bound") {
  TestRng rng(13);
  const Instance inst = random_instance(rng);
  const double se2 = 1e-12 * inst.sw2;
  const Eigen::MatrixXd bound = ccrb_theta(inst.theta, inst.d, se2, inst.sw2);

  const Eigen::Index n_y = inst.theta.rows();
  const Eigen::MatrixXd gram_inv = (inst.d * inst.d.transpose()).inverse();
  Eigen::MatrixXd classical =
      Eigen::MatrixXd::Zero(bound.rows(), bound.cols());
  for (Eigen::Index j = 0; j < n_y; ++j)
    classical.block(j * inst.theta.cols(), j * inst.theta.cols(), inst.theta.cols(),
                    inst.theta.cols()) = inst.sw2 * gram_inv;
  CHECK(relative_error(bound, classical) < 1e-6);
}

TEST_CASE("closed forms equal the Schur complements of the full information") {
  TestRng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Instance inst = random_instance(rng);
    const Eigen::MatrixXd fim = fisher(inst.theta, inst.d, inst.se2, inst.sw2).assemble();
    const Eigen::MatrixXd inverse = fim.ldlt().solve(
        Eigen::MatrixXd::Identity(fim.rows(), fim.cols()));

    const Eigen::Index p = inst.theta.size();
    const Eigen::Index n_d = inst.theta.cols();
    const Eigen::MatrixXd theta_bound =
        ccrb_theta(inst.theta, inst.d, inst.se2, inst.sw2);
    CHECK(relative_error(theta_bound, inverse.topLeftCorner(p, p)) < 1e-9);

    const Eigen::Index i = rng.below(static_cast<int>(inst.d.cols()));
    const Eigen::MatrixXd d_bound = ccrb_d(i, inst.theta, inst.d, inst.se2, inst.sw2);
    const Eigen::MatrixXd block = inverse.block(p + i * n_d, p + i * n_d, n_d, n_d);
    CHECK(relative_error(d_bound, block) < 1e-9);
  }
}

TEST_CASE("input bound: zero gains, vanishing input noise, symmetric design") {
  TestRng rng(19);
  const Eigen::MatrixXd d = test_support::random_matrix(rng, 2, 7);
  const Eigen::MatrixXd zero_gain = ccrb_d(0, Eigen::MatrixXd::Zero(2, 2), d, 0.03, 0.01);
  CHECK(relative_error(zero_gain, Eigen::MatrixXd(0.03 * Eigen::MatrixXd::Identity(2, 2))) <
        1e-12);

  const Eigen::MatrixXd tiny =
      ccrb_d(1, Eigen::MatrixXd::Identity(2, 2), d, 1e-13, 0.01);
  CHECK(tiny.cwiseAbs().maxCoeff() < 1e-12);

  // scalar all-ones design against the full-matrix inverse
  Eigen::MatrixXd theta = Eigen::MatrixXd::Constant(1, 1, 0.7);
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(1, 100);
  const Eigen::MatrixXd bound = ccrb_d(0, theta, ones, 0.01, 0.01);
  const Eigen::MatrixXd fim = fisher(theta, ones, 0.01, 0.01).assemble();
  const Eigen::MatrixXd inverse =
      fim.ldlt().solve(Eigen::MatrixXd::Identity(fim.rows(), fim.cols()));
  CHECK(std::abs(bound(0, 0) - inverse(1, 1)) < 1e-10 * inverse(1, 1));
}

TEST_CASE("theta bound is monotone in the output noise (Loewner order)") {
  TestRng rng(23);
  for (int trial = 0; trial < 6; ++trial) {
    const Instance inst = random_instance(rng);
    const Eigen::MatrixXd lo = ccrb_theta(inst.theta, inst.d, inst.se2, inst.sw2);
    const Eigen::MatrixXd hi = ccrb_theta(inst.theta, inst.d, inst.se2, 2.0 * inst.sw2);
    const Eigen::MatrixXd diff = hi - lo;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(diff);
    CHECK(solver.eigenvalues()[0] > -1e-12 * lo.norm());
  }
}

TEST_CASE("theta bound equals the factored Kronecker form") {
  // Independent reduction: sw2 (I - se2 S)^{-1} = sw2 I + se2 Theta Theta^T,
  // so the bound factors as kron(sw2 I + se2 Theta Theta^T, (D D^T)^{-1}).
  TestRng rng(29);
  for (int trial = 0; trial < 6; ++trial) {
    const Instance inst = random_instance(rng);
    const Eigen::MatrixXd bound = ccrb_theta(inst.theta, inst.d, inst.se2, inst.sw2);

    const Eigen::Index n_y = inst.theta.rows(), n_d = inst.theta.cols();
    const Eigen::MatrixXd left =
        inst.sw2 * Eigen::MatrixXd::Identity(n_y, n_y) +
        inst.se2 * inst.theta * inst.theta.transpose();
    const Eigen::MatrixXd right = (inst.d * inst.d.transpose()).inverse();
    Eigen::MatrixXd expected(n_y * n_d, n_y * n_d);
    for (Eigen::Index a = 0; a < n_y; ++a)
      for (Eigen::Index b = 0; b < n_y; ++b)
        expected.block(a * n_d, b * n_d, n_d, n_d) = left(a, b) * right;
    CHECK(relative_error(bound, expected) < 1e-9);
  }
}

TEST_CASE("full information matrix is positive definite on valid designs") {
  TestRng rng(31);
  const Instance inst = random_instance(rng);
  const Eigen::MatrixXd fim = fisher(inst.theta, inst.d, inst.se2, inst.sw2).assemble();
  CHECK((fim - fim.transpose()).cwiseAbs().maxCoeff() < 1e-12 * fim.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(fim);
  CHECK(solver.eigenvalues()[0] > 0.0);
}

TEST_CASE("variance preconditions are enforced") {
  Eigen::MatrixXd theta = Eigen::MatrixXd::Constant(1, 1, 0.7);
  Eigen::MatrixXd d = Eigen::MatrixXd::Ones(1, 4);
  CHECK_THROWS_WITH_AS(fisher(theta, d, 0.01, 0.0),
                       doctest::Contains("out of scope"), std::invalid_argument);
  CHECK_THROWS_AS(fisher(theta, d, 0.0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(ccrb_d(0, theta, Eigen::MatrixXd::Ones(1, 1), 0.01, 0.01),
                  std::invalid_argument);
}

TEST_CASE("per-submodel report carries bounds for each gain matrix") {
  std::vector<Eigen::MatrixXd> thetas(2, Eigen::MatrixXd(1, 1));
  thetas[0] << 0.7;
  thetas[1] << 0.8;
  ModelSpec spec(2, 1, 1, std::move(thetas), 0.01, 0.01, EpochSchedule::blocks({3, 3}));
  Eigen::MatrixXd d(1, 6);
  d << 1.0, -0.5, 0.25, 0.7, 1.0, -1.0;
  const std::vector<int> labels{0, 0, 0, 1, 1, 1};
  const CrbReport report = crb_report(spec, d, labels, -1);
  REQUIRE(report.per_submodel.size() == 2);
  CHECK(report.per_submodel[0].cov_d_bounds.size() == 3);
  CHECK(report.per_submodel[1].d_sample_indices == std::vector<Eigen::Index>{3, 4, 5});

  const double sum1 = 1.0 + 0.25 + 0.0625;
  CHECK(report.per_submodel[0].cov_theta_bound(0, 0) ==
        doctest::Approx(0.01 * 1.49 / sum1).epsilon(1e-10));
}
