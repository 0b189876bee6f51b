#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "scs/model.hpp"
#include "scs/subspace.hpp"
#include "test_support.hpp"

using namespace scs;
using test_support::TestRng;

namespace {

StackedObservations stacked(Eigen::MatrixXd z, Eigen::Index n_x) {
  StackedObservations out;
  out.n_x = n_x;
  out.n_y = z.rows() - n_x;
  out.z = std::move(z);
  return out;
}

Dataset noiseless_bimodel(int n1, int n2, std::uint64_t input_seed) {
  std::vector<Eigen::MatrixXd> thetas(2, Eigen::MatrixXd(1, 1));
  thetas[0] << 0.7;
  thetas[1] << 0.8;
  ModelSpec spec(2, 1, 1, std::move(thetas), 0.0, 0.0, EpochSchedule::blocks({n1, n2}));
  return generate(spec, n1 + n2, UniformBoxInput{Eigen::VectorXd::Constant(1, -1.0),
                                                 Eigen::VectorXd::Constant(1, 1.0),
                                                 input_seed}, 0);
}

}  // namespace

TEST_CASE("rank-1 matrix: sign convention forces the positive vector") {
  Eigen::MatrixXd z(2, 2);
  z << 1.0, 1.0, 0.7, 0.7;
  const SignalSubspace s = signal_subspace(stacked(z, 1), 1);
  REQUIRE(s.v.cols() == 1);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(s.v(0, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
  CHECK(s.v(1, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
}

TEST_CASE("noiseless scalar bi-model: V spans the input row space") {
  // Z = A D with A = [1 1; 0.7 0.8] and D = diag([1 1], [1 1]).
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 4);
  d(0, 0) = d(0, 1) = 1.0;
  d(1, 2) = d(1, 3) = 1.0;
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 1.0, 0.7, 0.8;
  const SignalSubspace s = signal_subspace(stacked(a * d, 1), 2);

  const Eigen::MatrixXd p_v = s.v * s.v.transpose();
  const Eigen::MatrixXd p_d =
      d.transpose() * (d * d.transpose()).fullPivLu().solve(d);
  CHECK((p_v - p_d).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("noiseless rank equals k * n_d") {
  // The scalar bi-model uses every stacked row, so check the boundary case
  // (all singular values positive) and a SIMO variant with slack (the extra
  // singular value vanishes).
  const Dataset ds = noiseless_bimodel(20, 20, 5);
  const SignalSubspace s = signal_subspace(stack(ds), 2);
  REQUIRE(s.singular_values.size() == 2);
  CHECK(s.singular_values[1] > 1e-10);

  std::vector<Eigen::MatrixXd> thetas(2, Eigen::MatrixXd(2, 1));
  thetas[0] << 0.7, 0.5;
  thetas[1] << 0.8, 0.1;
  ModelSpec simo(2, 1, 2, std::move(thetas), 0.0, 0.0, EpochSchedule::blocks({20, 20}));
  const Dataset ds2 = generate(simo, 40, UniformBoxInput{
      Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0), 6}, 0);
  const SignalSubspace s2 = signal_subspace(stack(ds2), 2);
  REQUIRE(s2.singular_values.size() == 3);
  CHECK(s2.singular_values[2] < 1e-10);
  CHECK(s2.singular_values[1] > 1e-6);
}

TEST_CASE("single-block similarity equals the forced projector") {
  // K = 1, D = [1 1]: Lambda = [[.5, .5], [.5, .5]].
  Eigen::MatrixXd z(2, 2);
  z << 1.0, 1.0, 0.7, 0.7;
  const SimilarityGraph w = similarity(signal_subspace(stacked(z, 1), 1));
  Eigen::MatrixXd expected(2, 2);
  expected << 0.5, 0.5, 0.5, 0.5;
  CHECK((w.w - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("block-sequential noiseless similarity is block diagonal") {
  const Dataset ds = noiseless_bimodel(30, 25, 7);
  const SimilarityGraph w = similarity(signal_subspace(stack(ds), 2));
  double cross_max = 0.0;
  for (int a = 0; a < 30; ++a)
    for (int b = 30; b < 55; ++b)
      cross_max = std::max(cross_max, w.w(a, b));
  CHECK(cross_max < 1e-10);
}

TEST_CASE("column permutation conjugates the similarity matrix") {
  const Dataset ds = noiseless_bimodel(12, 14, 9);
  const StackedObservations z = stack(ds);
  const Eigen::MatrixXd w0 = similarity(signal_subspace(z, 2)).w;

  TestRng rng(21);
  std::vector<int> perm(static_cast<std::size_t>(z.n()));
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  rng.shuffle(perm);

  StackedObservations zp = z;
  for (Eigen::Index c = 0; c < z.n(); ++c) zp.z.col(c) = z.z.col(perm[c]);
  const Eigen::MatrixXd wp = similarity(signal_subspace(zp, 2)).w;

  // column c of Zp came from column perm[c] of Z
  double max_diff = 0.0;
  for (Eigen::Index a = 0; a < z.n(); ++a)
    for (Eigen::Index b = 0; b < z.n(); ++b)
      max_diff = std::max(max_diff, std::abs(wp(a, b) - w0(perm[a], perm[b])));
  CHECK(max_diff < 1e-9);
}

TEST_CASE("theorem-1 block structure holds for random noiseless models") {
  TestRng rng(2024);
  for (int trial = 0; trial < 12; ++trial) {
    const int k = 2 + rng.below(2);
    const int n_d = 1 + rng.below(2);
    const int n_y = (k - 1) * n_d + rng.below(2);
    const int n = k * n_d * 4 + rng.below(20);
    const ModelSpec spec = test_support::random_epoch_spec(rng, k, n_d, n_y, n);
    const Eigen::MatrixXd d_input = test_support::random_matrix(rng, n_d, n);
    const Dataset ds = generate(spec, n, FixedInput{d_input}, 0);

    const SimilarityGraph w = similarity(signal_subspace(stack(ds), k * n_d));
    const Eigen::MatrixXd expected =
        test_support::theorem1_similarity(ds.truth->d, ds.truth->labels, k);
    CHECK((w.w - expected).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("noiseless V V^T is an orthogonal projector") {
  const Dataset ds = noiseless_bimodel(15, 18, 13);
  const SignalSubspace s = signal_subspace(stack(ds), 2);
  const Eigen::MatrixXd p = s.v * s.v.transpose();
  CHECK((p * p - p).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((p - p.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(p.trace() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK((s.v.transpose() * s.v - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <
        1e-10);
}

TEST_CASE("noiseless similarity entries live in [0, 1]") {
  const Dataset ds = noiseless_bimodel(10, 12, 17);
  const SimilarityGraph w = similarity(signal_subspace(stack(ds), 2));
  CHECK(w.w.minCoeff() >= 0.0);
  CHECK(w.w.maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("rank bounds are enforced, weak gaps only flagged") {
  Eigen::MatrixXd z(2, 3);
  z << 1.0, 2.0, 3.0, 0.5, 0.4, 0.3;
  CHECK_THROWS_AS(signal_subspace(stacked(z, 1), 3), std::invalid_argument);
  CHECK_THROWS_AS(signal_subspace(stacked(z, 1), 0), std::invalid_argument);

  // both singular values are comparable here, so a demanding threshold flags
  // the truncation at rank 1 but never fails it
  const SignalSubspace weak = signal_subspace(stacked(z, 1), 1, 1e9);
  CHECK(weak.weak_gap);
  CHECK(weak.gap_ratio > 1.0);
  const SignalSubspace full = signal_subspace(stacked(z, 1), 2);
  CHECK(full.gap_ratio == std::numeric_limits<double>::infinity());
  CHECK_FALSE(full.weak_gap);
}

TEST_CASE("zero observation columns get zero similarity to everything") {
  Dataset ds = noiseless_bimodel(10, 10, 19);
  ds.x.col(3).setZero();
  ds.y.col(3).setZero();
  const SimilarityGraph w = similarity(signal_subspace(stack(ds), 2));
  CHECK(w.w.row(3).maxCoeff() < 1e-12);
  CHECK(w.w.col(3).maxCoeff() < 1e-12);
}
