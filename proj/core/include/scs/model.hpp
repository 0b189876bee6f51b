#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace scs {

/// Exogenous switching: an explicit submodel label per time step.
struct EpochSchedule {
  std::vector<int> labels;  // values in [0, K)

  /// Block-sequential convenience: sizes[i] consecutive samples from submodel i.
  static EpochSchedule blocks(const std::vector<int>& sizes);
};

/// Input-driven switching on the sign of normal.d + offset (submodel 0 when >= 0).
struct HalfSpacePartition {
  Eigen::VectorXd normal;
  double offset = 0.0;
};

/// Input-driven switching on an alternating grid over the box [lo, hi]:
/// the parity of the summed per-axis cell indices selects submodel 0 or 1.
struct ChessboardPartition {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  int resolution = 4;  // cells per axis

  static ChessboardPartition unit_box(int n_d, int resolution = 4);
};

using SwitchingRule = std::variant<EpochSchedule, HalfSpacePartition, ChessboardPartition>;

/// True for partitions of the input domain (PLM), false for epoch schedules (JLM).
bool input_driven(const SwitchingRule& rule);

/// Submodel index selected by an input-driven rule at input d.
/// Throws std::invalid_argument for epoch schedules or inputs outside the domain.
int partition_cell(const SwitchingRule& rule, const Eigen::VectorXd& d);

/// Ground-truth hybrid model: K linear gain matrices, noise variances, and the
/// switching mechanism. Construction validates the rank condition
/// n_d + n_y >= k * n_d and rejects duplicate gain matrices.
struct ModelSpec {
  int k = 0;
  int n_d = 0;
  int n_y = 0;
  std::vector<Eigen::MatrixXd> thetas;  // K matrices, each n_y x n_d
  double sigma_e2 = 0.0;                // input noise variance
  double sigma_w2 = 0.0;                // output noise variance
  SwitchingRule switching;

  ModelSpec(int k, int n_d, int n_y, std::vector<Eigen::MatrixXd> thetas,
            double sigma_e2, double sigma_w2, SwitchingRule switching);

  /// Same model with different noise variances (used by SNR sweeps).
  ModelSpec with_variances(double se2, double sw2) const;
};

struct Truth {
  Eigen::MatrixXd d;        // n_d x N noiseless inputs
  std::vector<int> labels;  // values in [0, K)
};

/// Observed sequences plus optional ground truth.
struct Dataset {
  Eigen::MatrixXd x;  // n_x x N (n_x == n_d)
  Eigen::MatrixXd y;  // n_y x N
  std::optional<Truth> truth;

  Eigen::Index n() const { return x.cols(); }
};

/// Columns z_n = [x_n; y_n], time order preserved.
struct StackedObservations {
  Eigen::MatrixXd z;
  Eigen::Index n_x = 0;
  Eigen::Index n_y = 0;

  Eigen::Index n() const { return z.cols(); }
};

/// Fixed deterministic input design.
struct FixedInput {
  Eigen::MatrixXd d;  // n_d x N
};

/// Uniform sampler over the box [lo, hi], seeded independently of the noise.
struct UniformBoxInput {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  std::uint64_t seed = 0;
};

using InputSource = std::variant<FixedInput, UniformBoxInput>;

/// Materialize the input design as an n_d x horizon matrix.
Eigen::MatrixXd realize_input(const InputSource& source, int n_d, int horizon);

/// Draw a dataset: x_n = d_n + e_n, y_n = Theta_{label(n)} d_n + w_n with
/// e_n ~ N(0, sigma_e2 I), w_n ~ N(0, sigma_w2 I). The seed drives only the
/// noise; the input design carries its own seed. Identical arguments give a
/// bit-identical dataset. Truth is always populated.
Dataset generate(const ModelSpec& spec, int horizon, const InputSource& source,
                 std::uint64_t seed);

StackedObservations stack(const Dataset& ds);

/// Signal-to-noise ratio in dB:
/// 10 log10( sum_n (|Theta_{label(n)} d_n|^2 + |d_n|^2) / (N (n_x se2 + n_y sw2)) ).
/// Returns +infinity when both variances are zero. Requires ds.truth.
double snr_db(const Dataset& ds, const ModelSpec& spec);

}  // namespace scs
