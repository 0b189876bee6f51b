#include "scs/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "internal_util.hpp"

namespace scs {

namespace {

std::string dim_string(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

std::vector<int> label_counts(const std::vector<int>& labels, int k) {
  std::vector<int> counts(k, 0);
  for (int l : labels) {
    if (l < 0 || l >= k)
      throw std::invalid_argument("label " + std::to_string(l) +
                                  " outside [0, " + std::to_string(k) + ")");
    ++counts[l];
  }
  return counts;
}

}  // namespace

EpochSchedule EpochSchedule::blocks(const std::vector<int>& sizes) {
  EpochSchedule schedule;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] <= 0) throw std::invalid_argument("epoch block sizes must be positive");
    schedule.labels.insert(schedule.labels.end(), static_cast<std::size_t>(sizes[i]),
                           static_cast<int>(i));
  }
  return schedule;
}

ChessboardPartition ChessboardPartition::unit_box(int n_d, int resolution) {
  ChessboardPartition p;
  p.lo = Eigen::VectorXd::Constant(n_d, -1.0);
  p.hi = Eigen::VectorXd::Constant(n_d, 1.0);
  p.resolution = resolution;
  return p;
}

bool input_driven(const SwitchingRule& rule) {
  return !std::holds_alternative<EpochSchedule>(rule);
}

int partition_cell(const SwitchingRule& rule, const Eigen::VectorXd& d) {
  if (const auto* half = std::get_if<HalfSpacePartition>(&rule)) {
    if (half->normal.size() != d.size())
      throw std::invalid_argument("half-space normal has dimension " +
                                  std::to_string(half->normal.size()) +
                                  ", input has " + std::to_string(d.size()));
    return half->normal.dot(d) + half->offset >= 0.0 ? 0 : 1;
  }
  if (const auto* board = std::get_if<ChessboardPartition>(&rule)) {
    if (board->lo.size() != d.size())
      throw std::invalid_argument("chessboard box has dimension " +
                                  std::to_string(board->lo.size()) + ", input has " +
                                  std::to_string(d.size()));
    long parity = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double lo = board->lo[i];
      const double hi = board->hi[i];
      if (d[i] < lo || d[i] > hi)
        throw std::invalid_argument("input outside the partition domain (axis " +
                                    std::to_string(i) + ", value " +
                                    detail::format_double(d[i]) + ")");
      const double u = (d[i] - lo) / (hi - lo);
      const int cell = std::min(static_cast<int>(u * board->resolution),
                                board->resolution - 1);
      parity += cell;
    }
    return static_cast<int>(parity % 2);
  }
  throw std::invalid_argument("epoch-driven switching has no input partition");
}

ModelSpec::ModelSpec(int k_, int n_d_, int n_y_, std::vector<Eigen::MatrixXd> thetas_,
                     double sigma_e2_, double sigma_w2_, SwitchingRule switching_)
    : k(k_),
      n_d(n_d_),
      n_y(n_y_),
      thetas(std::move(thetas_)),
      sigma_e2(sigma_e2_),
      sigma_w2(sigma_w2_),
      switching(std::move(switching_)) {
  if (k < 1 || n_d < 1 || n_y < 1)
    throw std::invalid_argument("model dimensions must be positive");
  if (static_cast<int>(thetas.size()) != k)
    throw std::invalid_argument("expected " + std::to_string(k) + " gain matrices, got " +
                                std::to_string(thetas.size()));
  for (const auto& th : thetas)
    if (th.rows() != n_y || th.cols() != n_d)
      throw std::invalid_argument("gain matrix is " + dim_string(th.rows(), th.cols()) +
                                  ", expected " + dim_string(n_y, n_d));
  if (n_d + n_y < k * n_d)
    throw std::invalid_argument(
        "rank condition violated: n_d + n_y = " + std::to_string(n_d + n_y) +
        " < k * n_d = " + std::to_string(k * n_d));
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (thetas[i] == thetas[j])
        throw std::invalid_argument("submodels " + std::to_string(i + 1) + " and " +
                                    std::to_string(j + 1) +
                                    " have identical gain matrices");
  if (sigma_e2 < 0.0 || sigma_w2 < 0.0)
    throw std::invalid_argument("noise variances must be nonnegative");

  if (const auto* epochs = std::get_if<EpochSchedule>(&switching)) {
    if (epochs->labels.empty())
      throw std::invalid_argument("epoch schedule is empty");
    const auto counts = label_counts(epochs->labels, k);
    for (int i = 0; i < k; ++i)
      if (counts[i] < n_d)
        throw std::invalid_argument("submodel " + std::to_string(i + 1) + " receives " +
                                    std::to_string(counts[i]) + " samples, needs at least " +
                                    std::to_string(n_d));
  } else if (const auto* half = std::get_if<HalfSpacePartition>(&switching)) {
    if (k != 2) throw std::invalid_argument("half-space switching requires k = 2");
    if (half->normal.size() != n_d)
      throw std::invalid_argument("half-space normal must have dimension n_d");
    if (half->normal.isZero(0.0))
      throw std::invalid_argument("half-space normal must be nonzero");
  } else if (const auto* board = std::get_if<ChessboardPartition>(&switching)) {
    if (k != 2) throw std::invalid_argument("chessboard switching requires k = 2");
    if (board->lo.size() != n_d || board->hi.size() != n_d)
      throw std::invalid_argument("chessboard box must have dimension n_d");
    if (((board->hi - board->lo).array() <= 0.0).any())
      throw std::invalid_argument("chessboard box is empty along some axis");
    if (board->resolution < 1)
      throw std::invalid_argument("chessboard resolution must be at least 1");
  }
}

ModelSpec ModelSpec::with_variances(double se2, double sw2) const {
  ModelSpec copy = *this;
  if (se2 < 0.0 || sw2 < 0.0)
    throw std::invalid_argument("noise variances must be nonnegative");
  copy.sigma_e2 = se2;
  copy.sigma_w2 = sw2;
  return copy;
}

Eigen::MatrixXd realize_input(const InputSource& source, int n_d, int horizon) {
  if (const auto* fixed = std::get_if<FixedInput>(&source)) {
    if (fixed->d.rows() != n_d || fixed->d.cols() != horizon)
      throw std::invalid_argument("fixed input design is " +
                                  dim_string(fixed->d.rows(), fixed->d.cols()) +
                                  ", expected " + dim_string(n_d, horizon));
    return fixed->d;
  }
  const auto& box = std::get<UniformBoxInput>(source);
  if (box.lo.size() != n_d || box.hi.size() != n_d)
    throw std::invalid_argument("sampler box must have dimension n_d");
  if (((box.hi - box.lo).array() < 0.0).any())
    throw std::invalid_argument("sampler box is empty along some axis");
  detail::Rng rng(box.seed);
  Eigen::MatrixXd d(n_d, horizon);
  for (int n = 0; n < horizon; ++n)
    for (int i = 0; i < n_d; ++i)
      d(i, n) = box.lo[i] + rng.uniform01() * (box.hi[i] - box.lo[i]);
  return d;
}

Dataset generate(const ModelSpec& spec, int horizon, const InputSource& source,
                 std::uint64_t seed) {
  if (horizon < spec.k * spec.n_d)
    throw std::invalid_argument("horizon " + std::to_string(horizon) +
                                " too small: need at least k * n_d = " +
                                std::to_string(spec.k * spec.n_d) + " samples");

  Eigen::MatrixXd d = realize_input(source, spec.n_d, horizon);

  std::vector<int> labels;
  if (const auto* epochs = std::get_if<EpochSchedule>(&spec.switching)) {
    if (static_cast<int>(epochs->labels.size()) != horizon)
      throw std::invalid_argument("epoch schedule covers " +
                                  std::to_string(epochs->labels.size()) +
                                  " samples, horizon is " + std::to_string(horizon));
    labels = epochs->labels;
  } else {
    labels.resize(horizon);
    for (int n = 0; n < horizon; ++n) labels[n] = partition_cell(spec.switching, d.col(n));
    std::vector<int> counts(spec.k, 0);
    for (int l : labels) ++counts[l];
    for (int i = 0; i < spec.k; ++i)
      if (counts[i] < spec.n_d)
        throw std::invalid_argument("submodel " + std::to_string(i + 1) + " receives " +
                                    std::to_string(counts[i]) +
                                    " samples, needs at least " + std::to_string(spec.n_d));
  }

  detail::Rng rng(seed);
  const double std_e = std::sqrt(spec.sigma_e2);
  const double std_w = std::sqrt(spec.sigma_w2);

  Eigen::MatrixXd x(spec.n_d, horizon);
  for (int n = 0; n < horizon; ++n)
    for (int i = 0; i < spec.n_d; ++i) x(i, n) = d(i, n) + std_e * rng.normal();

  Eigen::MatrixXd y(spec.n_y, horizon);
  for (int n = 0; n < horizon; ++n) {
    y.col(n) = spec.thetas[labels[n]] * d.col(n);
    for (int i = 0; i < spec.n_y; ++i) y(i, n) += std_w * rng.normal();
  }

  Dataset ds;
  ds.x = std::move(x);
  ds.y = std::move(y);
  ds.truth = Truth{std::move(d), std::move(labels)};
  return ds;
}

StackedObservations stack(const Dataset& ds) {
  if (ds.x.cols() != ds.y.cols())
    throw std::invalid_argument("x and y have different sample counts");
  StackedObservations out;
  out.n_x = ds.x.rows();
  out.n_y = ds.y.rows();
  out.z.resize(out.n_x + out.n_y, ds.x.cols());
  out.z.topRows(out.n_x) = ds.x;
  out.z.bottomRows(out.n_y) = ds.y;
  return out;
}

double snr_db(const Dataset& ds, const ModelSpec& spec) {
  if (!ds.truth) throw std::invalid_argument("snr_db requires ground truth");
  const auto& truth = *ds.truth;
  if (truth.d.cols() != ds.n() || static_cast<Eigen::Index>(truth.labels.size()) != ds.n())
    throw std::invalid_argument("truth does not match the dataset horizon");

  double signal = 0.0;
  for (Eigen::Index n = 0; n < ds.n(); ++n) {
    const auto d_n = truth.d.col(n);
    signal += (spec.thetas[truth.labels[n]] * d_n).squaredNorm() + d_n.squaredNorm();
  }
  const double noise = static_cast<double>(ds.n()) *
                       (static_cast<double>(ds.x.rows()) * spec.sigma_e2 +
                        static_cast<double>(ds.y.rows()) * spec.sigma_w2);
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / noise);
}

}  // namespace scs
