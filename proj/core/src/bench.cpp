#include "scs/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "internal_util.hpp"
#include "scs/crb.hpp"
#include "scs/estimation.hpp"

namespace scs {

namespace {

constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kScsStream = 2;
constexpr std::uint64_t kNaiveStream = 3;

std::string entry_name(int submodel, int row, int col) {
  return "theta" + std::to_string(submodel + 1) + "[" + std::to_string(row) + "," +
         std::to_string(col) + "]";
}

std::string avg_entry_name(int submodel) {
  return "theta" + std::to_string(submodel + 1) + "[avg]";
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string sanitize_entry(const std::string& entry) {
  std::string out;
  for (char c : entry) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out += c;
    else if (!out.empty() && out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::string svg_plot(const std::string& entry, const std::vector<BenchRow>& rows,
                     const std::vector<std::string>& algorithms);

}  // namespace

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Scs: return "scs";
    case Algorithm::Cml: return "cml";
    case Algorithm::NaiveKmeans: return "naive_kmeans";
  }
  throw std::invalid_argument("unknown algorithm");
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "scs") return Algorithm::Scs;
  if (name == "cml") return Algorithm::Cml;
  if (name == "naive_kmeans") return Algorithm::NaiveKmeans;
  throw std::invalid_argument("unknown algorithm '" + name +
                              "' (expected scs, cml or naive_kmeans)");
}

Scenario::Scenario(ModelSpec spec_, InputSource input_, int horizon_)
    : spec(std::move(spec_)), input(std::move(input_)), horizon(horizon_) {}

void Scenario::validate() const {
  if (horizon < spec.k * spec.n_d)
    throw std::invalid_argument("scenario horizon too small");
  if (snr_grid_db.empty()) throw std::invalid_argument("SNR grid is empty");
  for (std::size_t i = 1; i < snr_grid_db.size(); ++i)
    if (!(snr_grid_db[i] > snr_grid_db[i - 1]))
      throw std::invalid_argument("SNR grid must be strictly ascending");
  if (runs < 1) throw std::invalid_argument("runs must be at least 1");
  if (algorithms.empty()) throw std::invalid_argument("no algorithms selected");
  if (!(variance_ratio > 0.0) || !std::isfinite(variance_ratio))
    throw std::invalid_argument("variance ratio must be positive and finite");
  if (kmeans_restarts < 1) throw std::invalid_argument("kmeans_restarts must be at least 1");
}

std::pair<double, double> snr_to_variances(double target_db, const ModelSpec& spec,
                                           const Eigen::MatrixXd& d,
                                           double variance_ratio) {
  if (std::isnan(target_db)) throw std::invalid_argument("SNR target is NaN");
  if (!(variance_ratio > 0.0) || !std::isfinite(variance_ratio))
    throw std::invalid_argument("variance ratio must be positive and finite");
  if (d.rows() != spec.n_d)
    throw std::invalid_argument("design does not match the model input dimension");
  if (target_db == std::numeric_limits<double>::infinity()) return {0.0, 0.0};

  double signal = 0.0;
  for (Eigen::Index t = 0; t < d.cols(); ++t) {
    int label = 0;
    if (const auto* epochs = std::get_if<EpochSchedule>(&spec.switching)) {
      if (static_cast<Eigen::Index>(epochs->labels.size()) != d.cols())
        throw std::invalid_argument("epoch schedule does not cover the design");
      label = epochs->labels[t];
    } else {
      label = partition_cell(spec.switching, d.col(t));
    }
    signal += (spec.thetas[label] * d.col(t)).squaredNorm() + d.col(t).squaredNorm();
  }
  if (!(signal > 0.0)) throw std::runtime_error("design has zero signal energy");

  // signal / (N (n_x se2 + n_y sw2)) = 10^(db/10) with se2 = ratio * sw2
  const double denom = static_cast<double>(d.cols()) *
                       (spec.n_d * variance_ratio + spec.n_y) *
                       std::pow(10.0, target_db / 10.0);
  const double sw2 = signal / denom;
  if (!(sw2 > 0.0) || !std::isfinite(sw2))
    throw std::runtime_error("SNR target yields a non-positive noise variance");
  return {variance_ratio * sw2, sw2};
}

LabelAssignment naive_kmeans_labels(const Dataset& ds, int k, std::uint64_t seed,
                                    int restarts) {
  const StackedObservations z = stack(ds);
  KmeansResult km = kmeans_rows(z.z.transpose(), k, restarts, 300, seed);
  LabelAssignment out;
  out.labels = std::move(km.labels);
  out.k = k;
  out.diagnostics.kmeans_objective = km.objective;
  out.diagnostics.cluster_sizes.assign(k, 0);
  for (int l : out.labels) ++out.diagnostics.cluster_sizes[l];
  return out;
}

double misclassification_ratio(const std::vector<int>& estimated,
                               const std::vector<int>& truth, int k) {
  if (estimated.size() != truth.size())
    throw std::invalid_argument("label sequences have different lengths");
  if (estimated.empty()) throw std::invalid_argument("label sequences are empty");
  if (k > 8) throw std::invalid_argument("misclassification enumerates permutations; k > 8 unsupported");

  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best_mismatch = estimated.size() + 1;
  do {
    std::size_t mismatch = 0;
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const int e = estimated[t];
      if (e < 0 || e >= k) throw std::invalid_argument("label outside [0, k)");
      if (perm[e] != truth[t]) ++mismatch;
    }
    best_mismatch = std::min(best_mismatch, mismatch);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best_mismatch) / static_cast<double>(truth.size());
}

BenchReport run(const Scenario& sc) {
  sc.validate();
  const auto t_start = std::chrono::steady_clock::now();

  const int k = sc.spec.k;
  const int n_d = sc.spec.n_d;
  const int n_y = sc.spec.n_y;
  const int per_model = n_y * n_d;
  const int n_entries = k * per_model;

  const Eigen::MatrixXd design = realize_input(sc.input, n_d, sc.horizon);
  const std::vector<int> truth_labels =
      generate(sc.spec.with_variances(0.0, 0.0), sc.horizon, FixedInput{design}, 0)
          .truth->labels;

  struct Cell {
    Eigen::ArrayXd sum_sq;
    Eigen::ArrayXd sum_err;
    double miscls = 0.0;
    int ok = 0;
    int failed = 0;
  };
  const std::size_t n_snr = sc.snr_grid_db.size();
  const std::size_t n_alg = sc.algorithms.size();
  std::vector<Cell> cells(n_snr * n_alg);
  for (auto& c : cells) {
    c.sum_sq = Eigen::ArrayXd::Zero(n_entries);
    c.sum_err = Eigen::ArrayXd::Zero(n_entries);
  }
  std::vector<Eigen::ArrayXd> ccrb_diag(n_snr);

  for (std::size_t s = 0; s < n_snr; ++s) {
    const auto [se2, sw2] =
        snr_to_variances(sc.snr_grid_db[s], sc.spec, design, sc.variance_ratio);
    const ModelSpec run_spec = sc.spec.with_variances(se2, sw2);

    // Bound diagonals for this cell; zero in the noiseless limit, NaN when
    // the design is too degenerate for the bound to exist.
    ccrb_diag[s] = Eigen::ArrayXd::Zero(n_entries);
    if (sw2 > 0.0) {
      try {
        const CrbReport bounds = crb_report(run_spec, design, truth_labels, 0);
        for (int i = 0; i < k; ++i)
          ccrb_diag[s].segment(i * per_model, per_model) =
              bounds.per_submodel[i].cov_theta_bound.diagonal().array();
      } catch (const std::exception&) {
        ccrb_diag[s].setConstant(std::numeric_limits<double>::quiet_NaN());
      }
    }

    for (int r = 0; r < sc.runs; ++r) {
      const std::uint64_t substream =
          detail::mix_seed(sc.seed, static_cast<std::uint64_t>(s),
                           static_cast<std::uint64_t>(r));
      const Dataset ds = generate(run_spec, sc.horizon, FixedInput{design},
                                  detail::mix_seed(substream, kNoiseStream));
      const std::optional<double> ratio =
          se2 > 0.0 ? std::optional<double>(sw2 / se2) : std::nullopt;

      for (std::size_t a = 0; a < n_alg; ++a) {
        Cell& cell = cells[s * n_alg + a];
        try {
          ModelEstimate est = [&] {
            switch (sc.algorithms[a]) {
              case Algorithm::Scs: {
                IdentifyConfig cfg;
                cfg.scs.restarts = sc.kmeans_restarts;
                cfg.scs.seed = detail::mix_seed(substream, kScsStream);
                cfg.noise_ratio = ratio;
                return identify(ds, k, n_d, cfg);
              }
              case Algorithm::Cml:
                return clairvoyant_ml(ds, run_spec);
              case Algorithm::NaiveKmeans: {
                LabelAssignment labels = naive_kmeans_labels(
                    ds, k, detail::mix_seed(substream, kNaiveStream), sc.kmeans_restarts);
                return identify_with_labels(ds, labels, ratio);
              }
            }
            throw std::logic_error("unreachable");
          }();

          const Alignment aligned = align_to_truth(est, run_spec);
          for (int i = 0; i < k; ++i) {
            const Eigen::MatrixXd err =
                aligned.estimate.thetas_hat[i] - sc.spec.thetas[i];
            for (int rr = 0; rr < n_y; ++rr)
              for (int cc = 0; cc < n_d; ++cc) {
                const int e = i * per_model + rr * n_d + cc;
                cell.sum_err[e] += err(rr, cc);
                cell.sum_sq[e] += err(rr, cc) * err(rr, cc);
              }
          }
          std::size_t mismatch = 0;
          for (std::size_t t = 0; t < truth_labels.size(); ++t)
            if (aligned.estimate.labels.labels[t] != truth_labels[t]) ++mismatch;
          cell.miscls += static_cast<double>(mismatch) / truth_labels.size();
          ++cell.ok;
        } catch (const std::exception&) {
          ++cell.failed;
        }
      }
    }
  }

  BenchReport report;
  report.runs = sc.runs;
  report.seed = sc.seed;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t s = 0; s < n_snr; ++s) {
    for (std::size_t a = 0; a < n_alg; ++a) {
      const Cell& cell = cells[s * n_alg + a];
      const std::string alg = algorithm_name(sc.algorithms[a]);
      const double miscls = cell.ok > 0 ? cell.miscls / cell.ok : nan;
      double mse_total = 0.0;
      double bias_total = 0.0;
      for (int i = 0; i < k; ++i) {
        for (int e = 0; e < per_model; ++e) {
          const int idx = i * per_model + e;
          BenchRow row;
          row.snr_db = sc.snr_grid_db[s];
          row.algorithm = alg;
          row.entry = entry_name(i, e / n_d, e % n_d);
          row.mse = cell.ok > 0 ? cell.sum_sq[idx] / cell.ok : nan;
          row.bias = cell.ok > 0 ? cell.sum_err[idx] / cell.ok : nan;
          row.miscls = miscls;
          row.ccrb = ccrb_diag[s][idx];
          row.runs_ok = cell.ok;
          row.runs_failed = cell.failed;
          report.rows.push_back(std::move(row));
          if (cell.ok > 0) {
            mse_total += cell.sum_sq[idx] / cell.ok;
            bias_total += std::abs(cell.sum_err[idx] / cell.ok);
          }
        }
        BenchRow avg;
        avg.snr_db = sc.snr_grid_db[s];
        avg.algorithm = alg;
        avg.entry = avg_entry_name(i);
        avg.mse = cell.ok > 0 ? mse_total / per_model : nan;
        avg.bias = cell.ok > 0 ? bias_total / per_model : nan;
        avg.miscls = miscls;
        avg.ccrb = ccrb_diag[s].segment(i * per_model, per_model).mean();
        avg.runs_ok = cell.ok;
        avg.runs_failed = cell.failed;
        report.rows.push_back(std::move(avg));
        mse_total = 0.0;
        bias_total = 0.0;
      }
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

void emit(const BenchReport& report, ReportFormat format,
          const std::filesystem::path& path) {
  using detail::format_double;
  if (format == ReportFormat::Csv) {
    std::string out = "snr_db,algorithm,entry,mse,bias,miscls,ccrb,runs_ok,runs_failed\n";
    for (const auto& row : report.rows) {
      out += format_double(row.snr_db) + ',' + row.algorithm + ',' +
             detail::csv_field(row.entry) + ',' + format_double(row.mse) + ',' +
             format_double(row.bias) + ',' + format_double(row.miscls) + ',' +
             format_double(row.ccrb) + ',' + std::to_string(row.runs_ok) + ',' +
             std::to_string(row.runs_failed) + '\n';
    }
    write_file(path, out);
    return;
  }
  if (format == ReportFormat::Json) {
    nlohmann::ordered_json doc;
    doc["runs"] = report.runs;
    doc["seed"] = report.seed;
    doc["wall_seconds"] = report.wall_seconds;
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : report.rows) {
      nlohmann::ordered_json j;
      j["snr_db"] = row.snr_db;
      j["algorithm"] = row.algorithm;
      j["entry"] = row.entry;
      j["mse"] = row.mse;
      j["bias"] = row.bias;
      j["miscls"] = row.miscls;
      j["ccrb"] = row.ccrb;
      j["runs_ok"] = row.runs_ok;
      j["runs_failed"] = row.runs_failed;
      j["valid"] = row.runs_failed <= row.runs_ok;
      doc["rows"].push_back(std::move(j));
    }
    write_file(path, doc.dump(2) + "\n");
    return;
  }

  // One SVG per parameter entry.
  std::filesystem::create_directories(path);
  std::vector<std::string> entries;
  std::vector<std::string> algorithms;
  for (const auto& row : report.rows) {
    if (std::find(entries.begin(), entries.end(), row.entry) == entries.end())
      entries.push_back(row.entry);
    if (std::find(algorithms.begin(), algorithms.end(), row.algorithm) == algorithms.end())
      algorithms.push_back(row.algorithm);
  }
  for (const auto& entry : entries) {
    std::vector<BenchRow> rows;
    for (const auto& row : report.rows)
      if (row.entry == entry) rows.push_back(row);
    write_file(path / ("mse_" + sanitize_entry(entry) + ".svg"),
               svg_plot(entry, rows, algorithms));
  }
}

namespace {

std::string svg_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string svg_plot(const std::string& entry, const std::vector<BenchRow>& rows,
                     const std::vector<std::string>& algorithms) {
  // log10(MSE) against SNR; the bound is drawn dashed. Only finite positive
  // values are plotted.
  const double width = 640, height = 480;
  const double ml = 70, mr = 20, mt = 40, mb = 50;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool have_point = false;
  auto consider = [&](double snr, double value) {
    if (!std::isfinite(snr) || !std::isfinite(value) || value <= 0.0) return;
    const double y = std::log10(value);
    if (!have_point) {
      x_min = x_max = snr;
      y_min = y_max = y;
      have_point = true;
    } else {
      x_min = std::min(x_min, snr);
      x_max = std::max(x_max, snr);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  };
  for (const auto& row : rows) {
    consider(row.snr_db, row.mse);
    consider(row.snr_db, row.ccrb);
  }
  if (!have_point) {
    x_min = 0;
    x_max = 1;
    y_min = -1;
    y_max = 1;
  }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  auto px = [&](double snr) {
    return ml + (snr - x_min) / (x_max - x_min) * (width - ml - mr);
  };
  auto py = [&](double logv) {
    return height - mb - (logv - y_min) / (y_max - y_min) * (height - mt - mb);
  };

  static const char* palette[] = {"#1f77b4", "#2ca02c", "#d62728", "#9467bd"};
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
         "viewBox=\"0 0 640 480\">\n";
  svg += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">MSE vs SNR - " + entry + "</text>\n";
  svg += "<line x1=\"" + svg_number(ml) + "\" y1=\"" + svg_number(height - mb) +
         "\" x2=\"" + svg_number(width - mr) + "\" y2=\"" + svg_number(height - mb) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + svg_number(ml) + "\" y1=\"" + svg_number(mt) + "\" x2=\"" +
         svg_number(ml) + "\" y2=\"" + svg_number(height - mb) + "\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + svg_number((ml + width - mr) / 2) + "\" y=\"" +
         svg_number(height - 14) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">SNR "
         "(dB)</text>\n";
  svg += "<text x=\"18\" y=\"" + svg_number((mt + height - mb) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 18 " + svg_number((mt + height - mb) / 2) +
         ")\">log10 MSE</text>\n";

  // axis ticks at the data SNRs and three y levels
  for (const auto& row : rows) {
    if (!std::isfinite(row.snr_db)) continue;
    const double x = px(row.snr_db);
    svg += "<line x1=\"" + svg_number(x) + "\" y1=\"" + svg_number(height - mb) +
           "\" x2=\"" + svg_number(x) + "\" y2=\"" + svg_number(height - mb + 5) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + svg_number(x) + "\" y=\"" + svg_number(height - mb + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
           svg_number(row.snr_db) + "</text>\n";
  }
  for (int i = 0; i <= 2; ++i) {
    const double logv = y_min + (y_max - y_min) * i / 2.0;
    const double y = py(logv);
    svg += "<line x1=\"" + svg_number(ml - 5) + "\" y1=\"" + svg_number(y) + "\" x2=\"" +
           svg_number(ml) + "\" y2=\"" + svg_number(y) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + svg_number(ml - 8) + "\" y=\"" + svg_number(y + 3) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
           svg_number(logv) + "</text>\n";
  }

  auto polyline = [&](const std::string& color, bool dashed, auto value_of) {
    std::string points;
    for (const auto& row : rows) {
      const double v = value_of(row);
      if (!std::isfinite(row.snr_db) || !std::isfinite(v) || v <= 0.0) continue;
      points += svg_number(px(row.snr_db)) + "," + svg_number(py(std::log10(v))) + " ";
    }
    if (points.empty()) return std::string();
    std::string line = "<polyline fill=\"none\" stroke=\"" + color + "\"";
    if (dashed) line += " stroke-dasharray=\"6 4\"";
    line += " stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    return line;
  };

  double legend_y = mt + 10;
  for (std::size_t a = 0; a < algorithms.size(); ++a) {
    const std::string color = palette[a % 4];
    const std::string name = algorithms[a];
    svg += polyline(color, false, [&](const BenchRow& r) {
      return r.algorithm == name ? r.mse : std::numeric_limits<double>::quiet_NaN();
    });
    svg += "<text x=\"" + svg_number(width - mr - 120) + "\" y=\"" + svg_number(legend_y) +
           "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" + color + "\">" +
           name + "</text>\n";
    legend_y += 14;
  }
  svg += polyline("#7f7f7f", true, [](const BenchRow& r) { return r.ccrb; });
  svg += "<text x=\"" + svg_number(width - mr - 120) + "\" y=\"" + svg_number(legend_y) +
         "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#7f7f7f\">ccrb</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace

Scenario scalar_bimodel_scenario() {
  std::vector<Eigen::MatrixXd> thetas(2, Eigen::MatrixXd(1, 1));
  thetas[0] << 0.7;
  thetas[1] << 0.8;
  ModelSpec spec(2, 1, 1, std::move(thetas), 0.0, 0.0,
                 EpochSchedule::blocks({200, 200}));
  UniformBoxInput input{Eigen::VectorXd::Constant(1, -1.0),
                        Eigen::VectorXd::Constant(1, 1.0), 0x5eed0001ULL};
  Scenario sc(std::move(spec), input, 400);
  sc.snr_grid_db = {20, 25, 30, 35, 40, 45, 50};
  sc.runs = 500;
  sc.algorithms = {Algorithm::Scs, Algorithm::Cml};
  sc.seed = 1;
  return sc;
}

Scenario chessboard_scenario() {
  std::vector<Eigen::MatrixXd> thetas(2, Eigen::MatrixXd(2, 2));
  thetas[0] << 0.7, 0.4, 0.5, 0.3;
  thetas[1] << 0.8, 0.9, 0.2, 0.5;
  ModelSpec spec(2, 2, 2, std::move(thetas), 0.0, 0.0,
                 ChessboardPartition::unit_box(2));
  UniformBoxInput input{Eigen::VectorXd::Constant(2, -1.0),
                        Eigen::VectorXd::Constant(2, 1.0), 0x5eed0002ULL};
  Scenario sc(std::move(spec), input, 1600);
  sc.snr_grid_db = {10, 15, 20, 25, 30};
  sc.runs = 100;
  sc.algorithms = {Algorithm::Scs, Algorithm::Cml};
  sc.seed = 2;
  return sc;
}

}  // namespace scs
