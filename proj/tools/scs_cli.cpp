// Command line front end: batch identification of jump/piecewise linear
// models and the Monte Carlo benchmark harness around it.
//
// Exit codes: 0 success, 1 domain/runtime error, 2 usage error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "scs/bench.hpp"
#include "scs/crb.hpp"
#include "scs/estimation.hpp"
#include "scs/identifiability.hpp"
#include "scs/io.hpp"
#include "scs/model.hpp"

namespace {

namespace fs = std::filesystem;

/// Raised for input combinations that are wrong at the command level (exit 2)
/// rather than failures inside the pipeline (exit 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

scs::InputSource default_input_source(const scs::ModelSpec& spec, std::uint64_t input_seed,
                                      double box_lo, double box_hi) {
  if (const auto* board = std::get_if<scs::ChessboardPartition>(&spec.switching))
    return scs::UniformBoxInput{board->lo, board->hi, input_seed};
  return scs::UniformBoxInput{Eigen::VectorXd::Constant(spec.n_d, box_lo),
                              Eigen::VectorXd::Constant(spec.n_d, box_hi), input_seed};
}

struct GenerateArgs {
  std::string spec_path;
  std::string out_path;
  int horizon = 0;
  std::uint64_t seed = 0;
  std::uint64_t input_seed = 1;
  std::string input_csv;
  double box_lo = -1.0;
  double box_hi = 1.0;
};

void run_generate(const GenerateArgs& args) {
  const scs::ModelSpec spec = scs::read_model_spec_json(args.spec_path);
  scs::InputSource source =
      default_input_source(spec, args.input_seed, args.box_lo, args.box_hi);
  int horizon = args.horizon;
  if (!args.input_csv.empty()) {
    Eigen::MatrixXd d = scs::read_matrix_csv(args.input_csv);
    if (horizon == 0) horizon = static_cast<int>(d.cols());
    source = scs::FixedInput{std::move(d)};
  }
  if (const auto* epochs = std::get_if<scs::EpochSchedule>(&spec.switching);
      epochs && horizon == 0)
    horizon = static_cast<int>(epochs->labels.size());
  if (horizon <= 0) throw UsageError("--n is required for sampled inputs");

  const scs::Dataset ds = scs::generate(spec, horizon, source, args.seed);
  scs::write_dataset_csv(ds, args.out_path);
  std::cerr << "wrote " << args.out_path << " (" << ds.n() << " samples)\n";
}

struct IdentifyArgs {
  std::string data_path;
  std::string out_path;
  int k = 0;
  int n_d = 0;
  std::uint64_t seed = 0;
  int restarts = 20;
  int max_iterations = 300;
  double zero_tol = 1e-9;
  double svd_gap = 10.0;
  double cond_limit = 1e8;
  double noise_ratio = 0.0;  // 0 = unknown
  bool normalize_rows = false;
  std::string dump_w;
  std::string dump_singular_values;
};

void run_identify(const IdentifyArgs& args) {
  const scs::Dataset ds = scs::read_dataset_csv(args.data_path);
  if (ds.x.rows() != args.n_d)
    throw UsageError("data has " + std::to_string(ds.x.rows()) +
                     " input columns, --nd is " + std::to_string(args.n_d));
  if (ds.n() < static_cast<Eigen::Index>(args.k) * args.n_d)
    throw UsageError("dataset has " + std::to_string(ds.n()) +
                     " samples, need at least k * nd = " +
                     std::to_string(args.k * args.n_d));

  scs::IdentifyConfig cfg;
  cfg.scs.restarts = args.restarts;
  cfg.scs.max_iterations = args.max_iterations;
  cfg.scs.seed = args.seed;
  cfg.scs.zero_eigenvalue_tol = args.zero_tol;
  cfg.scs.svd_gap_threshold = args.svd_gap;
  cfg.scs.normalize_embedding_rows = args.normalize_rows;
  cfg.cond_limit = args.cond_limit;
  if (args.noise_ratio > 0.0) cfg.noise_ratio = args.noise_ratio;

  scs::ScsIntermediates stages;
  const bool want_dump = !args.dump_w.empty() || !args.dump_singular_values.empty();
  const scs::ModelEstimate est =
      scs::identify(ds, args.k, args.n_d, cfg, want_dump ? &stages : nullptr);

  if (!args.dump_w.empty()) scs::write_matrix_csv(stages.graph.w, args.dump_w);
  if (!args.dump_singular_values.empty())
    scs::write_matrix_csv(stages.subspace.singular_values.transpose(),
                          args.dump_singular_values);
  write_text_file(args.out_path, scs::estimate_to_json(est));
  std::cerr << "wrote " << args.out_path << "\n";
}

struct CheckIdentArgs {
  std::string inputs_path;
  double tol = 1e-8;
};

void run_check_ident(const CheckIdentArgs& args) {
  const scs::LabeledInputs inputs = scs::read_labeled_inputs_csv(args.inputs_path);
  if (!inputs.labels)
    throw UsageError(args.inputs_path + ": a label column is required");
  const int k = *std::max_element(inputs.labels->begin(), inputs.labels->end()) + 1;
  std::vector<std::vector<Eigen::Index>> members(k);
  for (Eigen::Index t = 0; t < inputs.d.cols(); ++t)
    members[(*inputs.labels)[t]].push_back(t);

  std::vector<Eigen::MatrixXd> blocks;
  for (int i = 0; i < k; ++i) {
    Eigen::MatrixXd block(inputs.d.rows(), static_cast<Eigen::Index>(members[i].size()));
    for (std::size_t c = 0; c < members[i].size(); ++c)
      block.col(c) = inputs.d.col(members[i][c]);
    blocks.push_back(std::move(block));
  }
  const scs::IdentifiabilityReport report = scs::check_identifiable(blocks, args.tol);
  std::cout << scs::identifiability_to_json(report);
}

struct CrbArgs {
  std::string spec_path;
  std::string inputs_path;
  std::string out_path;
  std::string format = "csv";
  int d_samples = 1;
};

void run_crb(const CrbArgs& args) {
  const scs::ModelSpec spec = scs::read_model_spec_json(args.spec_path);
  const scs::LabeledInputs inputs = scs::read_labeled_inputs_csv(args.inputs_path);

  std::vector<int> labels;
  if (inputs.labels) {
    labels = *inputs.labels;
  } else if (const auto* epochs = std::get_if<scs::EpochSchedule>(&spec.switching)) {
    if (static_cast<Eigen::Index>(epochs->labels.size()) != inputs.d.cols())
      throw UsageError("epoch schedule covers " + std::to_string(epochs->labels.size()) +
                       " samples, inputs file has " + std::to_string(inputs.d.cols()));
    labels = epochs->labels;
  } else {
    labels.resize(inputs.d.cols());
    for (Eigen::Index t = 0; t < inputs.d.cols(); ++t)
      labels[t] = scs::partition_cell(spec.switching, inputs.d.col(t));
  }

  const scs::CrbReport report = scs::crb_report(spec, inputs.d, labels, args.d_samples);
  const std::string text = args.format == "json" ? scs::crb_report_to_json(report)
                                                 : scs::crb_report_to_csv(report);
  if (args.out_path.empty())
    std::cout << text;
  else
    write_text_file(args.out_path, text);
}

struct BenchArgs {
  std::string scenario_path;
  std::string out_dir;
};

void run_bench(const BenchArgs& args) {
  const scs::Scenario sc = scs::read_scenario_json(args.scenario_path);
  const scs::BenchReport report = scs::run(sc);
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  scs::emit(report, scs::ReportFormat::Csv, dir / "report.csv");
  scs::emit(report, scs::ReportFormat::Json, dir / "report.json");
  scs::emit(report, scs::ReportFormat::SvgPlot, dir / "plots");
  std::cerr << "wrote " << (dir / "report.csv").string() << ", report.json and plots/ ("
            << report.rows.size() << " rows, " << report.wall_seconds << " s)\n";
}

struct DemoArgs {
  std::string name;
  std::string out_dir = "demo_out";
  bool noiseless = false;
  int runs = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void run_demo_noiseless(const scs::Scenario& sc) {
  const Eigen::MatrixXd design = scs::realize_input(sc.input, sc.spec.n_d, sc.horizon);
  const scs::Dataset ds =
      scs::generate(sc.spec, sc.horizon, scs::FixedInput{design}, sc.seed);
  scs::IdentifyConfig cfg;
  cfg.scs.restarts = sc.kmeans_restarts;
  cfg.scs.seed = sc.seed;
  const scs::ModelEstimate est = scs::identify(ds, sc.spec.k, sc.spec.n_d, cfg);
  const scs::Alignment aligned = scs::align_to_truth(est, sc.spec);

  double max_err = 0.0;
  for (int i = 0; i < sc.spec.k; ++i)
    max_err = std::max(max_err, (aligned.estimate.thetas_hat[i] - sc.spec.thetas[i])
                                    .cwiseAbs()
                                    .maxCoeff());
  const double miscls = scs::misclassification_ratio(aligned.estimate.labels.labels,
                                                     ds.truth->labels, sc.spec.k);

  std::string text = "{\n  \"thetas_hat\": [";
  for (int i = 0; i < sc.spec.k; ++i) {
    text += i ? ", [" : "[";
    const auto& th = aligned.estimate.thetas_hat[i];
    for (Eigen::Index e = 0; e < th.size(); ++e) {
      if (e) text += ", ";
      text += std::to_string(th(e / th.cols(), e % th.cols()));
    }
    text += "]";
  }
  text += "],\n  \"max_parameter_error\": " + std::to_string(max_err) +
          ",\n  \"misclassification\": " + std::to_string(miscls) + "\n}\n";
  std::cout << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "scs - identification of jump/piecewise linear models from noisy\n"
      "input-output data via spectral clustering on the signal subspace,\n"
      "with clairvoyant Cramer-Rao benchmarking."};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* cmd_gen = app.add_subcommand("generate", "Draw a dataset from a model spec");
  cmd_gen->add_option("spec", gen.spec_path, "model spec JSON")->required();
  cmd_gen->add_option("--n", gen.horizon, "number of samples (default: epoch length)");
  cmd_gen->add_option("--seed", gen.seed, "noise seed (default 0)");
  cmd_gen->add_option("--input-seed", gen.input_seed, "input design seed (default 1)");
  cmd_gen->add_option("--input-csv", gen.input_csv,
                      "fixed input design, headerless n_d x N CSV");
  cmd_gen->add_option("--box-lo", gen.box_lo, "sampler box lower bound (default -1)");
  cmd_gen->add_option("--box-hi", gen.box_hi, "sampler box upper bound (default 1)");
  cmd_gen->add_option("--out", gen.out_path, "output dataset CSV")->required();

  IdentifyArgs ident;
  auto* cmd_ident = app.add_subcommand("identify", "Run SCS identification on a dataset");
  cmd_ident->add_option("data", ident.data_path, "dataset CSV")->required();
  cmd_ident->add_option("--k", ident.k, "number of submodels")->required();
  cmd_ident->add_option("--nd", ident.n_d, "input dimension")->required();
  cmd_ident->add_option("--out", ident.out_path, "output estimate JSON")->required();
  cmd_ident->add_option("--seed", ident.seed, "k-means seed (default 0)");
  cmd_ident->add_option("--restarts", ident.restarts, "k-means restarts (default 20)");
  cmd_ident->add_option("--max-iter", ident.max_iterations,
                        "k-means iteration cap (default 300)");
  cmd_ident->add_option("--zero-tol", ident.zero_tol,
                        "zero-eigenvalue tolerance, relative (default 1e-9)");
  cmd_ident->add_option("--svd-gap", ident.svd_gap,
                        "singular-value gap ratio that triggers the rank "
                        "diagnostic (default 10)");
  cmd_ident->add_option("--cond-limit", ident.cond_limit,
                        "condition limit for the TLS input block (default 1e8)");
  cmd_ident->add_option("--noise-ratio", ident.noise_ratio,
                        "sigma_w^2 / sigma_e^2 when known (default: unknown)");
  cmd_ident->add_flag("--normalize-rows", ident.normalize_rows,
                      "normalize embedding rows before k-means");
  cmd_ident->add_option("--dump-w", ident.dump_w, "write the similarity matrix to CSV");
  cmd_ident->add_option("--dump-singular-values", ident.dump_singular_values,
                        "write the singular values to CSV");

  CheckIdentArgs check;
  auto* cmd_check = app.add_subcommand(
      "check-ident", "Identifiability of a labeled noiseless input design");
  cmd_check->add_option("inputs", check.inputs_path, "CSV with d_* and label columns")
      ->required();
  cmd_check->add_option("--tol", check.tol,
                        "zero-eigenvalue tolerance, relative (default 1e-8)");

  CrbArgs crb;
  auto* cmd_crb = app.add_subcommand("crb", "Clairvoyant Cramer-Rao bounds for a design");
  cmd_crb->add_option("spec", crb.spec_path, "model spec JSON")->required();
  cmd_crb->add_option("inputs", crb.inputs_path, "CSV with d_* (and optional label) columns")
      ->required();
  cmd_crb->add_option("--format", crb.format, "csv or json (default csv)")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd_crb->add_option("--out", crb.out_path, "output file (default stdout)");
  cmd_crb->add_option("--d-samples", crb.d_samples,
                      "input-bound samples per submodel, -1 = all (default 1)");

  BenchArgs bench;
  auto* cmd_bench = app.add_subcommand("bench", "Monte Carlo SNR sweep");
  cmd_bench->add_option("scenario", bench.scenario_path, "scenario JSON")->required();
  cmd_bench->add_option("--out", bench.out_dir, "output directory")->required();

  DemoArgs demo;
  auto* cmd_demo = app.add_subcommand("demo", "Run a built-in example end to end");
  cmd_demo->add_option("name", demo.name, "example1 (scalar bi-model) or example2 (chessboard)")
      ->required()
      ->check(CLI::IsMember({"example1", "example2"}));
  cmd_demo->add_flag("--noiseless", demo.noiseless,
                     "single noiseless identification, print recovered parameters");
  cmd_demo->add_option("--out", demo.out_dir, "output directory (default demo_out)");
  cmd_demo->add_option("--runs", demo.runs, "override Monte Carlo runs");
  auto* demo_seed = cmd_demo->add_option("--seed", demo.seed, "override scenario seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_gen->parsed()) run_generate(gen);
    if (cmd_ident->parsed()) run_identify(ident);
    if (cmd_check->parsed()) run_check_ident(check);
    if (cmd_crb->parsed()) run_crb(crb);
    if (cmd_bench->parsed()) run_bench(bench);
    if (cmd_demo->parsed()) {
      demo.seed_given = demo_seed->count() > 0;
      scs::Scenario sc = demo.name == "example1" ? scs::scalar_bimodel_scenario()
                                                 : scs::chessboard_scenario();
      if (demo.runs > 0) sc.runs = demo.runs;
      if (demo.seed_given) sc.seed = demo.seed;
      if (demo.noiseless) {
        run_demo_noiseless(sc);
      } else {
        const scs::BenchReport report = scs::run(sc);
        const fs::path dir(demo.out_dir);
        fs::create_directories(dir);
        scs::emit(report, scs::ReportFormat::Csv, dir / "report.csv");
        scs::emit(report, scs::ReportFormat::Json, dir / "report.json");
        scs::emit(report, scs::ReportFormat::SvgPlot, dir / "plots");
        std::cerr << "wrote " << (dir / "report.csv").string()
                  << ", report.json and plots/\n";
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
