#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "scs/estimation.hpp"
#include "scs/io.hpp"
#include "scs/model.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "scs_test_cli";
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << contents;
}

CliResult run_cli(const std::string& args) {
  const fs::path dir = work_dir();
  const fs::path out_path = dir / "stdout.txt";
  const fs::path err_path = dir / "stderr.txt";
  const std::string command = std::string(SCS_CLI_PATH) + " " + args + " > " +
                              out_path.string() + " 2> " + err_path.string();
  const int status = std::system(command.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = read_file(out_path);
  result.err = read_file(err_path);
  return result;
}

const char* kExample1Spec = R"({
  "k": 2,
  "n_d": 1,
  "n_y": 1,
  "thetas": [[0.7], [0.8]],
  "sigma_e2": 0.0,
  "sigma_w2": 0.0,
  "switching": {"type": "epoch_blocks", "sizes": [200, 200]}
})";

}  // namespace

TEST_CASE("generate then identify recovers the spec, noiseless") {
  const fs::path dir = work_dir();
  write_file(dir / "spec.json", kExample1Spec);

  const CliResult gen = run_cli("generate " + (dir / "spec.json").string() +
                                " --seed 3 --input-seed 5 --out " +
                                (dir / "data.csv").string());
  REQUIRE(gen.exit_code == 0);

  const CliResult ident = run_cli("identify " + (dir / "data.csv").string() +
                                  " --k 2 --nd 1 --out " + (dir / "estimate.json").string() +
                                  " --dump-w " + (dir / "w.csv").string() +
                                  " --dump-singular-values " + (dir / "sv.csv").string());
  REQUIRE(ident.exit_code == 0);

  const std::string estimate = read_file(dir / "estimate.json");
  // order of the recovered submodels is arbitrary; both gains must appear
  const bool has_07 = estimate.find("0.7") != std::string::npos;
  const bool has_08 = estimate.find("0.8") != std::string::npos;
  CHECK(has_07);
  CHECK(has_08);
  CHECK(fs::exists(dir / "w.csv"));
  CHECK(fs::exists(dir / "sv.csv"));

  // compare numerically through the library readers
  const scs::ModelSpec spec = scs::read_model_spec_json(dir / "spec.json");
  const scs::Dataset ds = scs::read_dataset_csv(dir / "data.csv");
  const scs::ModelEstimate est = scs::identify(ds, 2, 1);
  const scs::Alignment aligned = scs::align_to_truth(est, spec);
  CHECK(aligned.parameter_distance < 1e-16);
}

TEST_CASE("identify rejects datasets smaller than k * nd at usage level") {
  const fs::path dir = work_dir();
  write_file(dir / "tiny.csv", "t,x_1,y_1\n1,1.0,0.7\n");
  const CliResult res = run_cli("identify " + (dir / "tiny.csv").string() +
                                " --k 2 --nd 1 --out " + (dir / "e.json").string());
  CHECK(res.exit_code == 2);
  CHECK(res.err.find("usage error") != std::string::npos);
}

TEST_CASE("demo example1 --noiseless prints the recovered gains") {
  const CliResult res = run_cli("demo example1 --noiseless");
  REQUIRE(res.exit_code == 0);
  CHECK(res.out.find("0.7") != std::string::npos);
  CHECK(res.out.find("0.8") != std::string::npos);
  CHECK(res.out.find("\"misclassification\": 0.0") != std::string::npos);
}

TEST_CASE("subcommands are idempotent and do not touch their inputs") {
  const fs::path dir = work_dir();
  write_file(dir / "spec_idem.json", kExample1Spec);
  const std::string spec_before = read_file(dir / "spec_idem.json");

  const std::string base = "generate " + (dir / "spec_idem.json").string() +
                           " --seed 11 --input-seed 4 --out ";
  REQUIRE(run_cli(base + (dir / "a.csv").string()).exit_code == 0);
  REQUIRE(run_cli(base + (dir / "b.csv").string()).exit_code == 0);
  CHECK(read_file(dir / "a.csv") == read_file(dir / "b.csv"));
  CHECK(read_file(dir / "spec_idem.json") == spec_before);
}

TEST_CASE("check-ident flags the orthogonal two-direction design") {
  const fs::path dir = work_dir();
  std::string csv = "t,d_1,d_2,label\n";
  int t = 1;
  for (int i = 0; i < 3; ++i) csv += std::to_string(t++) + ",1,0,1\n";
  for (int i = 0; i < 3; ++i) csv += std::to_string(t++) + ",0,1,1\n";
  write_file(dir / "orth.csv", csv);

  const CliResult res = run_cli("check-ident " + (dir / "orth.csv").string());
  REQUIRE(res.exit_code == 0);
  CHECK(res.out.find("\"identifiable\": false") != std::string::npos);
  CHECK(res.out.find("\"zero_multiplicity\": 2") != std::string::npos);
  CHECK(res.out.find("\"laplacian\": \"unnormalized\"") != std::string::npos);
}

TEST_CASE("crb subcommand emits one row per parameter entry") {
  const fs::path dir = work_dir();
  write_file(dir / "crb_spec.json", R"({
  "k": 2,
  "n_d": 1,
  "n_y": 1,
  "thetas": [[0.7], [0.8]],
  "sigma_e2": 0.01,
  "sigma_w2": 0.01,
  "switching": {"type": "epoch_blocks", "sizes": [3, 3]}
})");

  std::string csv = "t,d_1,label\n";
  for (int t = 1; t <= 6; ++t)
    csv += std::to_string(t) + "," + std::to_string(0.1 * t) + "," +
           (t <= 3 ? std::string("1") : std::string("2")) + "\n";
  write_file(dir / "inputs.csv", csv);

  const CliResult res =
      run_cli("crb " + (dir / "crb_spec.json").string() + " " +
              (dir / "inputs.csv").string());
  REQUIRE(res.exit_code == 0);
  CHECK(res.out.find("submodel,parameter,value") != std::string::npos);
  CHECK(res.out.find("\"theta[0,0]\"") != std::string::npos);
  CHECK(res.out.find("d[1][0]") != std::string::npos);

  const CliResult json = run_cli("crb " + (dir / "crb_spec.json").string() + " " +
                                 (dir / "inputs.csv").string() + " --format json");
  REQUIRE(json.exit_code == 0);
  CHECK(json.out.find("cov_theta_diag") != std::string::npos);

  // without a label column the epoch schedule supplies the grouping
  std::string unlabeled = "t,d_1\n";
  for (int t = 1; t <= 6; ++t)
    unlabeled += std::to_string(t) + "," + std::to_string(0.1 * t) + "\n";
  write_file(dir / "inputs_nolabel.csv", unlabeled);
  const CliResult derived = run_cli("crb " + (dir / "crb_spec.json").string() + " " +
                                    (dir / "inputs_nolabel.csv").string());
  REQUIRE(derived.exit_code == 0);
  CHECK(derived.out == res.out);
}

TEST_CASE("malformed inputs name the file, line and field") {
  const fs::path dir = work_dir();
  write_file(dir / "bad.csv", "t,x_1,y_1\n1,1.0,0.7\n2,oops,0.8\n");
  const CliResult res = run_cli("identify " + (dir / "bad.csv").string() +
                                " --k 2 --nd 1 --out " + (dir / "x.json").string());
  CHECK(res.exit_code == 1);
  CHECK(res.err.find("bad.csv:3") != std::string::npos);
  CHECK(res.err.find("x_1") != std::string::npos);
  CHECK(res.err.find("oops") != std::string::npos);

  write_file(dir / "bad.json", "{\"k\": 2, \"unknown_field\": 1}");
  const CliResult res2 = run_cli("generate " + (dir / "bad.json").string() + " --out " +
                                 (dir / "x.csv").string());
  CHECK(res2.exit_code == 1);
  CHECK(res2.err.find("bad.json") != std::string::npos);
  CHECK(res2.err.find("unknown_field") != std::string::npos);
}

TEST_CASE("usage errors for unknown flags and missing subcommands") {
  CHECK(run_cli("identify --nope").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("bench writes deterministic reports") {
  const fs::path dir = work_dir();
  const std::string scenario = R"({
  "spec": {
    "k": 2, "n_d": 1, "n_y": 1,
    "thetas": [[0.7], [0.8]],
    "sigma_e2": 0.0, "sigma_w2": 0.0,
    "switching": {"type": "epoch_blocks", "sizes": [50, 50]}
  },
  "input": {"type": "uniform", "lo": [-1.0], "hi": [1.0], "seed": 5},
  "horizon": 100,
  "snr_grid_db": [35.0, 45.0],
  "runs": 8,
  "algorithms": ["scs", "cml"],
  "seed": 21
})";
  write_file(dir / "scenario.json", scenario);

  const CliResult a =
      run_cli("bench " + (dir / "scenario.json").string() + " --out " + (dir / "o1").string());
  REQUIRE(a.exit_code == 0);
  const CliResult b =
      run_cli("bench " + (dir / "scenario.json").string() + " --out " + (dir / "o2").string());
  REQUIRE(b.exit_code == 0);
  CHECK(read_file(dir / "o1" / "report.csv") == read_file(dir / "o2" / "report.csv"));
  CHECK(fs::exists(dir / "o1" / "report.json"));
  CHECK(fs::exists(dir / "o1" / "plots" / "mse_theta1_0_0.svg"));

  const std::string csv = read_file(dir / "o1" / "report.csv");
  CHECK(csv.rfind("snr_db,algorithm,entry,mse,bias,miscls,ccrb,runs_ok,runs_failed", 0) == 0);
}
