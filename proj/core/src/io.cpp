#include "scs/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "internal_util.hpp"

namespace scs {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
using detail::format_double;

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& message) {
  throw std::runtime_error(path.string() + ": " + message);
}

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t line,
                            const std::string& message) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + message);
}

json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path, e.what());
  }
}

void reject_unknown_keys(const json& obj, const std::filesystem::path& path,
                         const std::string& context,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return item.key() == k;
        }) == allowed.end())
      fail(path, context + ": unknown key '" + item.key() + "'");
  }
}

const json& require_key(const json& obj, const std::filesystem::path& path,
                        const std::string& context, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path, context + ": missing key '" + std::string(key) + "'");
  return *it;
}

double as_number(const json& v, const std::filesystem::path& path,
                 const std::string& field) {
  if (!v.is_number()) fail(path, "field '" + field + "' must be a number");
  return v.get<double>();
}

Eigen::VectorXd as_vector(const json& v, const std::filesystem::path& path,
                          const std::string& field) {
  if (!v.is_array()) fail(path, "field '" + field + "' must be an array");
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = as_number(v[i], path, field);
  return out;
}

SwitchingRule switching_from_json(const json& sw, const std::filesystem::path& path) {
  if (!sw.is_object()) fail(path, "field 'switching' must be an object");
  const std::string type =
      require_key(sw, path, "switching", "type").get<std::string>();
  if (type == "epoch") {
    reject_unknown_keys(sw, path, "switching", {"type", "labels"});
    EpochSchedule epochs;
    const json& labels = require_key(sw, path, "switching", "labels");
    if (!labels.is_array()) fail(path, "field 'switching.labels' must be an array");
    for (const auto& l : labels) {
      if (!l.is_number_integer()) fail(path, "field 'switching.labels' must hold integers");
      const int value = l.get<int>();
      if (value < 1) fail(path, "field 'switching.labels' must be 1-based submodel indices");
      epochs.labels.push_back(value - 1);
    }
    return epochs;
  }
  if (type == "epoch_blocks") {
    reject_unknown_keys(sw, path, "switching", {"type", "sizes"});
    const json& sizes = require_key(sw, path, "switching", "sizes");
    if (!sizes.is_array()) fail(path, "field 'switching.sizes' must be an array");
    std::vector<int> block_sizes;
    for (const auto& s : sizes) block_sizes.push_back(s.get<int>());
    return EpochSchedule::blocks(block_sizes);
  }
  if (type == "halfspace") {
    reject_unknown_keys(sw, path, "switching", {"type", "normal", "offset"});
    HalfSpacePartition half;
    half.normal = as_vector(require_key(sw, path, "switching", "normal"), path,
                            "switching.normal");
    if (sw.contains("offset")) half.offset = as_number(sw["offset"], path, "switching.offset");
    return half;
  }
  if (type == "chessboard") {
    reject_unknown_keys(sw, path, "switching", {"type", "lo", "hi", "resolution"});
    ChessboardPartition board;
    board.lo = as_vector(require_key(sw, path, "switching", "lo"), path, "switching.lo");
    board.hi = as_vector(require_key(sw, path, "switching", "hi"), path, "switching.hi");
    if (sw.contains("resolution")) board.resolution = sw["resolution"].get<int>();
    return board;
  }
  fail(path, "switching type '" + type +
                 "' unknown (expected epoch, epoch_blocks, halfspace or chessboard)");
}

ordered_json switching_to_json(const SwitchingRule& rule) {
  ordered_json out;
  if (const auto* epochs = std::get_if<EpochSchedule>(&rule)) {
    out["type"] = "epoch";
    ordered_json labels = ordered_json::array();
    for (int l : epochs->labels) labels.push_back(l + 1);
    out["labels"] = std::move(labels);
  } else if (const auto* half = std::get_if<HalfSpacePartition>(&rule)) {
    out["type"] = "halfspace";
    out["normal"] = std::vector<double>(half->normal.data(),
                                        half->normal.data() + half->normal.size());
    out["offset"] = half->offset;
  } else {
    const auto& board = std::get<ChessboardPartition>(rule);
    out["type"] = "chessboard";
    out["lo"] = std::vector<double>(board.lo.data(), board.lo.data() + board.lo.size());
    out["hi"] = std::vector<double>(board.hi.data(), board.hi.data() + board.hi.size());
    out["resolution"] = board.resolution;
  }
  return out;
}

std::vector<double> flat_row_major(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

using detail::csv_field;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

double parse_double_field(const std::string& text, const std::filesystem::path& path,
                          std::size_t line, const std::string& field) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end)
    fail_line(path, line, "field '" + field + "': cannot parse '" + text + "' as a number");
  return value;
}

int parse_int_field(const std::string& text, const std::filesystem::path& path,
                    std::size_t line, const std::string& field) {
  int value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end)
    fail_line(path, line, "field '" + field + "': cannot parse '" + text + "' as an integer");
  return value;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // raw fields, one entry per line
};

CsvTable read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open file");
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (line_no == 1) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size())
        fail_line(path, line_no,
                  "expected " + std::to_string(table.header.size()) + " fields, got " +
                      std::to_string(fields.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) fail(path, "file is empty");
  return table;
}

/// Index of the contiguous run `prefix_1 .. prefix_m` starting at `from`;
/// returns the count m (possibly zero).
int count_prefixed_columns(const std::vector<std::string>& header, std::size_t from,
                           const std::string& prefix) {
  int count = 0;
  for (std::size_t i = from; i < header.size(); ++i) {
    const std::string expected = prefix + "_" + std::to_string(count + 1);
    if (header[i] != expected) break;
    ++count;
  }
  return count;
}

struct DatasetColumns {
  int n_x = 0, n_y = 0, n_d = 0;
  bool has_label = false;
};

DatasetColumns parse_dataset_header(const std::vector<std::string>& header,
                                    const std::filesystem::path& path) {
  if (header.empty() || header[0] != "t")
    fail(path, "header must start with column 't'");
  DatasetColumns cols;
  std::size_t at = 1;
  cols.n_x = count_prefixed_columns(header, at, "x");
  at += cols.n_x;
  cols.n_y = count_prefixed_columns(header, at, "y");
  at += cols.n_y;
  cols.n_d = count_prefixed_columns(header, at, "d");
  at += cols.n_d;
  if (at < header.size() && header[at] == "label") {
    cols.has_label = true;
    ++at;
  }
  if (at != header.size())
    fail(path, "unexpected column '" + header[at] + "' in the header");
  return cols;
}

}  // namespace

ModelSpec read_model_spec_json(const std::filesystem::path& path) {
  const json doc = parse_json_file(path);
  if (!doc.is_object()) fail(path, "top level must be an object");
  reject_unknown_keys(doc, path, "model spec",
                      {"k", "n_d", "n_y", "thetas", "sigma_e2", "sigma_w2", "switching"});
  const int k = require_key(doc, path, "model spec", "k").get<int>();
  const int n_d = require_key(doc, path, "model spec", "n_d").get<int>();
  const int n_y = require_key(doc, path, "model spec", "n_y").get<int>();
  const json& thetas_json = require_key(doc, path, "model spec", "thetas");
  if (!thetas_json.is_array()) fail(path, "field 'thetas' must be an array");

  std::vector<Eigen::MatrixXd> thetas;
  for (std::size_t i = 0; i < thetas_json.size(); ++i) {
    const std::string field = "thetas[" + std::to_string(i) + "]";
    const Eigen::VectorXd flat = as_vector(thetas_json[i], path, field);
    if (flat.size() != static_cast<Eigen::Index>(n_y) * n_d)
      fail(path, "field '" + field + "' has " + std::to_string(flat.size()) +
                     " entries, expected n_y * n_d = " + std::to_string(n_y * n_d));
    Eigen::MatrixXd theta(n_y, n_d);
    for (int r = 0; r < n_y; ++r)
      for (int c = 0; c < n_d; ++c) theta(r, c) = flat[r * n_d + c];
    thetas.push_back(std::move(theta));
  }

  const double se2 = as_number(require_key(doc, path, "model spec", "sigma_e2"), path, "sigma_e2");
  const double sw2 = as_number(require_key(doc, path, "model spec", "sigma_w2"), path, "sigma_w2");
  SwitchingRule rule = switching_from_json(require_key(doc, path, "model spec", "switching"), path);
  try {
    return ModelSpec(k, n_d, n_y, std::move(thetas), se2, sw2, std::move(rule));
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
}

void write_model_spec_json(const ModelSpec& spec, const std::filesystem::path& path) {
  ordered_json doc;
  doc["k"] = spec.k;
  doc["n_d"] = spec.n_d;
  doc["n_y"] = spec.n_y;
  doc["thetas"] = ordered_json::array();
  for (const auto& theta : spec.thetas) doc["thetas"].push_back(flat_row_major(theta));
  doc["sigma_e2"] = spec.sigma_e2;
  doc["sigma_w2"] = spec.sigma_w2;
  doc["switching"] = switching_to_json(spec.switching);

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open file for writing");
  out << doc.dump(2) << "\n";
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv_table(path);
  const DatasetColumns cols = parse_dataset_header(table.header, path);
  if (cols.n_x == 0 || cols.n_y == 0)
    fail(path, "dataset requires x_* and y_* columns");
  if ((cols.n_d > 0) != cols.has_label)
    fail(path, "d_* columns and the label column must appear together");

  const Eigen::Index n = static_cast<Eigen::Index>(table.rows.size());
  if (n == 0) fail(path, "no data rows");
  Dataset ds;
  ds.x.resize(cols.n_x, n);
  ds.y.resize(cols.n_y, n);
  if (cols.n_d > 0) ds.truth = Truth{Eigen::MatrixXd(cols.n_d, n), std::vector<int>(n)};

  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& fields = table.rows[r];
    const std::size_t line = r + 2;
    std::size_t at = 1;  // skip t
    for (int i = 0; i < cols.n_x; ++i, ++at)
      ds.x(i, r) = parse_double_field(fields[at], path, line, table.header[at]);
    for (int i = 0; i < cols.n_y; ++i, ++at)
      ds.y(i, r) = parse_double_field(fields[at], path, line, table.header[at]);
    if (cols.n_d > 0) {
      for (int i = 0; i < cols.n_d; ++i, ++at)
        ds.truth->d(i, r) = parse_double_field(fields[at], path, line, table.header[at]);
      const int label = parse_int_field(fields[at], path, line, "label");
      if (label < 1) fail_line(path, line, "field 'label': must be a 1-based submodel index");
      ds.truth->labels[r] = label - 1;
    }
  }
  return ds;
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open file for writing");

  std::string header = "t";
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) header += ",x_" + std::to_string(i + 1);
  for (Eigen::Index i = 0; i < ds.y.rows(); ++i) header += ",y_" + std::to_string(i + 1);
  if (ds.truth) {
    for (Eigen::Index i = 0; i < ds.truth->d.rows(); ++i)
      header += ",d_" + std::to_string(i + 1);
    header += ",label";
  }
  out << header << "\n";

  for (Eigen::Index t = 0; t < ds.n(); ++t) {
    std::string row = std::to_string(t + 1);
    for (Eigen::Index i = 0; i < ds.x.rows(); ++i) row += "," + format_double(ds.x(i, t));
    for (Eigen::Index i = 0; i < ds.y.rows(); ++i) row += "," + format_double(ds.y(i, t));
    if (ds.truth) {
      for (Eigen::Index i = 0; i < ds.truth->d.rows(); ++i)
        row += "," + format_double(ds.truth->d(i, t));
      row += "," + std::to_string(ds.truth->labels[t] + 1);
    }
    out << row << "\n";
  }
  if (!out) fail(path, "write failed");
}

LabeledInputs read_labeled_inputs_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv_table(path);
  const DatasetColumns cols = parse_dataset_header(table.header, path);
  if (cols.n_d == 0) fail(path, "no d_* columns found");

  const Eigen::Index n = static_cast<Eigen::Index>(table.rows.size());
  if (n == 0) fail(path, "no data rows");
  LabeledInputs out;
  out.d.resize(cols.n_d, n);
  if (cols.has_label) out.labels = std::vector<int>(n);

  const std::size_t d_start = 1 + cols.n_x + cols.n_y;
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& fields = table.rows[r];
    const std::size_t line = r + 2;
    for (int i = 0; i < cols.n_d; ++i)
      out.d(i, r) =
          parse_double_field(fields[d_start + i], path, line, table.header[d_start + i]);
    if (cols.has_label) {
      const int label = parse_int_field(fields[d_start + cols.n_d], path, line, "label");
      if (label < 1) fail_line(path, line, "field 'label': must be a 1-based submodel index");
      (*out.labels)[r] = label - 1;
    }
  }
  return out;
}

Scenario read_scenario_json(const std::filesystem::path& path) {
  const json doc = parse_json_file(path);
  if (!doc.is_object()) fail(path, "top level must be an object");
  reject_unknown_keys(doc, path, "scenario",
                      {"spec", "input", "horizon", "snr_grid_db", "runs", "algorithms",
                       "seed", "variance_ratio", "kmeans_restarts"});

  const json& spec_json = require_key(doc, path, "scenario", "spec");
  if (!spec_json.is_object()) fail(path, "field 'spec' must be an object");
  // Reuse the model-spec reader through a temporary in-memory roundtrip would
  // lose error context; validate inline instead.
  reject_unknown_keys(spec_json, path, "spec",
                      {"k", "n_d", "n_y", "thetas", "sigma_e2", "sigma_w2", "switching"});
  const int k = require_key(spec_json, path, "spec", "k").get<int>();
  const int n_d = require_key(spec_json, path, "spec", "n_d").get<int>();
  const int n_y = require_key(spec_json, path, "spec", "n_y").get<int>();
  std::vector<Eigen::MatrixXd> thetas;
  const json& thetas_json = require_key(spec_json, path, "spec", "thetas");
  if (!thetas_json.is_array()) fail(path, "field 'spec.thetas' must be an array");
  for (std::size_t i = 0; i < thetas_json.size(); ++i) {
    const Eigen::VectorXd flat =
        as_vector(thetas_json[i], path, "spec.thetas[" + std::to_string(i) + "]");
    if (flat.size() != static_cast<Eigen::Index>(n_y) * n_d)
      fail(path, "field 'spec.thetas[" + std::to_string(i) + "]' has wrong length");
    Eigen::MatrixXd theta(n_y, n_d);
    for (int r = 0; r < n_y; ++r)
      for (int c = 0; c < n_d; ++c) theta(r, c) = flat[r * n_d + c];
    thetas.push_back(std::move(theta));
  }
  const double se2 =
      as_number(require_key(spec_json, path, "spec", "sigma_e2"), path, "spec.sigma_e2");
  const double sw2 =
      as_number(require_key(spec_json, path, "spec", "sigma_w2"), path, "spec.sigma_w2");
  SwitchingRule rule =
      switching_from_json(require_key(spec_json, path, "spec", "switching"), path);

  const json& input_json = require_key(doc, path, "scenario", "input");
  if (!input_json.is_object()) fail(path, "field 'input' must be an object");
  const std::string input_type =
      require_key(input_json, path, "input", "type").get<std::string>();

  InputSource input = UniformBoxInput{};
  int horizon = -1;
  if (input_type == "uniform") {
    reject_unknown_keys(input_json, path, "input", {"type", "lo", "hi", "seed"});
    UniformBoxInput box;
    box.lo = as_vector(require_key(input_json, path, "input", "lo"), path, "input.lo");
    box.hi = as_vector(require_key(input_json, path, "input", "hi"), path, "input.hi");
    if (input_json.contains("seed")) box.seed = input_json["seed"].get<std::uint64_t>();
    input = std::move(box);
    horizon = require_key(doc, path, "scenario", "horizon").get<int>();
  } else if (input_type == "matrix") {
    reject_unknown_keys(input_json, path, "input", {"type", "data"});
    const json& data = require_key(input_json, path, "input", "data");
    if (!data.is_array() || data.empty()) fail(path, "field 'input.data' must be a nonempty array of rows");
    const std::size_t rows = data.size();
    const Eigen::VectorXd first = as_vector(data[0], path, "input.data[0]");
    Eigen::MatrixXd m(rows, first.size());
    m.row(0) = first;
    for (std::size_t r = 1; r < rows; ++r) {
      const Eigen::VectorXd row =
          as_vector(data[r], path, "input.data[" + std::to_string(r) + "]");
      if (row.size() != m.cols()) fail(path, "field 'input.data' rows have different lengths");
      m.row(static_cast<Eigen::Index>(r)) = row;
    }
    input = FixedInput{std::move(m)};
    horizon = doc.contains("horizon") ? doc["horizon"].get<int>()
                                      : static_cast<int>(std::get<FixedInput>(input).d.cols());
  } else {
    fail(path, "input type '" + input_type + "' unknown (expected uniform or matrix)");
  }

  ModelSpec spec = [&] {
    try {
      return ModelSpec(k, n_d, n_y, std::move(thetas), se2, sw2, std::move(rule));
    } catch (const std::invalid_argument& e) {
      fail(path, e.what());
    }
  }();
  Scenario sc(std::move(spec), std::move(input), horizon);

  const json& grid = require_key(doc, path, "scenario", "snr_grid_db");
  if (!grid.is_array()) fail(path, "field 'snr_grid_db' must be an array");
  for (const auto& g : grid) {
    if (g.is_string() && g.get<std::string>() == "inf")
      sc.snr_grid_db.push_back(std::numeric_limits<double>::infinity());
    else
      sc.snr_grid_db.push_back(as_number(g, path, "snr_grid_db"));
  }
  if (doc.contains("runs")) sc.runs = doc["runs"].get<int>();
  if (doc.contains("algorithms")) {
    sc.algorithms.clear();
    for (const auto& a : doc["algorithms"]) {
      try {
        sc.algorithms.push_back(algorithm_from_name(a.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        fail(path, std::string("field 'algorithms': ") + e.what());
      }
    }
  }
  if (doc.contains("seed")) sc.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("variance_ratio"))
    sc.variance_ratio = as_number(doc["variance_ratio"], path, "variance_ratio");
  if (doc.contains("kmeans_restarts")) sc.kmeans_restarts = doc["kmeans_restarts"].get<int>();
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  return sc;
}

std::string estimate_to_json(const ModelEstimate& est) {
  ordered_json doc;
  doc["k"] = est.labels.k;
  doc["n_y"] = est.thetas_hat.empty() ? 0 : est.thetas_hat[0].rows();
  doc["n_d"] = est.thetas_hat.empty() ? 0 : est.thetas_hat[0].cols();
  doc["thetas_hat"] = ordered_json::array();
  for (const auto& theta : est.thetas_hat) doc["thetas_hat"].push_back(flat_row_major(theta));
  doc["residuals"] = est.residuals;
  ordered_json labels = ordered_json::array();
  for (int l : est.labels.labels) labels.push_back(l + 1);
  doc["labels"] = std::move(labels);
  doc["d_hat"] = ordered_json::array();
  for (Eigen::Index r = 0; r < est.d_hat.rows(); ++r) {
    std::vector<double> row(est.d_hat.cols());
    for (Eigen::Index c = 0; c < est.d_hat.cols(); ++c) row[c] = est.d_hat(r, c);
    doc["d_hat"].push_back(std::move(row));
  }
  const auto& diag = est.labels.diagnostics;
  doc["diagnostics"]["eigen_gap"] = diag.eigen_gap;
  doc["diagnostics"]["cluster_sizes"] = diag.cluster_sizes;
  doc["diagnostics"]["isolated_vertices"] = diag.isolated_vertices;
  doc["diagnostics"]["svd_gap_ratio"] = diag.svd_gap_ratio;
  doc["diagnostics"]["weak_svd_gap"] = diag.weak_svd_gap;
  doc["diagnostics"]["kmeans_objective"] = diag.kmeans_objective;
  return doc.dump(2) + "\n";
}

std::string identifiability_to_json(const IdentifiabilityReport& report,
                                    const std::string& laplacian_variant) {
  ordered_json doc;
  doc["identifiable"] = report.identifiable;
  doc["tolerance"] = report.tolerance;
  doc["laplacian"] = laplacian_variant;
  doc["per_submodel"] = ordered_json::array();
  for (std::size_t i = 0; i < report.per_submodel.size(); ++i) {
    ordered_json sub;
    sub["submodel"] = i + 1;
    sub["zero_multiplicity"] = report.per_submodel[i].zero_multiplicity;
    sub["smallest_eigenvalues"] = report.per_submodel[i].smallest_eigenvalues;
    doc["per_submodel"].push_back(std::move(sub));
  }
  return doc.dump(2) + "\n";
}

std::string crb_report_to_csv(const CrbReport& report) {
  std::string out = "submodel,parameter,value\n";
  for (std::size_t i = 0; i < report.per_submodel.size(); ++i) {
    const auto& sub = report.per_submodel[i];
    const Eigen::Index p = sub.cov_theta_bound.rows();
    for (Eigen::Index e = 0; e < p; ++e) {
      const std::string name = "theta[" + std::to_string(e / report.n_d) + "," +
                               std::to_string(e % report.n_d) + "]";
      out += std::to_string(i + 1) + "," + csv_field(name) + "," +
             format_double(sub.cov_theta_bound(e, e)) + "\n";
    }
    for (std::size_t s = 0; s < sub.cov_d_bounds.size(); ++s) {
      for (Eigen::Index j = 0; j < sub.cov_d_bounds[s].rows(); ++j) {
        const std::string name = "d[" + std::to_string(sub.d_sample_indices[s] + 1) +
                                 "][" + std::to_string(j) + "]";
        out += std::to_string(i + 1) + "," + csv_field(name) + "," +
               format_double(sub.cov_d_bounds[s](j, j)) + "\n";
      }
    }
  }
  return out;
}

std::string crb_report_to_json(const CrbReport& report) {
  ordered_json doc;
  doc["sigma_e2"] = report.sigma_e2;
  doc["sigma_w2"] = report.sigma_w2;
  doc["per_submodel"] = ordered_json::array();
  for (std::size_t i = 0; i < report.per_submodel.size(); ++i) {
    const auto& sub = report.per_submodel[i];
    ordered_json j;
    j["submodel"] = i + 1;
    j["cov_theta_bound"] = flat_row_major(sub.cov_theta_bound);
    j["cov_theta_diag"] = flat_row_major(sub.cov_theta_bound.diagonal());
    j["d_bounds"] = ordered_json::array();
    for (std::size_t s = 0; s < sub.cov_d_bounds.size(); ++s) {
      ordered_json db;
      db["t"] = sub.d_sample_indices[s] + 1;
      db["cov_d_bound"] = flat_row_major(sub.cov_d_bounds[s]);
      db["cov_d_diag"] = flat_row_major(sub.cov_d_bounds[s].diagonal());
      j["d_bounds"].push_back(std::move(db));
    }
    doc["per_submodel"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open file for writing");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::string row;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) row += ',';
      row += format_double(m(r, c));
    }
    out << row << "\n";
  }
  if (!out) fail(path, "write failed");
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open file");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    std::vector<double> row;
    for (std::size_t c = 0; c < fields.size(); ++c)
      row.push_back(parse_double_field(fields[c], path, line_no,
                                       "column " + std::to_string(c + 1)));
    if (!rows.empty() && row.size() != rows[0].size())
      fail_line(path, line_no, "rows have different lengths");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(path, "file is empty");
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

}  // namespace scs
