#pragma once

#include <filesystem>
#include <string>

#include "scs/bench.hpp"
#include "scs/crb.hpp"
#include "scs/estimation.hpp"
#include "scs/identifiability.hpp"
#include "scs/model.hpp"

namespace scs {

// File formats. Matrices are serialized row-major; sample labels are 1-based
// in files and 0-based in memory. Parse errors name the file, line and field.

ModelSpec read_model_spec_json(const std::filesystem::path& path);
void write_model_spec_json(const ModelSpec& spec, const std::filesystem::path& path);

/// Dataset CSV: header `t,x_1..x_nx,y_1..y_ny[,d_1..d_nd,label]`, one row per
/// sample. The d_* / label columns are present exactly when truth is.
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

/// Input columns (and labels when present) from any CSV in the dataset
/// layout that carries d_* columns; x_*/y_* columns are ignored.
struct LabeledInputs {
  Eigen::MatrixXd d;
  std::optional<std::vector<int>> labels;
};
LabeledInputs read_labeled_inputs_csv(const std::filesystem::path& path);

Scenario read_scenario_json(const std::filesystem::path& path);

std::string estimate_to_json(const ModelEstimate& est);
std::string identifiability_to_json(const IdentifiabilityReport& report,
                                    const std::string& laplacian_variant = "unnormalized");

std::string crb_report_to_csv(const CrbReport& report);
std::string crb_report_to_json(const CrbReport& report);

/// Headerless numeric CSV, one matrix row per line (inspection dumps, raw
/// input designs).
void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

}  // namespace scs
