#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bliss/core.hpp"
#include "bliss/estimate.hpp"
#include "bliss/gibbs.hpp"
#include "bliss/simulate.hpp"

namespace bliss {

// Whole-file atomic write: temp file in the target directory, then rename.
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// Shortest round-trip decimal form of a double.
std::string format_double(double value);

// 0x-prefixed 16-digit hex form of a dataset fingerprint.
std::string fingerprint_hex(std::uint64_t value);

// JSON with shared error handling; read_json_file reports the path and the
// parse position, write_json_file is atomic.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j, int indent = 2);

// Curve matrix files: header row of grid times, one comma-separated row per
// curve. All parse errors carry 1-based row/column locations.
void write_curves_csv(const std::filesystem::path& path, const TimeGrid& grid,
                      const Eigen::MatrixXd& curves);
std::pair<TimeGrid, Eigen::MatrixXd> read_curves_csv(
    const std::filesystem::path& path);

// Single curve on a grid (alpha, beta_l2): header row plus one value row.
struct GridCurve {
  std::vector<double> grid;
  std::vector<double> values;
};
void write_curve_csv(const std::filesystem::path& path, const TimeGrid& grid,
                     std::span<const double> values);
GridCurve read_curve_csv(const std::filesystem::path& path);

// Outcomes: one numeric value per line.
void write_outcomes(const std::filesystem::path& path,
                    std::span<const double> values);
std::vector<double> read_outcomes(const std::filesystem::path& path);

// Reads, cross-validates, and assembles the curve and outcome files.
FunctionalDataset ingest_dataset(const std::filesystem::path& curves_path,
                                 const std::filesystem::path& outcomes_path);

// Schema-versioned JSON artifacts. Every reader checks the schema tag and
// rejects files whose tag or structure does not match.
nlohmann::json chain_to_json(const Chain& chain);
Chain chain_from_json(const nlohmann::json& j);
void write_chain(const std::filesystem::path& path, const Chain& chain);
Chain read_chain(const std::filesystem::path& path);

nlohmann::json support_to_json(const SupportEstimate& estimate);
SupportEstimate support_from_json(const nlohmann::json& j);
void write_support(const std::filesystem::path& path,
                   const SupportEstimate& estimate);
SupportEstimate read_support(const std::filesystem::path& path);

// Stepwise summary with the grid and settings needed to re-evaluate it.
struct StepwiseArtifact {
  std::vector<double> grid;
  StepwiseResult result;
  SannConfig config;
};
nlohmann::json stepwise_to_json(const StepwiseArtifact& artifact);
StepwiseArtifact stepwise_from_json(const nlohmann::json& j);
void write_stepwise(const std::filesystem::path& path,
                    const StepwiseArtifact& artifact);
StepwiseArtifact read_stepwise(const std::filesystem::path& path);

nlohmann::json heatmap_to_json(const HeatMap& map);
HeatMap heatmap_from_json(const nlohmann::json& j);
void write_heatmap(const std::filesystem::path& path, const HeatMap& map);
HeatMap read_heatmap(const std::filesystem::path& path);

// Ground-truth record of a simulated dataset: generator settings plus the
// calibrated noise variance. The coefficient function itself is implied by
// the shape.
struct TruthRecord {
  SimConfig config;
  double sigma2 = 0.0;
};
nlohmann::json truth_to_json(const TruthRecord& truth);
TruthRecord truth_from_json(const nlohmann::json& j);
void write_truth(const std::filesystem::path& path, const TruthRecord& truth);
TruthRecord read_truth(const std::filesystem::path& path);

}  // namespace bliss
