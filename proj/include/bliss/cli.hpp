#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "bliss/estimate.hpp"
#include "bliss/gibbs.hpp"
#include "bliss/io.hpp"
#include "bliss/model.hpp"
#include "bliss/simulate.hpp"

namespace bliss {

enum class Command { kSimulate, kFit, kSummarize, kEvaluate, kBench };

const char* to_string(Command command);

// Everything a run needs, resolved from flags or rebuilt from a manifest.
// Unset optionals fall back to the data-driven defaults at run time.
struct RunConfig {
  Command command = Command::kFit;

  std::filesystem::path curves_path;
  std::filesystem::path outcomes_path;
  std::filesystem::path chain_path;
  std::filesystem::path estimate_path;
  std::filesystem::path truth_path;
  std::filesystem::path config_path;
  std::filesystem::path out_dir;

  // fit / summarize
  int K = 3;
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> v;
  std::optional<double> v0;
  std::optional<double> eps;
  std::optional<int> K0;
  std::vector<double> gammas;  // empty: use the model default threshold
  std::int64_t iterations = 10000;
  std::optional<std::int64_t> burn_in;  // default: iterations / 2
  std::int64_t thin = 1;
  std::uint64_t seed = 0;
  int sann_iterations = 5000;
  double sann_te = 0.0;
  std::optional<std::uint64_t> sann_seed;  // default: derived from seed
  int bins = 512;

  // simulate
  SimConfig sim;
  std::optional<int> dataset;  // 1..27 preset

  // bench
  int threads = 0;  // 0: hardware concurrency
  // Inline benchmark configuration (used by manifest replays; takes
  // precedence over config_path).
  std::optional<nlohmann::json> bench_config;
};

// Basename of the support artifact for a threshold, e.g.
// "support_gamma_0.5.json".
std::string support_filename(double gamma);

// Writes curves.csv, y.csv, truth.json, manifest.json into cfg.out_dir.
void cmd_simulate(const RunConfig& cfg);

// Full pipeline: ingest, sample, summarize. Writes chain.json, alpha.csv,
// beta_l2.csv, one support file per threshold, stepwise.json, heatmap.json,
// manifest.json into cfg.out_dir.
void cmd_fit(const RunConfig& cfg);

// Recomputes all posterior summaries from an existing chain file.
void cmd_summarize(const RunConfig& cfg);

// Compares an estimate artifact against a truth record; returns the metric
// report (the CLI prints it to stdout).
nlohmann::json cmd_evaluate(const RunConfig& cfg);

// Runs every cell of the benchmark configuration (in parallel, per-cell
// seeds), writing results.json, results.csv, manifest.json.
void cmd_bench(const RunConfig& cfg);

// Dispatches on cfg.command (evaluate prints its report).
void dispatch(const RunConfig& cfg);

// Rebuilds the configuration echoed into a manifest, enabling bit-exact
// reruns. The caller may redirect out_dir before dispatching.
RunConfig config_from_manifest(const nlohmann::json& manifest);

// 2 for configuration errors, 3 for data errors, 4 for numerical failures,
// 1 otherwise.
int exit_code_for_error(const std::exception& e);

// Flag parsing plus dispatch plus error-to-exit-code mapping.
int run_cli(int argc, const char* const* argv);

}  // namespace bliss
