#include "bliss/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bliss/errors.hpp"
#include "bliss/rng.hpp"

namespace bliss {

const char* to_string(Command command) {
  switch (command) {
    case Command::kSimulate:
      return "simulate";
    case Command::kFit:
      return "fit";
    case Command::kSummarize:
      return "summarize";
    case Command::kEvaluate:
      return "evaluate";
    case Command::kBench:
      return "bench";
  }
  throw ConfigError("unknown command value");
}

std::string support_filename(double gamma) {
  return "support_gamma_" + format_double(gamma) + ".json";
}

namespace {

constexpr const char* kManifestSchema = "bliss/manifest/v1";
constexpr const char* kBenchSchema = "bliss/bench/v1";
constexpr const char* kEvaluationSchema = "bliss/evaluation/v1";

std::uint64_t default_sann_seed(std::uint64_t seed) {
  return seed ^ fnv1a64("stepwise");
}

// Fully resolved summary settings shared by fit and summarize.
struct Summaries {
  std::vector<double> gammas;
  SannConfig sann;
  int bins = 512;
};

Hyperparameters resolve_hyper(const RunConfig& cfg,
                              const FunctionalDataset& data) {
  Hyperparameters hp = default_hyperparameters(data, cfg.K);
  if (cfg.a) hp.a = *cfg.a;
  if (cfg.b) hp.b = *cfg.b;
  if (cfg.v) hp.v = *cfg.v;
  if (cfg.v0) hp.v0 = *cfg.v0;
  if (cfg.eps) hp.eps = *cfg.eps;
  if (cfg.K0) hp.K0 = *cfg.K0;
  validate(hp, data.grid());
  return hp;
}

Summaries resolve_summaries(const RunConfig& cfg, const Hyperparameters& hp,
                            std::uint64_t chain_seed) {
  Summaries s;
  s.gammas = cfg.gammas.empty() ? std::vector<double>{hp.gamma} : cfg.gammas;
  for (const double g : s.gammas)
    if (!(g > 0.0 && g < 1.0))
      throw ConfigError("gamma thresholds must lie in (0, 1)");
  if (cfg.bins < 1) throw ConfigError("bins must be positive");
  s.bins = cfg.bins;
  s.sann.iterations = cfg.sann_iterations;
  s.sann.te = cfg.sann_te;
  s.sann.max_pieces = hp.K0;
  s.sann.min_length = hp.eps;
  s.sann.seed =
      cfg.sann_seed ? *cfg.sann_seed : default_sann_seed(chain_seed);
  return s;
}

// Computes and writes alpha, supports, beta_l2, stepwise, heatmap; returns
// the artifact-name map for the manifest.
nlohmann::json write_summaries(const Chain& chain, const Summaries& s,
                               const std::filesystem::path& out) {
  const AlphaCurve alpha = posterior_alpha(chain);
  write_curve_csv(out / "alpha.csv", alpha.grid, alpha.values);
  nlohmann::json supports = nlohmann::json::array();
  for (const double g : s.gammas) {
    const std::string name = support_filename(g);
    write_support(out / name, support_estimate(alpha, g));
    supports.push_back(name);
  }
  const std::vector<double> target = beta_l2(chain);
  write_curve_csv(out / "beta_l2.csv", chain.grid, target);
  StepwiseArtifact stepwise;
  stepwise.grid = chain.grid.points();
  stepwise.config = s.sann;
  stepwise.result = stepwise_estimate(chain.grid, target, s.sann);
  write_stepwise(out / "stepwise.json", stepwise);
  write_heatmap(out / "heatmap.json", heatmap(chain, s.bins));
  return nlohmann::json{{"alpha", "alpha.csv"},
                        {"beta_l2", "beta_l2.csv"},
                        {"supports", std::move(supports)},
                        {"stepwise", "stepwise.json"},
                        {"heatmap", "heatmap.json"}};
}

nlohmann::json summary_options(const Summaries& s) {
  return nlohmann::json{{"gammas", s.gammas},
                        {"sann_iterations", s.sann.iterations},
                        {"sann_te", s.sann.te},
                        {"sann_seed", s.sann.seed},
                        {"bins", s.bins}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

nlohmann::json manifest_base(const RunConfig& cfg, double duration) {
  const auto now = std::chrono::system_clock::now();
  return nlohmann::json{
      {"schema", kManifestSchema},
      {"command", to_string(cfg.command)},
      {"rng", Rng::kAlgorithm},
      {"created_unix",
       std::chrono::duration_cast<std::chrono::seconds>(
           now.time_since_epoch())
           .count()},
      {"duration_seconds", duration},
      {"out_dir", cfg.out_dir.string()}};
}

}  // namespace

void cmd_simulate(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg.out_dir);
  const SimulatedData sim = generate(cfg.sim);
  write_curves_csv(cfg.out_dir / "curves.csv", sim.data.grid(),
                   sim.data.curves());
  const Eigen::VectorXd& y = sim.data.outcomes();
  write_outcomes(cfg.out_dir / "y.csv",
                 std::span<const double>(y.data(),
                                         static_cast<std::size_t>(y.size())));
  write_truth(cfg.out_dir / "truth.json", TruthRecord{cfg.sim, sim.sigma2});

  nlohmann::json manifest = manifest_base(cfg, seconds_since(t0));
  nlohmann::json options{{"shape", to_string(cfg.sim.shape)},
                         {"n", cfg.sim.n},
                         {"p", cfg.sim.p},
                         {"zeta", cfg.sim.zeta},
                         {"r", cfg.sim.r},
                         {"mu", cfg.sim.mu},
                         {"marginal_sd", cfg.sim.marginal_sd},
                         {"seed", cfg.sim.seed}};
  if (cfg.dataset) options["dataset"] = *cfg.dataset;
  manifest["options"] = std::move(options);
  manifest["artifacts"] = {{"curves", "curves.csv"},
                           {"outcomes", "y.csv"},
                           {"truth", "truth.json"}};
  write_json_file(cfg.out_dir / "manifest.json", manifest);
}

void cmd_fit(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg.out_dir);
  const FunctionalDataset data =
      ingest_dataset(cfg.curves_path, cfg.outcomes_path);
  const Hyperparameters hp = resolve_hyper(cfg, data);
  GibbsConfig gibbs;
  gibbs.iterations = cfg.iterations;
  gibbs.burn_in = cfg.burn_in ? *cfg.burn_in : cfg.iterations / 2;
  gibbs.thin = cfg.thin;
  gibbs.seed = cfg.seed;
  const Summaries s = resolve_summaries(cfg, hp, gibbs.seed);

  const Chain chain = run_gibbs(data, hp, gibbs);
  write_chain(cfg.out_dir / "chain.json", chain);
  nlohmann::json artifacts = write_summaries(chain, s, cfg.out_dir);
  artifacts["chain"] = "chain.json";

  nlohmann::json manifest = manifest_base(cfg, seconds_since(t0));
  manifest["inputs"] = {
      {"curves", cfg.curves_path.string()},
      {"outcomes", cfg.outcomes_path.string()},
      {"dataset_fingerprint", fingerprint_hex(data.fingerprint())}};
  nlohmann::json options{{"K", hp.K},
                         {"a", hp.a},
                         {"b", hp.b},
                         {"v", hp.v},
                         {"v0", hp.v0},
                         {"K0", hp.K0},
                         {"eps", hp.eps},
                         {"iterations", gibbs.iterations},
                         {"burn_in", gibbs.burn_in},
                         {"thin", gibbs.thin},
                         {"seed", gibbs.seed}};
  options.update(summary_options(s));
  manifest["options"] = std::move(options);
  manifest["artifacts"] = std::move(artifacts);
  write_json_file(cfg.out_dir / "manifest.json", manifest);
}

void cmd_summarize(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg.out_dir);
  const Chain chain = read_chain(cfg.chain_path);
  Hyperparameters hp = chain.hyper;
  if (cfg.K0) hp.K0 = *cfg.K0;
  if (cfg.eps) hp.eps = *cfg.eps;
  validate(hp, chain.grid);
  const Summaries s = resolve_summaries(cfg, hp, chain.config.seed);
  nlohmann::json artifacts = write_summaries(chain, s, cfg.out_dir);

  nlohmann::json manifest = manifest_base(cfg, seconds_since(t0));
  manifest["inputs"] = {{"chain", cfg.chain_path.string()}};
  nlohmann::json options{{"K0", hp.K0}, {"eps", hp.eps}};
  options.update(summary_options(s));
  manifest["options"] = std::move(options);
  manifest["artifacts"] = std::move(artifacts);
  write_json_file(cfg.out_dir / "manifest.json", manifest);
}

nlohmann::json cmd_evaluate(const RunConfig& cfg) {
  const TruthRecord truth = read_truth(cfg.truth_path);
  const TrueCoefficient coeff(truth.config.shape);
  nlohmann::json report{{"schema", kEvaluationSchema},
                        {"estimate", cfg.estimate_path.string()},
                        {"truth", cfg.truth_path.string()},
                        {"shape", to_string(truth.config.shape)}};

  const auto truth_values = [&coeff](const TimeGrid& grid) {
    std::vector<double> values(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) values[j] = coeff(grid[j]);
    return values;
  };

  const std::string ext = cfg.estimate_path.extension().string();
  if (ext == ".csv") {
    const GridCurve curve = read_curve_csv(cfg.estimate_path);
    const TimeGrid grid(curve.grid);
    report["l2_error"] = l2_error(grid, curve.values, truth_values(grid));
    return report;
  }
  if (ext != ".json")
    throw ConfigError(
        "estimate must be a .csv curve or a .json support/stepwise artifact");

  const nlohmann::json j = read_json_file(cfg.estimate_path);
  const std::string schema = j.value("schema", std::string{});
  if (schema == "bliss/support/v1") {
    const SupportEstimate est = support_from_json(j);
    const auto support = coeff.support();
    if (!support)
      throw ConfigError("support error is undefined: the " +
                        std::string(to_string(truth.config.shape)) +
                        " coefficient has no step support");
    report["gamma"] = est.gamma;
    report["support_error"] = support_error(est.set, *support);
    return report;
  }
  if (schema == "bliss/stepwise/v1") {
    const StepwiseArtifact artifact = stepwise_from_json(j);
    const TimeGrid grid(artifact.grid);
    std::vector<double> values(grid.size());
    for (std::size_t jj = 0; jj < grid.size(); ++jj)
      values[jj] = eval_disjoint(artifact.result.function, grid[jj]);
    report["l2_error"] = l2_error(grid, values, truth_values(grid));
    if (const auto support = coeff.support())
      report["support_error"] =
          support_error(support_of(artifact.result.function), *support);
    return report;
  }
  throw DataError("cannot evaluate an artifact with schema '" + schema + "'");
}

namespace {

struct BenchCell {
  std::string name;
  SimConfig sim;
  std::optional<int> dataset;
  int K = 3;
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> v;
  std::optional<double> v0;
  std::optional<double> eps;
  std::optional<int> K0;
  double gamma = 0.5;
  GibbsConfig gibbs;
  int sann_iterations = 5000;
  double sann_te = 0.0;
  std::optional<std::uint64_t> sann_seed;
};

BenchCell parse_cell(const nlohmann::json& j, std::size_t idx) {
  BenchCell cell;
  cell.name = j.value("name", "cell-" + std::to_string(idx + 1));
  if (j.contains("dataset")) {
    cell.dataset = j.at("dataset").get<int>();
    cell.sim = dataset_config(*cell.dataset);
  }
  if (j.contains("shape"))
    cell.sim.shape = parse_shape(j.at("shape").get<std::string>());
  if (j.contains("r")) cell.sim.r = j.at("r").get<double>();
  if (j.contains("zeta")) cell.sim.zeta = j.at("zeta").get<double>();
  if (j.contains("n")) cell.sim.n = j.at("n").get<int>();
  if (j.contains("p")) cell.sim.p = j.at("p").get<int>();
  if (j.contains("mu")) cell.sim.mu = j.at("mu").get<double>();
  if (j.contains("marginal_sd"))
    cell.sim.marginal_sd = j.at("marginal_sd").get<double>();
  cell.sim.seed =
      j.value("sim_seed", static_cast<std::uint64_t>(1000 + idx));
  cell.K = j.value("K", 3);
  if (j.contains("a")) cell.a = j.at("a").get<double>();
  if (j.contains("b")) cell.b = j.at("b").get<double>();
  if (j.contains("v")) cell.v = j.at("v").get<double>();
  if (j.contains("v0")) cell.v0 = j.at("v0").get<double>();
  if (j.contains("eps")) cell.eps = j.at("eps").get<double>();
  if (j.contains("K0")) cell.K0 = j.at("K0").get<int>();
  cell.gamma = j.value("gamma", 0.5);
  cell.gibbs.iterations = j.value("iterations", std::int64_t{10000});
  cell.gibbs.burn_in = j.contains("burn_in")
                           ? j.at("burn_in").get<std::int64_t>()
                           : cell.gibbs.iterations / 2;
  cell.gibbs.thin = j.value("thin", std::int64_t{1});
  cell.gibbs.seed =
      j.value("seed", static_cast<std::uint64_t>(2000 + idx));
  cell.sann_iterations = j.value("sann_iterations", 5000);
  cell.sann_te = j.value("sann_te", 0.0);
  if (j.contains("sann_seed"))
    cell.sann_seed = j.at("sann_seed").get<std::uint64_t>();
  return cell;
}

// One benchmark cell: simulate, fit, score against the known truth. Any
// failure becomes an error entry; other cells proceed.
nlohmann::json run_cell(const BenchCell& cell) {
  nlohmann::json r{{"name", cell.name},
                   {"shape", to_string(cell.sim.shape)},
                   {"r", cell.sim.r},
                   {"zeta", cell.sim.zeta},
                   {"n", cell.sim.n},
                   {"p", cell.sim.p},
                   {"K", cell.K},
                   {"iterations", cell.gibbs.iterations},
                   {"burn_in", cell.gibbs.burn_in},
                   {"thin", cell.gibbs.thin},
                   {"sim_seed", cell.sim.seed},
                   {"seed", cell.gibbs.seed},
                   {"gamma", cell.gamma}};
  if (cell.dataset) r["dataset"] = *cell.dataset;
  try {
    const SimulatedData sim = generate(cell.sim);
    const FunctionalDataset& data = sim.data;
    Hyperparameters hp = default_hyperparameters(data, cell.K);
    if (cell.a) hp.a = *cell.a;
    if (cell.b) hp.b = *cell.b;
    if (cell.v) hp.v = *cell.v;
    if (cell.v0) hp.v0 = *cell.v0;
    if (cell.eps) hp.eps = *cell.eps;
    if (cell.K0) hp.K0 = *cell.K0;
    validate(hp, data.grid());
    if (!(cell.gamma > 0.0 && cell.gamma < 1.0))
      throw ConfigError("gamma thresholds must lie in (0, 1)");

    const Chain chain = run_gibbs(data, hp, cell.gibbs);
    const AlphaCurve alpha = posterior_alpha(chain);
    const std::vector<double> target = beta_l2(chain);
    SannConfig sann;
    sann.iterations = cell.sann_iterations;
    sann.te = cell.sann_te;
    sann.max_pieces = hp.K0;
    sann.min_length = hp.eps;
    sann.seed = cell.sann_seed ? *cell.sann_seed
                               : default_sann_seed(cell.gibbs.seed);
    const StepwiseResult stepwise =
        stepwise_estimate(data.grid(), target, sann);

    const TimeGrid& grid = data.grid();
    std::vector<double> truth_vals(grid.size());
    std::vector<double> stepwise_vals(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      truth_vals[j] = sim.truth(grid[j]);
      stepwise_vals[j] = eval_disjoint(stepwise.function, grid[j]);
    }
    r["sigma2"] = sim.sigma2;
    r["l2_error_l2"] = l2_error(grid, target, truth_vals);
    r["l2_error_stepwise"] = l2_error(grid, stepwise_vals, truth_vals);
    if (const auto support = sim.truth.support()) {
      r["support_error_bayes"] =
          support_error(support_estimate(alpha, cell.gamma).set, *support);
      r["support_error_stepwise"] =
          support_error(support_of(stepwise.function), *support);
    } else {
      r["support_error_bayes"] = nullptr;
      r["support_error_stepwise"] = nullptr;
    }
    r["status"] = "ok";
    r["message"] = "";
  } catch (const std::exception& e) {
    r["status"] = "error";
    r["message"] = e.what();
  }
  return r;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (const char c : s) {
    if (c == '"') quoted += "\"\"";
    else quoted.push_back(c);
  }
  quoted.push_back('"');
  return quoted;
}

std::string csv_field(const nlohmann::json& r, const char* key) {
  if (!r.contains(key) || r.at(key).is_null()) return "";
  const nlohmann::json& v = r.at(key);
  if (v.is_string()) return csv_quote(v.get<std::string>());
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

constexpr const char* kBenchColumns[] = {
    "name",   "status",   "dataset", "shape",
    "r",      "zeta",     "n",       "p",
    "K",      "iterations", "burn_in", "thin",
    "sim_seed", "seed",   "gamma",   "sigma2",
    "support_error_bayes", "support_error_stepwise",
    "l2_error_l2", "l2_error_stepwise", "message"};

std::string bench_csv(const std::vector<nlohmann::json>& results) {
  std::string out;
  bool first = true;
  for (const char* col : kBenchColumns) {
    if (!first) out.push_back(',');
    out += col;
    first = false;
  }
  out.push_back('\n');
  for (const nlohmann::json& r : results) {
    first = true;
    for (const char* col : kBenchColumns) {
      if (!first) out.push_back(',');
      out += csv_field(r, col);
      first = false;
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace

void cmd_bench(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg.out_dir);
  const nlohmann::json config = cfg.bench_config
                                    ? *cfg.bench_config
                                    : read_json_file(cfg.config_path);
  std::vector<BenchCell> cells;
  int config_threads = 0;
  try {
    if (config.contains("threads"))
      config_threads = config.at("threads").get<int>();
    if (config.contains("cells")) {
      const auto& jc = config.at("cells");
      cells.reserve(jc.size());
      for (std::size_t i = 0; i < jc.size(); ++i)
        cells.push_back(parse_cell(jc.at(i), i));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed bench configuration: ") + e.what());
  }

  std::vector<nlohmann::json> results(cells.size());
  if (!cells.empty()) {
    int threads = cfg.threads > 0 ? cfg.threads : config_threads;
    if (threads <= 0) {
      const unsigned hw = std::thread::hardware_concurrency();
      threads = hw > 0 ? static_cast<int>(hw) : 1;
    }
    threads = std::min<int>(threads, static_cast<int>(cells.size()));
    threads = std::max(threads, 1);

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= cells.size()) break;
        results[i] = run_cell(cells[i]);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads) - 1);
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
  }

  nlohmann::json results_json{{"schema", kBenchSchema},
                              {"results", results}};
  write_json_file(cfg.out_dir / "results.json", results_json);
  write_text_file(cfg.out_dir / "results.csv", bench_csv(results));

  nlohmann::json manifest = manifest_base(cfg, seconds_since(t0));
  manifest["inputs"] = {{"config", cfg.config_path.string()}};
  manifest["options"] = config;
  manifest["artifacts"] = {{"results", "results.json"},
                           {"results_csv", "results.csv"}};
  write_json_file(cfg.out_dir / "manifest.json", manifest);
}

void dispatch(const RunConfig& cfg) {
  switch (cfg.command) {
    case Command::kSimulate:
      cmd_simulate(cfg);
      return;
    case Command::kFit:
      cmd_fit(cfg);
      return;
    case Command::kSummarize:
      cmd_summarize(cfg);
      return;
    case Command::kEvaluate:
      std::cout << cmd_evaluate(cfg).dump(2) << "\n";
      return;
    case Command::kBench:
      cmd_bench(cfg);
      return;
  }
  throw ConfigError("unknown command value");
}

RunConfig config_from_manifest(const nlohmann::json& manifest) {
  try {
    const std::string schema =
        manifest.value("schema", std::string("<missing>"));
    if (schema != kManifestSchema)
      throw DataError("expected schema '" + std::string(kManifestSchema) +
                      "' but found '" + schema + "'");
    RunConfig cfg;
    cfg.out_dir = manifest.value("out_dir", std::string{});
    const std::string command = manifest.at("command").get<std::string>();
    const nlohmann::json& options = manifest.at("options");
    if (command == "fit") {
      cfg.command = Command::kFit;
      const nlohmann::json& inputs = manifest.at("inputs");
      cfg.curves_path = inputs.at("curves").get<std::string>();
      cfg.outcomes_path = inputs.at("outcomes").get<std::string>();
      cfg.K = options.at("K").get<int>();
      cfg.a = options.at("a").get<double>();
      cfg.b = options.at("b").get<double>();
      cfg.v = options.at("v").get<double>();
      cfg.v0 = options.at("v0").get<double>();
      cfg.eps = options.at("eps").get<double>();
      cfg.K0 = options.at("K0").get<int>();
      cfg.gammas = options.at("gammas").get<std::vector<double>>();
      cfg.iterations = options.at("iterations").get<std::int64_t>();
      cfg.burn_in = options.at("burn_in").get<std::int64_t>();
      cfg.thin = options.at("thin").get<std::int64_t>();
      cfg.seed = options.at("seed").get<std::uint64_t>();
      cfg.sann_iterations = options.at("sann_iterations").get<int>();
      cfg.sann_te = options.at("sann_te").get<double>();
      cfg.sann_seed = options.at("sann_seed").get<std::uint64_t>();
      cfg.bins = options.at("bins").get<int>();
      return cfg;
    }
    if (command == "simulate") {
      cfg.command = Command::kSimulate;
      cfg.sim.shape = parse_shape(options.at("shape").get<std::string>());
      cfg.sim.n = options.at("n").get<int>();
      cfg.sim.p = options.at("p").get<int>();
      cfg.sim.zeta = options.at("zeta").get<double>();
      cfg.sim.r = options.at("r").get<double>();
      cfg.sim.mu = options.at("mu").get<double>();
      cfg.sim.marginal_sd = options.at("marginal_sd").get<double>();
      cfg.sim.seed = options.at("seed").get<std::uint64_t>();
      if (options.contains("dataset"))
        cfg.dataset = options.at("dataset").get<int>();
      return cfg;
    }
    if (command == "summarize") {
      cfg.command = Command::kSummarize;
      cfg.chain_path = manifest.at("inputs").at("chain").get<std::string>();
      cfg.K0 = options.at("K0").get<int>();
      cfg.eps = options.at("eps").get<double>();
      cfg.gammas = options.at("gammas").get<std::vector<double>>();
      cfg.sann_iterations = options.at("sann_iterations").get<int>();
      cfg.sann_te = options.at("sann_te").get<double>();
      cfg.sann_seed = options.at("sann_seed").get<std::uint64_t>();
      cfg.bins = options.at("bins").get<int>();
      return cfg;
    }
    if (command == "bench") {
      cfg.command = Command::kBench;
      cfg.config_path =
          manifest.at("inputs").at("config").get<std::string>();
      cfg.bench_config = options;
      return cfg;
    }
    throw ConfigError("manifest command '" + command +
                      "' cannot be replayed");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
}

int exit_code_for_error(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const DataError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return 4;
  return 1;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{
      "Functional linear regression with sparse interval coefficients"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string shape_name = "step";
  std::string curves_s, outcomes_s, chain_s, estimate_s, truth_s, config_s;
  std::string out_s;

  CLI::App* sim = app.add_subcommand("simulate",
                                     "Generate a benchmark dataset");
  sim->add_option("--shape", shape_name, "step, smooth, or spiky");
  sim->add_option("--r", cfg.sim.r, "signal-to-noise ratio");
  sim->add_option("--zeta", cfg.sim.zeta, "curve autocorrelation decay");
  sim->add_option("--n", cfg.sim.n, "number of curves");
  sim->add_option("--p", cfg.sim.p, "grid size");
  sim->add_option("--mu", cfg.sim.mu, "true intercept");
  sim->add_option("--marginal-sd", cfg.sim.marginal_sd,
                  "per-point curve standard deviation");
  sim->add_option("--seed", cfg.sim.seed, "generator seed");
  sim->add_option("--dataset", cfg.dataset,
                  "benchmark preset 1..27 (explicit flags override)");
  sim->add_option("--out", out_s, "output directory")->required();

  CLI::App* fit = app.add_subcommand(
      "fit", "Sample the posterior and write every summary artifact");
  fit->add_option("--curves", curves_s, "curve matrix file")->required();
  fit->add_option("--y", outcomes_s, "outcome file")->required();
  fit->add_option("--K", cfg.K, "number of intervals");
  fit->add_option("--a", cfg.a, "half-length prior shape");
  fit->add_option("--b", cfg.b, "half-length prior rate");
  fit->add_option("--v", cfg.v, "ridge multiplier");
  fit->add_option("--v0", cfg.v0, "intercept prior variance scale");
  fit->add_option("--eps", cfg.eps, "minimum stepwise piece length");
  fit->add_option("--K0", cfg.K0, "stepwise piece cap");
  fit->add_option("--gamma", cfg.gammas,
                  "support thresholds in (0, 1), repeatable");
  fit->add_option("--iters", cfg.iterations, "Gibbs sweeps");
  fit->add_option("--burnin", cfg.burn_in, "discarded sweeps");
  fit->add_option("--thin", cfg.thin, "thinning stride");
  fit->add_option("--seed", cfg.seed, "sampler seed");
  fit->add_option("--sann-iters", cfg.sann_iterations, "annealing sweeps");
  fit->add_option("--sann-te", cfg.sann_te,
                  "initial temperature (0 = auto)");
  fit->add_option("--sann-seed", cfg.sann_seed, "annealing seed");
  fit->add_option("--bins", cfg.bins, "heat map bins");
  fit->add_option("--out", out_s, "output directory")->required();

  CLI::App* summarize = app.add_subcommand(
      "summarize", "Recompute summaries from an existing chain");
  summarize->add_option("--chain", chain_s, "chain file")->required();
  summarize->add_option("--gamma", cfg.gammas,
                        "support thresholds in (0, 1), repeatable");
  summarize->add_option("--bins", cfg.bins, "heat map bins");
  summarize->add_option("--sann-iters", cfg.sann_iterations,
                        "annealing sweeps");
  summarize->add_option("--sann-te", cfg.sann_te,
                        "initial temperature (0 = auto)");
  summarize->add_option("--sann-seed", cfg.sann_seed, "annealing seed");
  summarize->add_option("--K0", cfg.K0, "stepwise piece cap");
  summarize->add_option("--eps", cfg.eps, "minimum stepwise piece length");
  summarize->add_option("--out", out_s, "output directory")->required();

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Score an estimate artifact against a truth record");
  evaluate->add_option("--estimate", estimate_s, "estimate artifact")
      ->required();
  evaluate->add_option("--truth", truth_s, "truth record")->required();

  CLI::App* bench = app.add_subcommand(
      "bench", "Run benchmark cells in parallel and tabulate errors");
  bench->add_option("--config", config_s, "benchmark configuration")
      ->required();
  bench->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
  bench->add_option("--out", out_s, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    cfg.curves_path = curves_s;
    cfg.outcomes_path = outcomes_s;
    cfg.chain_path = chain_s;
    cfg.estimate_path = estimate_s;
    cfg.truth_path = truth_s;
    cfg.config_path = config_s;
    cfg.out_dir = out_s;
    if (sim->parsed()) {
      cfg.command = Command::kSimulate;
      if (cfg.dataset) {
        const SimConfig preset = dataset_config(*cfg.dataset);
        if (sim->count("--shape") == 0) shape_name = to_string(preset.shape);
        if (sim->count("--r") == 0) cfg.sim.r = preset.r;
        if (sim->count("--zeta") == 0) cfg.sim.zeta = preset.zeta;
        if (sim->count("--n") == 0) cfg.sim.n = preset.n;
        if (sim->count("--p") == 0) cfg.sim.p = preset.p;
        if (sim->count("--mu") == 0) cfg.sim.mu = preset.mu;
      }
      cfg.sim.shape = parse_shape(shape_name);
    } else if (fit->parsed()) {
      cfg.command = Command::kFit;
    } else if (summarize->parsed()) {
      cfg.command = Command::kSummarize;
    } else if (evaluate->parsed()) {
      cfg.command = Command::kEvaluate;
    } else if (bench->parsed()) {
      cfg.command = Command::kBench;
    }
    dispatch(cfg);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for_error(e);
  }
}

}  // namespace bliss
