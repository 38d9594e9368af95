#include "bliss/io.hpp"

#include <atomic>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string_view>
#include <system_error>

#include "bliss/errors.hpp"

namespace bliss {

namespace {

std::string location(const std::filesystem::path& path) {
  return "'" + path.string() + "'";
}

// Unique-enough temp sibling for the atomic rename.
std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  static std::atomic<unsigned> counter{0};
  const unsigned id = counter.fetch_add(1, std::memory_order_relaxed);
  return path.parent_path() /
         (path.filename().string() + ".tmp" + std::to_string(id));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

double parse_number(std::string_view cell, const std::filesystem::path& path,
                    std::size_t row, std::size_t col) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || cell.empty())
    throw DataError("non-numeric cell '" + std::string(cell) + "' at row " +
                    std::to_string(row) + ", column " + std::to_string(col) +
                    " of " + location(path));
  return value;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open " + location(path) + " for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  // A trailing newline leaves no phantom row; drop other blank tail lines
  // too so editors that add them do not break ingestion.
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

// Header row of grid times; located errors on malformed or non-increasing
// values.
std::vector<double> parse_grid_header(const std::string& line,
                                      const std::filesystem::path& path) {
  const auto cells = split_cells(line);
  std::vector<double> points(cells.size());
  for (std::size_t j = 0; j < cells.size(); ++j)
    points[j] = parse_number(cells[j], path, 1, j + 1);
  if (points.size() < 2)
    throw DataError("grid header of " + location(path) +
                    " needs at least 2 columns");
  for (std::size_t j = 1; j < points.size(); ++j)
    if (!(points[j] > points[j - 1]))
      throw DataError("non-increasing grid at column " + std::to_string(j + 1) +
                      " of " + location(path));
  return points;
}

}  // namespace

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  const std::filesystem::path tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw DataError("cannot open " + location(tmp) + " for writing");
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw DataError("failed writing " + location(tmp));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot move " + location(tmp) + " to " + location(path) +
                    ": " + ec.message());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open " + location(path) + " for reading");
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("failed reading " + location(path));
  return content;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw NumericError("double formatting failed");
  return std::string(buf, ptr);
}

std::string fingerprint_hex(std::uint64_t value) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid JSON in " + location(path) + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j, int indent) {
  std::string text = j.dump(indent);
  text.push_back('\n');
  write_text_file(path, text);
}

namespace {

std::string csv_row(std::span<const double> values) {
  std::string row;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (j > 0) row.push_back(',');
    row += format_double(values[j]);
  }
  row.push_back('\n');
  return row;
}

}  // namespace

void write_curves_csv(const std::filesystem::path& path, const TimeGrid& grid,
                      const Eigen::MatrixXd& curves) {
  if (static_cast<std::size_t>(curves.cols()) != grid.size())
    throw ConfigError("curve matrix width does not match the grid");
  std::string content = csv_row(grid.points());
  std::vector<double> row(grid.size());
  for (Eigen::Index i = 0; i < curves.rows(); ++i) {
    for (Eigen::Index j = 0; j < curves.cols(); ++j)
      row[static_cast<std::size_t>(j)] = curves(i, j);
    content += csv_row(row);
  }
  write_text_file(path, content);
}

std::pair<TimeGrid, Eigen::MatrixXd> read_curves_csv(
    const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty())
    throw DataError("empty curves file " + location(path));
  const std::vector<double> points = parse_grid_header(lines[0], path);
  const std::size_t p = points.size();
  const std::size_t n = lines.size() - 1;
  if (n == 0)
    throw DataError("curves file " + location(path) +
                    " has a header but no curve rows");
  Eigen::MatrixXd curves(static_cast<Eigen::Index>(n),
                         static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    const auto cells = split_cells(lines[i + 1]);
    if (cells.size() != p)
      throw DataError("row " + std::to_string(i + 2) + " of " +
                      location(path) + " has " + std::to_string(cells.size()) +
                      " cells but the header has " + std::to_string(p));
    for (std::size_t j = 0; j < p; ++j)
      curves(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          parse_number(cells[j], path, i + 2, j + 1);
  }
  return {TimeGrid(points), std::move(curves)};
}

void write_curve_csv(const std::filesystem::path& path, const TimeGrid& grid,
                     std::span<const double> values) {
  if (values.size() != grid.size())
    throw ConfigError("curve length does not match the grid");
  std::string content = csv_row(grid.points());
  content += csv_row(values);
  write_text_file(path, content);
}

GridCurve read_curve_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.size() != 2)
    throw DataError("curve file " + location(path) +
                    " must have a grid header and exactly one value row");
  GridCurve curve;
  curve.grid = parse_grid_header(lines[0], path);
  const auto cells = split_cells(lines[1]);
  if (cells.size() != curve.grid.size())
    throw DataError("value row of " + location(path) + " has " +
                    std::to_string(cells.size()) + " cells but the header has " +
                    std::to_string(curve.grid.size()));
  curve.values.resize(cells.size());
  for (std::size_t j = 0; j < cells.size(); ++j)
    curve.values[j] = parse_number(cells[j], path, 2, j + 1);
  return curve;
}

void write_outcomes(const std::filesystem::path& path,
                    std::span<const double> values) {
  std::string content;
  for (const double v : values) {
    content += format_double(v);
    content.push_back('\n');
  }
  write_text_file(path, content);
}

std::vector<double> read_outcomes(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<double> values(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i)
    values[i] = parse_number(trim(lines[i]), path, i + 1, 1);
  return values;
}

FunctionalDataset ingest_dataset(const std::filesystem::path& curves_path,
                                 const std::filesystem::path& outcomes_path) {
  auto [grid, curves] = read_curves_csv(curves_path);
  const std::vector<double> outcomes = read_outcomes(outcomes_path);
  if (outcomes.size() != static_cast<std::size_t>(curves.rows()))
    throw DataError("outcomes file " + location(outcomes_path) + " has " +
                    std::to_string(outcomes.size()) + " values but " +
                    location(curves_path) + " has " +
                    std::to_string(curves.rows()) + " curve rows");
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      outcomes.data(), static_cast<Eigen::Index>(outcomes.size()));
  return FunctionalDataset(std::move(grid), std::move(curves), std::move(y));
}

namespace {

constexpr const char* kChainSchema = "bliss/chain/v1";
constexpr const char* kSupportSchema = "bliss/support/v1";
constexpr const char* kStepwiseSchema = "bliss/stepwise/v1";
constexpr const char* kHeatmapSchema = "bliss/heatmap/v1";
constexpr const char* kTruthSchema = "bliss/truth/v1";

void check_schema(const nlohmann::json& j, const char* expected) {
  const std::string actual = j.value("schema", std::string("<missing>"));
  if (actual != expected)
    throw DataError("expected schema '" + std::string(expected) +
                    "' but found '" + actual + "'");
}

std::uint64_t fingerprint_from_hex(const std::string& s) {
  if (s.size() < 3 || s[0] != '0' || (s[1] != 'x' && s[1] != 'X'))
    throw DataError("fingerprint '" + s + "' is not a 0x-prefixed hex string");
  std::uint64_t value = 0;
  const char* begin = s.data() + 2;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value, 16);
  if (ec != std::errc{} || ptr != end)
    throw DataError("fingerprint '" + s + "' is not a 0x-prefixed hex string");
  return value;
}

nlohmann::json state_to_json(const ParamState& s) {
  return nlohmann::json{{"centers", s.centers},
                        {"half_lengths", s.half_lengths},
                        {"weights", s.weights},
                        {"intercept", s.intercept},
                        {"noise_var", s.noise_var},
                        {"lo", s.lo},
                        {"hi", s.hi}};
}

ParamState state_from_json(const nlohmann::json& j) {
  ParamState s;
  s.centers = j.at("centers").get<std::vector<double>>();
  s.half_lengths = j.at("half_lengths").get<std::vector<double>>();
  s.weights = j.at("weights").get<std::vector<double>>();
  s.intercept = j.at("intercept").get<double>();
  s.noise_var = j.at("noise_var").get<double>();
  s.lo = j.at("lo").get<std::vector<std::size_t>>();
  s.hi = j.at("hi").get<std::vector<std::size_t>>();
  const std::size_t k = s.centers.size();
  if (s.half_lengths.size() != k || s.weights.size() != k ||
      s.lo.size() != k || s.hi.size() != k)
    throw DataError("state arrays have mismatched lengths");
  return s;
}

nlohmann::json hyper_to_json(const Hyperparameters& hp) {
  return nlohmann::json{{"K", hp.K},   {"a", hp.a},         {"b", hp.b},
                        {"v", hp.v},   {"v0", hp.v0},       {"gamma", hp.gamma},
                        {"K0", hp.K0}, {"eps", hp.eps}};
}

Hyperparameters hyper_from_json(const nlohmann::json& j) {
  Hyperparameters hp;
  hp.K = j.at("K").get<int>();
  hp.a = j.at("a").get<double>();
  hp.b = j.at("b").get<double>();
  hp.v = j.at("v").get<double>();
  hp.v0 = j.at("v0").get<double>();
  hp.gamma = j.at("gamma").get<double>();
  hp.K0 = j.at("K0").get<int>();
  hp.eps = j.at("eps").get<double>();
  return hp;
}

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed ") + what + " artifact: " +
                    e.what());
  }
}

}  // namespace

nlohmann::json chain_to_json(const Chain& chain) {
  nlohmann::json states = nlohmann::json::array();
  for (const ParamState& s : chain.states) states.push_back(state_to_json(s));
  return nlohmann::json{
      {"schema", kChainSchema},
      {"rng", chain.rng_algorithm},
      {"iterations", chain.config.iterations},
      {"burn_in", chain.config.burn_in},
      {"thin", chain.config.thin},
      {"seed", chain.config.seed},
      {"hyper", hyper_to_json(chain.hyper)},
      {"dataset_fingerprint", fingerprint_hex(chain.dataset_fingerprint)},
      {"degenerate_steps", chain.degenerate_steps},
      {"grid", chain.grid.points()},
      {"states", std::move(states)}};
}

Chain chain_from_json(const nlohmann::json& j) {
  return guarded("chain", [&] {
    check_schema(j, kChainSchema);
    GibbsConfig cfg;
    cfg.iterations = j.at("iterations").get<std::int64_t>();
    cfg.burn_in = j.at("burn_in").get<std::int64_t>();
    cfg.thin = j.at("thin").get<std::int64_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    std::vector<ParamState> states;
    states.reserve(j.at("states").size());
    for (const auto& js : j.at("states")) states.push_back(state_from_json(js));
    return Chain{j.at("rng").get<std::string>(),
                 cfg,
                 hyper_from_json(j.at("hyper")),
                 fingerprint_from_hex(
                     j.at("dataset_fingerprint").get<std::string>()),
                 TimeGrid(j.at("grid").get<std::vector<double>>()),
                 std::move(states),
                 j.at("degenerate_steps").get<std::int64_t>()};
  });
}

void write_chain(const std::filesystem::path& path, const Chain& chain) {
  write_json_file(path, chain_to_json(chain), -1);
}

Chain read_chain(const std::filesystem::path& path) {
  return chain_from_json(read_json_file(path));
}

nlohmann::json support_to_json(const SupportEstimate& estimate) {
  nlohmann::json intervals = nlohmann::json::array();
  for (const ClosedInterval& iv : estimate.set.intervals())
    intervals.push_back(nlohmann::json::array({iv.lo, iv.hi}));
  return nlohmann::json{{"schema", kSupportSchema},
                        {"gamma", estimate.gamma},
                        {"intervals", std::move(intervals)}};
}

SupportEstimate support_from_json(const nlohmann::json& j) {
  return guarded("support", [&] {
    check_schema(j, kSupportSchema);
    std::vector<ClosedInterval> intervals;
    for (const auto& pair : j.at("intervals")) {
      if (!pair.is_array() || pair.size() != 2)
        throw DataError("support interval is not a [lo, hi] pair");
      intervals.push_back(
          {pair.at(0).get<double>(), pair.at(1).get<double>()});
    }
    return SupportEstimate{j.at("gamma").get<double>(),
                           IntervalSet(std::move(intervals))};
  });
}

void write_support(const std::filesystem::path& path,
                   const SupportEstimate& estimate) {
  write_json_file(path, support_to_json(estimate));
}

SupportEstimate read_support(const std::filesystem::path& path) {
  return support_from_json(read_json_file(path));
}

namespace {

nlohmann::json sann_to_json(const SannConfig& cfg) {
  return nlohmann::json{{"iterations", cfg.iterations},
                        {"te", cfg.te},
                        {"max_pieces", cfg.max_pieces},
                        {"min_length", cfg.min_length},
                        {"seed", cfg.seed}};
}

SannConfig sann_from_json(const nlohmann::json& j) {
  SannConfig cfg;
  cfg.iterations = j.at("iterations").get<int>();
  cfg.te = j.at("te").get<double>();
  cfg.max_pieces = j.at("max_pieces").get<int>();
  cfg.min_length = j.at("min_length").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace

nlohmann::json stepwise_to_json(const StepwiseArtifact& artifact) {
  nlohmann::json pieces = nlohmann::json::array();
  for (const DisjointPiece& piece : artifact.result.function.pieces)
    pieces.push_back(nlohmann::json{{"lo", piece.interval.lo},
                                    {"hi", piece.interval.hi},
                                    {"value", piece.value}});
  return nlohmann::json{{"schema", kStepwiseSchema},
                        {"grid", artifact.grid},
                        {"pieces", std::move(pieces)},
                        {"cost", artifact.result.cost},
                        {"initial_cost", artifact.result.initial_cost},
                        {"temperature", artifact.result.temperature},
                        {"config", sann_to_json(artifact.config)}};
}

StepwiseArtifact stepwise_from_json(const nlohmann::json& j) {
  return guarded("stepwise", [&] {
    check_schema(j, kStepwiseSchema);
    StepwiseArtifact artifact;
    artifact.grid = j.at("grid").get<std::vector<double>>();
    std::vector<DisjointPiece> pieces;
    for (const auto& jp : j.at("pieces"))
      pieces.push_back(DisjointPiece{{jp.at("lo").get<double>(),
                                      jp.at("hi").get<double>()},
                                     jp.at("value").get<double>()});
    artifact.result.function = make_disjoint_step_function(std::move(pieces));
    artifact.result.cost = j.at("cost").get<double>();
    artifact.result.initial_cost = j.at("initial_cost").get<double>();
    artifact.result.temperature = j.at("temperature").get<double>();
    artifact.config = sann_from_json(j.at("config"));
    return artifact;
  });
}

void write_stepwise(const std::filesystem::path& path,
                    const StepwiseArtifact& artifact) {
  write_json_file(path, stepwise_to_json(artifact));
}

StepwiseArtifact read_stepwise(const std::filesystem::path& path) {
  return stepwise_from_json(read_json_file(path));
}

nlohmann::json heatmap_to_json(const HeatMap& map) {
  nlohmann::json mass = nlohmann::json::array();
  for (Eigen::Index b = 0; b < map.mass.rows(); ++b) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < map.mass.cols(); ++c)
      row.push_back(map.mass(b, c));
    mass.push_back(std::move(row));
  }
  return nlohmann::json{{"schema", kHeatmapSchema},
                        {"grid", map.grid.points()},
                        {"edges", map.edges},
                        {"zero_atom", map.zero_atom},
                        {"mass", std::move(mass)}};
}

HeatMap heatmap_from_json(const nlohmann::json& j) {
  return guarded("heatmap", [&] {
    check_schema(j, kHeatmapSchema);
    TimeGrid grid(j.at("grid").get<std::vector<double>>());
    std::vector<double> edges = j.at("edges").get<std::vector<double>>();
    std::vector<double> zero_atom =
        j.at("zero_atom").get<std::vector<double>>();
    const auto& jm = j.at("mass");
    if (edges.size() < 2 || jm.size() != edges.size() - 1)
      throw DataError("heatmap mass row count does not match the bin edges");
    if (zero_atom.size() != grid.size())
      throw DataError("heatmap zero atom length does not match the grid");
    Eigen::MatrixXd mass(static_cast<Eigen::Index>(jm.size()),
                         static_cast<Eigen::Index>(grid.size()));
    for (std::size_t b = 0; b < jm.size(); ++b) {
      const auto& row = jm.at(b);
      if (row.size() != grid.size())
        throw DataError("heatmap mass row width does not match the grid");
      for (std::size_t c = 0; c < grid.size(); ++c)
        mass(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(c)) =
            row.at(c).get<double>();
    }
    return HeatMap{std::move(grid), std::move(edges), std::move(mass),
                   std::move(zero_atom)};
  });
}

void write_heatmap(const std::filesystem::path& path, const HeatMap& map) {
  write_json_file(path, heatmap_to_json(map), -1);
}

HeatMap read_heatmap(const std::filesystem::path& path) {
  return heatmap_from_json(read_json_file(path));
}

nlohmann::json truth_to_json(const TruthRecord& truth) {
  nlohmann::json j{{"schema", kTruthSchema},
                   {"shape", to_string(truth.config.shape)},
                   {"n", truth.config.n},
                   {"p", truth.config.p},
                   {"zeta", truth.config.zeta},
                   {"r", truth.config.r},
                   {"mu", truth.config.mu},
                   {"marginal_sd", truth.config.marginal_sd},
                   {"seed", truth.config.seed},
                   {"sigma2", truth.sigma2}};
  // Redundant but convenient for plotting tools; readers recompute it.
  const TrueCoefficient coeff(truth.config.shape);
  if (const auto support = coeff.support()) {
    nlohmann::json intervals = nlohmann::json::array();
    for (const ClosedInterval& iv : support->intervals())
      intervals.push_back(nlohmann::json::array({iv.lo, iv.hi}));
    j["support"] = std::move(intervals);
  }
  return j;
}

TruthRecord truth_from_json(const nlohmann::json& j) {
  return guarded("truth", [&] {
    check_schema(j, kTruthSchema);
    TruthRecord truth;
    truth.config.shape = parse_shape(j.at("shape").get<std::string>());
    truth.config.n = j.at("n").get<int>();
    truth.config.p = j.at("p").get<int>();
    truth.config.zeta = j.at("zeta").get<double>();
    truth.config.r = j.at("r").get<double>();
    truth.config.mu = j.at("mu").get<double>();
    truth.config.marginal_sd = j.at("marginal_sd").get<double>();
    truth.config.seed = j.at("seed").get<std::uint64_t>();
    truth.sigma2 = j.at("sigma2").get<double>();
    return truth;
  });
}

void write_truth(const std::filesystem::path& path, const TruthRecord& truth) {
  write_json_file(path, truth_to_json(truth));
}

TruthRecord read_truth(const std::filesystem::path& path) {
  return truth_from_json(read_json_file(path));
}

}  // namespace bliss
