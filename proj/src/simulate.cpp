#include "bliss/simulate.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <vector>

#include "bliss/errors.hpp"

namespace bliss {

const char* to_string(Shape shape) {
  switch (shape) {
    case Shape::kStep:
      return "step";
    case Shape::kSmooth:
      return "smooth";
    case Shape::kSpiky:
      return "spiky";
  }
  throw ConfigError("unknown shape value");
}

Shape parse_shape(const std::string& name) {
  if (name == "step") return Shape::kStep;
  if (name == "smooth") return Shape::kSmooth;
  if (name == "spiky") return Shape::kSpiky;
  throw ConfigError("unknown shape '" + name +
                    "' (expected step, smooth, or spiky)");
}

void validate(const SimConfig& cfg) {
  if (cfg.n < 2) throw ConfigError("simulation needs n >= 2 curves");
  if (cfg.p < 2) throw ConfigError("simulation needs p >= 2 grid points");
  if (!(cfg.zeta > 0.0) || !std::isfinite(cfg.zeta))
    throw ConfigError("zeta must be positive and finite");
  if (!(cfg.r > 0.0) || !std::isfinite(cfg.r))
    throw ConfigError("signal-to-noise ratio r must be positive and finite");
  if (!(cfg.marginal_sd > 0.0) || !std::isfinite(cfg.marginal_sd))
    throw ConfigError("marginal_sd must be positive and finite");
  if (!std::isfinite(cfg.mu)) throw ConfigError("mu must be finite");
}

TimeGrid regular_grid(int p) {
  if (p < 2) throw ConfigError("regular grid needs at least 2 points");
  std::vector<double> points(static_cast<std::size_t>(p));
  const double step = 1.0 / static_cast<double>(p - 1);
  for (int j = 0; j < p; ++j) points[static_cast<std::size_t>(j)] = j * step;
  points.back() = 1.0;
  return TimeGrid(std::move(points));
}

Eigen::MatrixXd covariance_matrix(const TimeGrid& grid, double zeta,
                                  double marginal_sd) {
  if (!(zeta > 0.0)) throw ConfigError("zeta must be positive");
  if (!(marginal_sd > 0.0)) throw ConfigError("marginal_sd must be positive");
  const Eigen::Index p = static_cast<Eigen::Index>(grid.size());
  const double variance = marginal_sd * marginal_sd;
  Eigen::MatrixXd sigma(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    sigma(i, i) = variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d = grid[static_cast<std::size_t>(i)] -
                       grid[static_cast<std::size_t>(j)];
      const double value = variance * std::exp(-zeta * zeta * d * d);
      sigma(i, j) = value;
      sigma(j, i) = value;
    }
  }
  return sigma;
}

namespace {

// Lower Cholesky factor with a doubling diagonal jitter fallback.
Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double base =
      1e-10 * sigma.trace() / static_cast<double>(sigma.rows());
  double jitter = base;
  for (int attempt = 0; attempt <= 8; ++attempt) {
    Eigen::MatrixXd padded = sigma;
    padded.diagonal().array() += jitter;
    llt.compute(padded);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    jitter *= 2.0;
  }
  throw NumericError("curve covariance is not positive definite even after jitter");
}

}  // namespace

Eigen::MatrixXd sample_curves(const TimeGrid& grid, int n, double zeta,
                              double marginal_sd, Rng& rng) {
  if (n < 1) throw ConfigError("need at least one curve");
  // zeta tunes the decay per grid step: adjacent points have correlation
  // exp(-zeta^2) regardless of the physical spacing, so the benchmark values
  // zeta = 1, 1/3, 1/5 span low to high autocorrelation on any grid size.
  std::vector<double> steps(grid.size());
  const double step = grid.min_step();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    steps[j] = (grid[j] - grid.front()) / step;
  }
  const TimeGrid step_grid(std::move(steps));
  const Eigen::MatrixXd chol =
      jittered_cholesky(covariance_matrix(step_grid, zeta, marginal_sd));
  const Eigen::Index p = chol.rows();
  Eigen::MatrixXd curves(n, p);
  Eigen::VectorXd z(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
    curves.row(i) = (chol * z).transpose();
  }
  return curves;
}

namespace {

DisjointStepFunction step_truth() {
  std::vector<DisjointPiece> pieces = {
      {{0.10, 0.30}, 3.0},
      {{0.45, 0.55}, 4.0},
      {{0.80, 0.95}, -1.0},
  };
  return make_disjoint_step_function(std::move(pieces));
}

}  // namespace

TrueCoefficient::TrueCoefficient(Shape shape)
    : shape_(shape), step_(step_truth()) {}

double TrueCoefficient::operator()(double t) const {
  switch (shape_) {
    case Shape::kStep:
      return eval_disjoint(step_, t);
    case Shape::kSmooth:
      return 5.0 * std::exp(-20.0 * (t - 0.25) * (t - 0.25)) -
             2.0 * std::exp(-20.0 * (t - 0.50) * (t - 0.50)) +
             2.0 * std::exp(-20.0 * (t - 0.75) * (t - 0.75));
    case Shape::kSpiky:
      return 8.0 / (2.0 + std::exp(20.0 - 100.0 * t) +
                    std::exp(100.0 * t - 20.0)) -
             12.0 / (2.0 + std::exp(60.0 - 100.0 * t) +
                     std::exp(100.0 * t - 60.0));
  }
  throw ConfigError("unknown shape value");
}

std::optional<IntervalSet> TrueCoefficient::support() const {
  if (shape_ != Shape::kStep) return std::nullopt;
  return support_of(step_);
}

const DisjointStepFunction* TrueCoefficient::step_form() const {
  return shape_ == Shape::kStep ? &step_ : nullptr;
}

SimulatedData generate(const SimConfig& cfg) {
  validate(cfg);
  TimeGrid grid = regular_grid(cfg.p);
  Rng root(cfg.seed);
  Rng curve_rng = root.split("curves");
  Rng noise_rng = root.split("noise");

  Eigen::MatrixXd curves =
      sample_curves(grid, cfg.n, cfg.zeta, cfg.marginal_sd, curve_rng);

  TrueCoefficient truth(cfg.shape);
  const std::size_t p = grid.size();
  std::vector<double> coeff(p);
  for (std::size_t j = 0; j < p; ++j) coeff[j] = truth(grid[j]);

  // Signal integrals use the same trapezoid rule as inference.
  const Eigen::Index n = curves.rows();
  Eigen::VectorXd signal(n);
  std::vector<double> product(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j)
      product[j] = coeff[j] * curves(i, static_cast<Eigen::Index>(j));
    signal(i) = integrate(grid, product);
  }

  const double mean = signal.mean();
  const double var =
      (signal.array() - mean).square().sum() / static_cast<double>(n - 1);
  if (!(var > 0.0))
    throw NumericError("signal variance is zero; cannot calibrate noise");
  const double sigma2 = var / cfg.r;
  const double sd = std::sqrt(sigma2);

  Eigen::VectorXd outcomes(n);
  for (Eigen::Index i = 0; i < n; ++i)
    outcomes(i) = cfg.mu + signal(i) + sd * noise_rng.normal();

  return SimulatedData{
      FunctionalDataset(std::move(grid), std::move(curves),
                        std::move(outcomes)),
      std::move(truth), sigma2, cfg};
}

SimConfig dataset_config(int number) {
  if (number < 1 || number > 27)
    throw ConfigError("dataset number must be in 1..27");
  const int idx = number - 1;
  static constexpr Shape kShapes[] = {Shape::kStep, Shape::kSmooth,
                                      Shape::kSpiky};
  static constexpr double kRatios[] = {5.0, 3.0, 1.0};
  static constexpr double kZetas[] = {1.0, 1.0 / 3.0, 1.0 / 5.0};
  SimConfig cfg;
  cfg.shape = kShapes[idx / 9];
  cfg.r = kRatios[(idx % 9) / 3];
  cfg.zeta = kZetas[idx % 3];
  cfg.n = 100;
  cfg.p = 100;
  cfg.mu = 1.0;
  cfg.marginal_sd = 1.0;
  return cfg;
}

}  // namespace bliss
