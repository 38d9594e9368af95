#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "bliss/core.hpp"
#include "bliss/rng.hpp"

namespace bliss {

// True coefficient shapes of the benchmark generator.
enum class Shape { kStep, kSmooth, kSpiky };

const char* to_string(Shape shape);
Shape parse_shape(const std::string& name);  // ConfigError on unknown names

struct SimConfig {
  Shape shape = Shape::kStep;
  int n = 100;               // curve count
  int p = 100;               // grid size
  double zeta = 1.0;         // autocorrelation decay of the curves
  double r = 5.0;            // target signal-to-noise ratio
  double mu = 1.0;           // true intercept
  double marginal_sd = 1.0;  // per-point curve standard deviation
  std::uint64_t seed = 0;
};

void validate(const SimConfig& cfg);

// p equally spaced points on [0, 1].
TimeGrid regular_grid(int p);

// Gaussian-kernel covariance: marginal_sd^2 * exp(-zeta^2 (t_i - t_j)^2).
Eigen::MatrixXd covariance_matrix(const TimeGrid& grid, double zeta,
                                  double marginal_sd);

// n independent zero-mean Gaussian curve rows with the kernel covariance.
// The Cholesky factor gets a doubling diagonal jitter on failure (base
// 1e-10 * trace / p, up to 8 doublings) before giving up.
Eigen::MatrixXd sample_curves(const TimeGrid& grid, int n, double zeta,
                              double marginal_sd, Rng& rng);

// The three benchmark coefficient functions on [0, 1]: a three-piece step
// function with raw heights, and two analytic bump shapes.
class TrueCoefficient {
 public:
  explicit TrueCoefficient(Shape shape);

  Shape shape() const { return shape_; }
  double operator()(double t) const;
  // Exact support for the step shape; nullopt for the analytic shapes,
  // which vanish nowhere.
  std::optional<IntervalSet> support() const;
  // Piece representation; nullptr unless shape is step.
  const DisjointStepFunction* step_form() const;

 private:
  Shape shape_;
  DisjointStepFunction step_;
};

struct SimulatedData {
  FunctionalDataset data;
  TrueCoefficient truth;
  double sigma2 = 0.0;  // calibrated noise variance
  SimConfig config;
};

// Full generator: curves, signal integrals by the shared trapezoid rule,
// noise variance calibrated to Var(signal)/r, outcomes. Deterministic
// given cfg.seed.
SimulatedData generate(const SimConfig& cfg);

// Benchmark configuration for dataset numbers 1..27: shape blocks
// {step, smooth, spiky}, r in {5, 3, 1}, zeta in {1, 1/3, 1/5}, n = p = 100.
SimConfig dataset_config(int number);

}  // namespace bliss
