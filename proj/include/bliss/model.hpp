#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "bliss/core.hpp"
#include "bliss/rng.hpp"

namespace bliss {

// Model hyperparameters. Defaults come from default_hyperparameters; the
// zero-initialized members there are data-dependent.
struct Hyperparameters {
  int K = 3;           // number of intervals in the coefficient expansion
  double a = 0.0;      // Gamma shape of the half-length prior (default 1/(5K))
  double b = 1.0;      // Gamma rate of the half-length prior
  double v = 5.0;      // ridge multiplier on the largest Gram eigenvalue
  double v0 = 0.0;     // prior variance scale of the intercept
  double gamma = 0.5;  // probability threshold for the support estimate
  int K0 = 0;          // maximum piece count of the stepwise summary (default K)
  double eps = 0.0;    // minimum piece length (default one grid step)
};

// Data-driven defaults: a = 1/(5K), b = 1, v = 5, v0 = 100 * mean(y)^2
// (falling back to 100 * sample variance when the mean is zero), gamma = 1/2,
// K0 = K, eps = smallest grid step.
Hyperparameters default_hyperparameters(const FunctionalDataset& data, int K);

// Throws ConfigError when a setting is out of range for the given grid.
void validate(const Hyperparameters& hp, const TimeGrid& grid);

// One point in parameter space: K intervals with weights, plus intercept and
// noise variance. lo/hi cache the realized endpoints as grid indices; the
// sampler keeps them in sync, and realize_state fills them from centers and
// half-lengths for hand-built states.
struct ParamState {
  std::vector<double> centers;       // interval centers, on grid points
  std::vector<double> half_lengths;  // admissible half-lengths
  std::vector<double> weights;       // interval weights (numerators of the steps)
  double intercept = 0.0;
  double noise_var = 1.0;
  std::vector<std::size_t> lo;       // realized left endpoints (grid indices)
  std::vector<std::size_t> hi;       // realized right endpoints, hi > lo
};

// Fills lo/hi from centers and half-lengths. Throws ConfigError when a
// center is off-grid or a half-length is not admissible at its center.
void realize_state(ParamState& state, const TimeGrid& grid);

// View of the state as a normalized step function on the given domain.
StepFunction to_step_function(const ParamState& state, const Domain& domain);

// Design matrix: entry (i, k) is the mean of curve i over realized
// interval k. Columns with a zero-length interval are rejected.
Eigen::MatrixXd design_matrix(const FunctionalDataset& data,
                              const std::vector<ClosedInterval>& intervals);
// Grid-aligned fast path over [t_lo[k], t_hi[k]].
Eigen::MatrixXd design_matrix(const FunctionalDataset& data,
                              const std::vector<std::size_t>& lo,
                              const std::vector<std::size_t>& hi);

// Largest eigenvalue of a symmetric PSD matrix by power iteration:
// all-ones start plus deterministic basis restarts, relative tolerance
// 1e-10, iteration cap. Returns 0 for the zero matrix.
double largest_eigenvalue(const Eigen::MatrixXd& gram);

// G + v * lambda_max(G) * I for G = X^T X; identity when X is all zeros.
// SPD for any v > 0.
Eigen::MatrixXd ridge_gram(const Eigen::MatrixXd& design, double v);

// Log prior density of the state (base measure: counting on the grid for
// centers and admissible half-lengths, Lebesgue elsewhere). Returns -inf for
// states off the discretization or with nonpositive noise variance.
double log_prior(const ParamState& state, const Hyperparameters& hp,
                 const FunctionalDataset& data);

// Gaussian log likelihood of the outcomes given the state. Returns -inf when
// a nonzero weight sits on a degenerate interval.
double log_likelihood(const ParamState& state, const FunctionalDataset& data);

// Monte Carlo estimate of the prior probability that each grid point is
// covered by the support of a draw from the interval prior. Membership is
// half-open on the right except at the last grid point.
std::vector<double> prior_alpha(const Hyperparameters& hp,
                                const TimeGrid& grid, int draws, Rng& rng);

// Probabilities proportional to exp(logw - max(logw)). Non-finite entries get
// probability zero; returns an empty vector when no entry is finite.
std::vector<double> normalized_from_log(std::span<const double> logw);

// Index draw from explicit probabilities (assumed to sum to ~1).
std::size_t draw_categorical(Rng& rng, std::span<const double> probs);

}  // namespace bliss
