#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bliss/core.hpp"
#include "bliss/model.hpp"
#include "bliss/rng.hpp"

namespace bliss {

struct GibbsConfig {
  std::int64_t iterations = 10000;  // total sweeps
  std::int64_t burn_in = 5000;      // leading sweeps discarded
  std::int64_t thin = 1;            // keep every thin-th sweep after burn-in
  std::uint64_t seed = 0;
};

// Throws ConfigError unless iterations > 0, 0 <= burn_in < iterations,
// thin >= 1, and at least one draw is retained.
void validate(const GibbsConfig& cfg);

// Number of retained draws: floor((iterations - burn_in) / thin).
std::int64_t retained_draws(const GibbsConfig& cfg);

// Posterior sample plus everything needed to reproduce and summarize it
// without the original dataset.
struct Chain {
  std::string rng_algorithm;  // generator identity; a change breaks formats
  GibbsConfig config;
  Hyperparameters hyper;
  std::uint64_t dataset_fingerprint = 0;
  TimeGrid grid;
  std::vector<ParamState> states;
  std::int64_t degenerate_steps = 0;  // conditionals with no finite weight
};

// One-site Gibbs updates for the interval model. Each sample_* method draws
// from the full conditional of its block given the current state; sweep
// applies them in the fixed order used by run_gibbs. The *_distribution and
// *_conditional accessors expose the exact conditional laws for testing.
class GibbsSampler {
 public:
  GibbsSampler(const FunctionalDataset& data, const Hyperparameters& hp);

  // Random start: centers uniform over grid points, smallest admissible
  // half-lengths, zero weights, intercept = mean(y), noise variance =
  // sample variance of y.
  void init(Rng& rng);

  const ParamState& state() const { return state_; }
  // Replaces the state; throws ConfigError when it is off the
  // discretization.
  void set_state(const ParamState& state);

  // Joint Gaussian draw of (intercept, weights).
  void sample_intercept_and_weights(Rng& rng);
  // Inverse-gamma draw of the noise variance.
  void sample_noise_variance(Rng& rng);
  // Discrete conditional of center k over all grid points; the current
  // half-length rides along, clipped to the nearest admissible value.
  void sample_center(std::size_t k, Rng& rng);
  // Discrete conditional of half-length k over the admissible set at the
  // current center.
  void sample_half_length(std::size_t k, Rng& rng);
  // One full sweep: (intercept, weights), noise variance, all centers,
  // all half-lengths.
  void sweep(Rng& rng);

  // Gaussian conditional of (intercept, weights): mean vector and precision
  // matrix P with covariance = noise_var * P^{-1}.
  void intercept_weights_conditional(Eigen::VectorXd& mean,
                                     Eigen::MatrixXd& precision) const;
  // Inverse-gamma conditional of the noise variance.
  void noise_variance_conditional(double& shape, double& scale) const;
  // Normalized conditional probabilities, aligned with grid points
  // (centers) and the admissible set (half-lengths).
  std::vector<double> center_distribution(std::size_t k) const;
  std::vector<double> half_length_distribution(std::size_t k) const;

  // Admissible half-lengths at a given center index.
  const std::vector<AdmissibleLength>& admissible_at(std::size_t c) const {
    return admissible_[c];
  }

  std::int64_t degenerate_steps() const { return degenerate_steps_; }

 private:
  struct Candidate {
    double half_length = 0.0;
    std::size_t lo = 0;
    std::size_t hi = 0;
  };

  Eigen::VectorXd interval_column(std::size_t lo, std::size_t hi) const;
  void refresh_design();
  // Log weight shared by the center and half-length conditionals: Gaussian
  // misfit plus the normalized weight-vector prior at the candidate design.
  double candidate_log_weight(std::size_t k, const Eigen::VectorXd& column,
                              const Eigen::VectorXd& base_residual) const;
  std::vector<double> center_log_weights(std::size_t k,
                                         std::vector<Candidate>& cands) const;
  std::vector<double> half_length_log_weights(std::size_t k) const;
  void apply_interval(std::size_t k, std::size_t center_idx,
                      const Candidate& cand);

  const FunctionalDataset& data_;
  Hyperparameters hp_;
  std::vector<std::vector<AdmissibleLength>> admissible_;  // per center
  std::vector<std::vector<double>> length_log_prior_;      // per center, unnormalized
  ParamState state_;
  std::vector<std::size_t> center_idx_;
  Eigen::MatrixXd design_;  // n x K, column k = means over interval k
  std::int64_t degenerate_steps_ = 0;
};

// Full sampler run: seeded initialization, iterations sweeps, burn-in and
// thinning applied. Deterministic given (data, hp, cfg).
Chain run_gibbs(const FunctionalDataset& data, const Hyperparameters& hp,
                const GibbsConfig& cfg);

// Same, but starting from a caller-supplied state (no random initialization).
Chain run_gibbs_from(const FunctionalDataset& data, const Hyperparameters& hp,
                     const GibbsConfig& cfg, const ParamState& start);

}  // namespace bliss
