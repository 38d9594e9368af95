#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "bliss/core.hpp"
#include "bliss/gibbs.hpp"
#include "bliss/model.hpp"
#include "bliss/rng.hpp"

namespace bliss {

// Posterior probability that each grid point lies in the support of the
// sampled coefficient function.
struct AlphaCurve {
  TimeGrid grid;
  std::vector<double> values;  // one per grid point, in [0, 1]
};

// Level set of an alpha curve at threshold gamma, as a union of grid cells.
struct SupportEstimate {
  double gamma = 0.5;
  IntervalSet set;
};

// Pointwise posterior distribution of the coefficient function: per grid
// point, a histogram over sampled values plus an atom at exactly zero.
struct HeatMap {
  TimeGrid grid;
  std::vector<double> edges;      // bins + 1 ascending bin edges
  Eigen::MatrixXd mass;           // bins x p, column sums plus zero atom = 1
  std::vector<double> zero_atom;  // per-column mass of exact zeros
};

// Simulated-annealing settings for the stepwise summary.
struct SannConfig {
  int iterations = 5000;
  double te = 0.0;          // initial temperature; 0 means auto-calibrate
  int max_pieces = 3;       // piece-count cap
  double min_length = 0.0;  // minimum piece length; 0 means one grid step
  std::uint64_t seed = 0;
};

struct StepwiseResult {
  DisjointStepFunction function;
  double cost = 0.0;          // weighted squared distance to the target
  double initial_cost = 0.0;  // cost of the deterministic starting state
  double temperature = 0.0;   // initial temperature actually used
};

// Support membership of grid point j in the state's realized intervals:
// half-open on the right, closed at the final grid point. This makes the
// alpha value at a cell's left point equal the probability that the whole
// cell is covered, which is what the level-set optimality argument needs.
bool state_covers(const ParamState& state, std::size_t j, std::size_t p);

// Pointwise value of the state's coefficient function at grid point j
// (closed-interval membership, matching eval_step_function).
double state_value(const ParamState& state, const TimeGrid& grid,
                   std::size_t j);

// Fraction of retained states whose support covers each grid point.
AlphaCurve posterior_alpha(const Chain& chain);

// Union of grid cells whose left-point alpha is >= gamma.
SupportEstimate support_estimate(const AlphaCurve& alpha, double gamma);

// gamma * |estimate \ sampled| + (1 - gamma) * |sampled \ estimate|.
double support_loss(const IntervalSet& estimate, const IntervalSet& sampled,
                    double gamma);

// True iff the level-set estimate's posterior-integrated loss (computed
// from the alpha curve cell-wise) is minimal among the candidates, up to a
// 1e-12 relative slack. Candidates must be unions of grid cells.
bool bayes_optimality_check(const AlphaCurve& alpha, double gamma,
                            std::span<const IntervalSet> candidates);

// Pointwise posterior mean of the coefficient function on the grid.
std::vector<double> beta_l2(const Chain& chain);

// Histogram summary of the pointwise posterior. The value range is
// symmetric around zero, wide enough for every sampled value ([-1, 1] when
// all values are zero); exact zeros land in the zero atom, not a bin.
HeatMap heatmap(const Chain& chain, int bins = 512);

// Lebesgue measure of the symmetric difference.
double support_error(const IntervalSet& estimate, const IntervalSet& truth);

// Integral of (estimate - truth)^2 over the span, trapezoid rule on the grid.
double l2_error(const TimeGrid& grid, std::span<const double> estimate,
                std::span<const double> truth);

// Cooling schedule: te / log((i - 1) + e) for sweep index i >= 1.
double annealing_temperature(std::int64_t i, double te);

// Simulated annealing over piecewise-constant functions with at most
// max_pieces strictly separated grid-aligned pieces of length >= min_length.
// Cost is the trapezoid-weighted squared distance to the target curve.
// Exposed so tests can drive single moves; stepwise_estimate runs the loop.
class Annealer {
 public:
  struct Piece {
    std::size_t lo = 0;  // grid index of the left endpoint
    std::size_t hi = 0;  // grid index of the right endpoint, hi > lo
    double value = 0.0;
  };
  // Pieces sorted, strictly separated: pieces[i+1].lo > pieces[i].hi.
  using State = std::vector<Piece>;

  Annealer(const TimeGrid& grid, std::span<const double> target,
           const SannConfig& cfg);

  double min_length() const { return min_length_; }
  double cost(const State& state) const;
  // One-piece state on the minimal-length window with the largest
  // magnitude of weighted mean; empty state when the target is zero.
  State initial_state() const;
  // One uniformly chosen applicable move: piece value, center shift,
  // length change, append, or drop. Infeasible shifts degrade to no-ops.
  State propose(const State& state, Rng& rng) const;
  // Temperature with ~1/2 acceptance of cost-increasing moves, from 100
  // warmup proposals at the given state; 1.0 when none increase cost.
  double calibrate_temperature(const State& state, Rng& rng) const;
  StepwiseResult run(Rng& rng) const;
  DisjointStepFunction to_function(const State& state) const;

 private:
  double restricted_mean(std::size_t lo, std::size_t hi) const;
  void append_slots(const State& state,
                    std::vector<std::pair<std::size_t, std::size_t>>& out) const;

  TimeGrid grid_;
  std::vector<double> target_;
  std::vector<double> weights_;
  SannConfig cfg_;
  double min_length_ = 0.0;
  double value_scale_ = 1.0;
  // Per left index: smallest right index making a valid minimal window,
  // or npos when none exists.
  std::vector<std::size_t> min_window_;
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
};

// Best piecewise-constant summary of the target curve found by simulated
// annealing; deterministic given cfg.seed.
StepwiseResult stepwise_estimate(const TimeGrid& grid,
                                 std::span<const double> target,
                                 const SannConfig& cfg);

}  // namespace bliss
