#include "bliss/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bliss/errors.hpp"

namespace bliss {

bool state_covers(const ParamState& state, std::size_t j, std::size_t p) {
  for (std::size_t k = 0; k < state.lo.size(); ++k) {
    if (state.weights[k] == 0.0) continue;
    std::size_t lo = state.lo[k];
    std::size_t hi = state.hi[k];
    if (lo <= j && (j < hi || (j == p - 1 && hi == p - 1))) return true;
  }
  return false;
}

double state_value(const ParamState& state, const TimeGrid& grid,
                   std::size_t j) {
  double total = 0.0;
  for (std::size_t k = 0; k < state.lo.size(); ++k) {
    std::size_t lo = state.lo[k];
    std::size_t hi = state.hi[k];
    if (lo <= j && j <= hi) {
      total += state.weights[k] / (grid[hi] - grid[lo]);
    }
  }
  return total;
}

AlphaCurve posterior_alpha(const Chain& chain) {
  if (chain.states.empty()) {
    throw ConfigError("posterior_alpha: chain has no states");
  }
  std::size_t p = chain.grid.size();
  std::vector<double> counts(p, 0.0);
  for (const auto& state : chain.states) {
    for (std::size_t j = 0; j < p; ++j) {
      if (state_covers(state, j, p)) counts[j] += 1.0;
    }
  }
  auto N = static_cast<double>(chain.states.size());
  for (double& c : counts) c /= N;
  return {chain.grid, std::move(counts)};
}

SupportEstimate support_estimate(const AlphaCurve& alpha, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ConfigError("support_estimate: gamma must lie in [0, 1]");
  }
  if (alpha.values.size() != alpha.grid.size()) {
    throw ConfigError("support_estimate: alpha values do not match the grid");
  }
  std::vector<ClosedInterval> runs;
  std::size_t cells = alpha.grid.cells();
  std::size_t j = 0;
  while (j < cells) {
    if (alpha.values[j] >= gamma) {
      std::size_t start = j;
      while (j < cells && alpha.values[j] >= gamma) ++j;
      runs.push_back({alpha.grid[start], alpha.grid[j]});
    } else {
      ++j;
    }
  }
  return {gamma, IntervalSet(std::move(runs))};
}

double support_loss(const IntervalSet& estimate, const IntervalSet& sampled,
                    double gamma) {
  return gamma * measure_difference(estimate, sampled) +
         (1.0 - gamma) * measure_difference(sampled, estimate);
}

bool bayes_optimality_check(const AlphaCurve& alpha, double gamma,
                            std::span<const IntervalSet> candidates) {
  std::size_t cells = alpha.grid.cells();
  // Posterior-integrated loss of a cell union, via the alpha curve: an
  // included cell pays the false-inclusion cost gamma * (1 - alpha), an
  // excluded one the false-exclusion cost (1 - gamma) * alpha, each scaled
  // by cell length. Including a cell wins exactly when alpha >= gamma.
  auto cell_loss = [&](const IntervalSet& s) {
    double total = 0.0;
    for (std::size_t j = 0; j < cells; ++j) {
      double len = alpha.grid[j + 1] - alpha.grid[j];
      double mid = 0.5 * (alpha.grid[j] + alpha.grid[j + 1]);
      double a = alpha.values[j];
      total += s.contains(mid) ? gamma * (1.0 - a) * len
                               : (1.0 - gamma) * a * len;
    }
    return total;
  };
  double level = cell_loss(support_estimate(alpha, gamma).set);
  for (const auto& cand : candidates) {
    double loss = cell_loss(cand);
    if (level > loss + 1e-12 * std::max(1.0, std::abs(loss))) return false;
  }
  return true;
}

std::vector<double> beta_l2(const Chain& chain) {
  if (chain.states.empty()) {
    throw ConfigError("beta_l2: chain has no states");
  }
  std::size_t p = chain.grid.size();
  std::vector<double> mean(p, 0.0);
  for (const auto& state : chain.states) {
    for (std::size_t j = 0; j < p; ++j) {
      mean[j] += state_value(state, chain.grid, j);
    }
  }
  auto N = static_cast<double>(chain.states.size());
  for (double& m : mean) m /= N;
  return mean;
}

HeatMap heatmap(const Chain& chain, int bins) {
  if (bins < 1) throw ConfigError("heatmap: bins must be positive");
  if (chain.states.empty()) {
    throw ConfigError("heatmap: chain has no states");
  }
  std::size_t p = chain.grid.size();
  auto N = chain.states.size();

  double max_abs = 0.0;
  for (const auto& state : chain.states) {
    for (std::size_t j = 0; j < p; ++j) {
      max_abs = std::max(max_abs, std::abs(state_value(state, chain.grid, j)));
    }
  }
  if (max_abs == 0.0) max_abs = 1.0;

  HeatMap hm{chain.grid, {}, {}, {}};
  hm.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) {
    hm.edges[static_cast<std::size_t>(b)] =
        -max_abs + 2.0 * max_abs * static_cast<double>(b) /
                       static_cast<double>(bins);
  }
  hm.mass = Eigen::MatrixXd::Zero(bins, static_cast<Eigen::Index>(p));
  hm.zero_atom.assign(p, 0.0);

  std::vector<std::int64_t> counts(static_cast<std::size_t>(bins));
  for (std::size_t j = 0; j < p; ++j) {
    std::fill(counts.begin(), counts.end(), 0);
    std::int64_t zeros = 0;
    for (const auto& state : chain.states) {
      double v = state_value(state, chain.grid, j);
      if (v == 0.0) {
        ++zeros;
        continue;
      }
      auto b = static_cast<std::ptrdiff_t>(
          std::floor((v + max_abs) / (2.0 * max_abs) * bins));
      b = std::clamp<std::ptrdiff_t>(b, 0, bins - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < bins; ++b) {
      hm.mass(b, static_cast<Eigen::Index>(j)) =
          static_cast<double>(counts[static_cast<std::size_t>(b)]) /
          static_cast<double>(N);
    }
    hm.zero_atom[j] = static_cast<double>(zeros) / static_cast<double>(N);
  }
  return hm;
}

double support_error(const IntervalSet& estimate, const IntervalSet& truth) {
  return measure_symmetric_difference(estimate, truth);
}

double l2_error(const TimeGrid& grid, std::span<const double> estimate,
                std::span<const double> truth) {
  if (estimate.size() != grid.size() || truth.size() != grid.size()) {
    throw ConfigError("l2_error: curve sizes do not match the grid");
  }
  std::vector<double> sq(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double d = estimate[j] - truth[j];
    sq[j] = d * d;
  }
  return integrate(grid, sq);
}

double annealing_temperature(std::int64_t i, double te) {
  if (i < 1) throw ConfigError("annealing_temperature: index must be >= 1");
  return te / std::log(static_cast<double>(i - 1) + std::numbers::e);
}

Annealer::Annealer(const TimeGrid& grid, std::span<const double> target,
                   const SannConfig& cfg)
    : grid_(grid), target_(target.begin(), target.end()), cfg_(cfg) {
  if (target.size() != grid.size()) {
    throw ConfigError("stepwise: target curve does not match the grid");
  }
  if (cfg_.iterations < 1) {
    throw ConfigError("stepwise: iterations must be positive");
  }
  if (cfg_.max_pieces < 1) {
    throw ConfigError("stepwise: max_pieces must be positive");
  }
  if (cfg_.te < 0.0) {
    throw ConfigError("stepwise: te must be nonnegative");
  }
  min_length_ = cfg_.min_length > 0.0 ? cfg_.min_length : grid_.min_step();
  if (min_length_ > grid_.span().length()) {
    throw ConfigError("stepwise: min_length exceeds the grid span");
  }
  weights_ = trapezoid_weights(grid_);

  double mean = 0.0;
  for (double v : target_) mean += v;
  mean /= static_cast<double>(target_.size());
  double var = 0.0;
  for (double v : target_) var += (v - mean) * (v - mean);
  var /= static_cast<double>(target_.size() - 1);
  value_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;

  min_window_.assign(grid_.size(), kNone);
  double slack = grid_.tolerance();
  for (std::size_t a = 0; a + 1 < grid_.size(); ++a) {
    for (std::size_t b = a + 1; b < grid_.size(); ++b) {
      if (grid_[b] - grid_[a] >= min_length_ - slack) {
        min_window_[a] = b;
        break;
      }
    }
  }
}

double Annealer::restricted_mean(std::size_t lo, std::size_t hi) const {
  double num = 0.0, den = 0.0;
  for (std::size_t j = lo; j <= hi; ++j) {
    num += weights_[j] * target_[j];
    den += weights_[j];
  }
  return num / den;
}

double Annealer::cost(const State& state) const {
  double total = 0.0;
  std::size_t k = 0;
  for (std::size_t j = 0; j < grid_.size(); ++j) {
    while (k < state.size() && state[k].hi < j) ++k;
    double d = (k < state.size() && state[k].lo <= j && j <= state[k].hi)
                   ? state[k].value
                   : 0.0;
    double diff = d - target_[j];
    total += weights_[j] * diff * diff;
  }
  return total;
}

Annealer::State Annealer::initial_state() const {
  double best_abs = 0.0;
  std::size_t best_a = kNone;
  for (std::size_t a = 0; a < min_window_.size(); ++a) {
    if (min_window_[a] == kNone) continue;
    double m = std::abs(restricted_mean(a, min_window_[a]));
    if (m > best_abs) {
      best_abs = m;
      best_a = a;
    }
  }
  if (best_a == kNone || best_abs == 0.0) return {};
  std::size_t b = min_window_[best_a];
  return {{best_a, b, restricted_mean(best_a, b)}};
}

void Annealer::append_slots(
    const State& state,
    std::vector<std::pair<std::size_t, std::size_t>>& out) const {
  out.clear();
  std::size_t p = grid_.size();
  std::size_t piece = 0;
  for (std::size_t a = 0; a < p; ++a) {
    if (min_window_[a] == kNone) continue;
    std::size_t b = min_window_[a];
    while (piece < state.size() && state[piece].hi < a) ++piece;
    // The slot [a, b] must sit strictly inside a gap between pieces.
    if (piece < state.size() && state[piece].lo <= b) continue;
    out.push_back({a, b});
  }
}

Annealer::State Annealer::propose(const State& state, Rng& rng) const {
  enum MoveKind { kValue, kCenter, kLength, kAppend, kDrop };
  std::vector<MoveKind> applicable;
  if (!state.empty()) {
    applicable.push_back(kValue);
    applicable.push_back(kCenter);
    applicable.push_back(kLength);
  }
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  if (state.size() < static_cast<std::size_t>(cfg_.max_pieces)) {
    append_slots(state, slots);
    if (!slots.empty()) applicable.push_back(kAppend);
  }
  if (!state.empty()) applicable.push_back(kDrop);
  if (applicable.empty()) {
    // Empty state with nowhere to append: min_length fills the span.
    return state;
  }

  MoveKind kind = applicable[rng.uniform_below(applicable.size())];
  State next = state;
  std::size_t p = grid_.size();
  double slack = grid_.tolerance();
  switch (kind) {
    case kValue: {
      std::size_t k = rng.uniform_below(next.size());
      next[k].value += rng.normal() * value_scale_;
      break;
    }
    case kCenter: {
      std::size_t k = rng.uniform_below(next.size());
      auto step = static_cast<std::ptrdiff_t>(rng.uniform_below(6));
      std::ptrdiff_t d = step < 3 ? step - 3 : step - 2;  // {-3,-2,-1,1,2,3}
      auto lo = static_cast<std::ptrdiff_t>(next[k].lo);
      auto hi = static_cast<std::ptrdiff_t>(next[k].hi);
      std::ptrdiff_t lo_min = k > 0
          ? static_cast<std::ptrdiff_t>(next[k - 1].hi) + 1 : 0;
      std::ptrdiff_t hi_max = k + 1 < next.size()
          ? static_cast<std::ptrdiff_t>(next[k + 1].lo) - 1
          : static_cast<std::ptrdiff_t>(p) - 1;
      d = std::clamp(d, lo_min - lo, hi_max - hi);
      auto new_lo = static_cast<std::size_t>(lo + d);
      auto new_hi = static_cast<std::size_t>(hi + d);
      if (grid_[new_hi] - grid_[new_lo] < min_length_ - slack) {
        break;  // index shifts change realized length on irregular grids
      }
      next[k].lo = new_lo;
      next[k].hi = new_hi;
      break;
    }
    case kLength: {
      std::size_t k = rng.uniform_below(next.size());
      auto step = static_cast<std::ptrdiff_t>(rng.uniform_below(6));
      std::ptrdiff_t g = step < 3 ? step - 3 : step - 2;  // {-3,-2,-1,1,2,3}
      auto lo = static_cast<std::ptrdiff_t>(next[k].lo);
      auto hi = static_cast<std::ptrdiff_t>(next[k].hi);
      std::ptrdiff_t lo_min = k > 0
          ? static_cast<std::ptrdiff_t>(next[k - 1].hi) + 1 : 0;
      std::ptrdiff_t hi_max = k + 1 < next.size()
          ? static_cast<std::ptrdiff_t>(next[k + 1].lo) - 1
          : static_cast<std::ptrdiff_t>(p) - 1;
      std::ptrdiff_t new_lo = std::clamp(lo - g, lo_min,
                                         static_cast<std::ptrdiff_t>(p) - 1);
      std::ptrdiff_t new_hi = std::clamp(hi + g, std::ptrdiff_t{0}, hi_max);
      if (new_lo >= new_hi) break;  // infeasible: no-op
      if (grid_[static_cast<std::size_t>(new_hi)] -
              grid_[static_cast<std::size_t>(new_lo)] <
          min_length_ - slack) {
        break;  // violates the length floor: no-op
      }
      next[k].lo = static_cast<std::size_t>(new_lo);
      next[k].hi = static_cast<std::size_t>(new_hi);
      break;
    }
    case kAppend: {
      auto [a, b] = slots[rng.uniform_below(slots.size())];
      Piece piece{a, b, restricted_mean(a, b)};
      auto pos = std::upper_bound(
          next.begin(), next.end(), piece,
          [](const Piece& x, const Piece& y) { return x.lo < y.lo; });
      next.insert(pos, piece);
      break;
    }
    case kDrop: {
      std::size_t k = rng.uniform_below(next.size());
      next.erase(next.begin() + static_cast<std::ptrdiff_t>(k));
      break;
    }
  }
  return next;
}

double Annealer::calibrate_temperature(const State& state, Rng& rng) const {
  double base = cost(state);
  std::vector<double> uphill;
  for (int i = 0; i < 100; ++i) {
    double delta = cost(propose(state, rng)) - base;
    if (delta > 0.0) uphill.push_back(delta);
  }
  if (uphill.empty()) return 1.0;
  std::sort(uphill.begin(), uphill.end());
  std::size_t m = uphill.size() / 2;
  double median = uphill.size() % 2 == 1
                      ? uphill[m]
                      : 0.5 * (uphill[m - 1] + uphill[m]);
  // exp(-median / te) = 1/2 puts uphill acceptance near one half.
  return median / std::numbers::ln2;
}

StepwiseResult Annealer::run(Rng& rng) const {
  State state = initial_state();
  double te = cfg_.te > 0.0 ? cfg_.te : calibrate_temperature(state, rng);
  double current = cost(state);
  double initial = current;
  State best = state;
  double best_cost = current;
  for (int i = 1; i <= cfg_.iterations; ++i) {
    State prop = propose(state, rng);
    double pc = cost(prop);
    double delta = pc - current;
    bool accept = delta <= 0.0;
    if (!accept) {
      double tau = annealing_temperature(i, te);
      accept = rng.uniform01() < std::exp(-delta / tau);
    }
    if (accept) {
      state = std::move(prop);
      current = pc;
      if (current < best_cost) {
        best = state;
        best_cost = current;
      }
    }
  }
  return {to_function(best), best_cost, initial, te};
}

DisjointStepFunction Annealer::to_function(const State& state) const {
  std::vector<DisjointPiece> pieces;
  pieces.reserve(state.size());
  for (const auto& piece : state) {
    pieces.push_back({{grid_[piece.lo], grid_[piece.hi]}, piece.value});
  }
  return make_disjoint_step_function(std::move(pieces));
}

StepwiseResult stepwise_estimate(const TimeGrid& grid,
                                 std::span<const double> target,
                                 const SannConfig& cfg) {
  Annealer annealer(grid, target, cfg);
  Rng rng(cfg.seed);
  return annealer.run(rng);
}

}  // namespace bliss
