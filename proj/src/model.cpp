#include "bliss/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bliss/errors.hpp"

namespace bliss {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sample_variance(const Eigen::VectorXd& y) {
  double m = y.mean();
  return (y.array() - m).square().sum() / static_cast<double>(y.size() - 1);
}

// Unnormalized Gamma(a, b) log density in the half-length.
double length_log_weight(double len, double a, double b) {
  return (a - 1.0) * std::log(len) - b * len;
}

}  // namespace

Hyperparameters default_hyperparameters(const FunctionalDataset& data, int K) {
  if (K < 1) throw ConfigError("default_hyperparameters: K must be positive");
  Hyperparameters hp;
  hp.K = K;
  hp.a = 1.0 / (5.0 * static_cast<double>(K));
  hp.b = 1.0;
  hp.v = 5.0;
  double ybar = data.outcomes().mean();
  double v0 = 100.0 * ybar * ybar;
  if (v0 == 0.0) v0 = 100.0 * sample_variance(data.outcomes());
  if (!(v0 > 0.0)) {
    throw DataError("default_hyperparameters: outcomes have zero mean and zero variance");
  }
  hp.v0 = v0;
  hp.gamma = 0.5;
  hp.K0 = K;
  hp.eps = data.grid().min_step();
  return hp;
}

void validate(const Hyperparameters& hp, const TimeGrid& grid) {
  if (hp.K < 1) throw ConfigError("hyperparameters: K must be positive");
  if (!(hp.a > 0.0)) throw ConfigError("hyperparameters: a must be positive");
  if (!(hp.b > 0.0)) throw ConfigError("hyperparameters: b must be positive");
  if (!(hp.v > 0.0)) throw ConfigError("hyperparameters: v must be positive");
  if (!(hp.v0 > 0.0)) throw ConfigError("hyperparameters: v0 must be positive");
  if (!(hp.gamma >= 0.0 && hp.gamma <= 1.0)) {
    throw ConfigError("hyperparameters: gamma must lie in [0, 1]");
  }
  if (hp.K0 < 1) throw ConfigError("hyperparameters: K0 must be positive");
  if (!(hp.eps > 0.0) || hp.eps > grid.span().length()) {
    throw ConfigError("hyperparameters: eps must lie in (0, span length]");
  }
}

void realize_state(ParamState& state, const TimeGrid& grid) {
  std::size_t K = state.centers.size();
  if (state.half_lengths.size() != K || state.weights.size() != K) {
    throw ConfigError("realize_state: inconsistent state dimensions");
  }
  state.lo.assign(K, 0);
  state.hi.assign(K, 0);
  for (std::size_t k = 0; k < K; ++k) {
    auto idx = grid.index_of(state.centers[k]);
    if (!idx) throw ConfigError("realize_state: center is not a grid point");
    auto lengths = admissible_half_lengths(grid, *idx);
    auto pos = find_admissible(lengths, state.half_lengths[k], grid.tolerance());
    if (!pos) throw ConfigError("realize_state: half-length is not admissible");
    state.lo[k] = lengths[*pos].lo;
    state.hi[k] = lengths[*pos].hi;
  }
}

StepFunction to_step_function(const ParamState& state, const Domain& domain) {
  std::vector<Interval> intervals(state.centers.size());
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    intervals[k] = {state.centers[k], state.half_lengths[k]};
  }
  return make_step_function(domain, std::move(intervals), state.weights);
}

Eigen::MatrixXd design_matrix(const FunctionalDataset& data,
                              const std::vector<ClosedInterval>& intervals) {
  Eigen::Index n = data.n();
  auto K = static_cast<Eigen::Index>(intervals.size());
  Eigen::MatrixXd X(n, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& iv = intervals[static_cast<std::size_t>(k)];
    double len = iv.length();
    if (!(len > 0.0)) {
      throw NumericError("design_matrix: degenerate interval");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      X(i, k) = data.curve_integral(i, iv) / len;
    }
  }
  return X;
}

Eigen::MatrixXd design_matrix(const FunctionalDataset& data,
                              const std::vector<std::size_t>& lo,
                              const std::vector<std::size_t>& hi) {
  if (lo.size() != hi.size()) {
    throw ConfigError("design_matrix: endpoint vectors differ in size");
  }
  Eigen::Index n = data.n();
  auto K = static_cast<Eigen::Index>(lo.size());
  const auto& grid = data.grid();
  Eigen::MatrixXd X(n, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    std::size_t a = lo[static_cast<std::size_t>(k)];
    std::size_t b = hi[static_cast<std::size_t>(k)];
    if (a >= b || b >= grid.size()) {
      throw ConfigError("design_matrix: invalid endpoint indices");
    }
    double len = grid[b] - grid[a];
    for (Eigen::Index i = 0; i < n; ++i) {
      X(i, k) = data.curve_integral(i, a, b) / len;
    }
  }
  return X;
}

double largest_eigenvalue(const Eigen::MatrixXd& gram) {
  if (gram.rows() == 0 || gram.rows() != gram.cols()) {
    throw ConfigError("largest_eigenvalue: matrix must be square and nonempty");
  }
  Eigen::Index K = gram.rows();
  if (gram.isZero(0.0)) return 0.0;

  constexpr double kTol = 1e-10;
  constexpr int kMaxIter = 1000;
  double best = 0.0;
  Eigen::Index restarts = std::min<Eigen::Index>(K, 32);
  for (Eigen::Index s = 0; s <= restarts; ++s) {
    Eigen::VectorXd v;
    if (s == 0) {
      v = Eigen::VectorXd::Ones(K);
    } else {
      v = Eigen::VectorXd::Unit(K, s - 1);
    }
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < kMaxIter; ++it) {
      Eigen::VectorXd w = gram * v;
      double rayleigh = v.dot(w);
      double norm = w.norm();
      if (norm == 0.0) {
        lambda = 0.0;
        break;
      }
      v = w / norm;
      if (std::abs(rayleigh - lambda) <= kTol * std::max(1.0, std::abs(rayleigh))) {
        lambda = rayleigh;
        break;
      }
      lambda = rayleigh;
    }
    best = std::max(best, lambda);
  }
  return best;
}

Eigen::MatrixXd ridge_gram(const Eigen::MatrixXd& design, double v) {
  if (!(v > 0.0)) throw ConfigError("ridge_gram: v must be positive");
  Eigen::Index K = design.cols();
  if (K == 0) throw ConfigError("ridge_gram: empty design");
  Eigen::MatrixXd gram = design.transpose() * design;
  if (gram.isZero(0.0)) {
    return Eigen::MatrixXd::Identity(K, K);
  }
  double lambda = largest_eigenvalue(gram);
  if (!(lambda > 0.0)) {
    return Eigen::MatrixXd::Identity(K, K);
  }
  return gram + v * lambda * Eigen::MatrixXd::Identity(K, K);
}

double log_prior(const ParamState& state, const Hyperparameters& hp,
                 const FunctionalDataset& data) {
  auto K = static_cast<std::size_t>(hp.K);
  if (state.centers.size() != K || state.half_lengths.size() != K ||
      state.weights.size() != K) {
    throw ConfigError("log_prior: state dimensions do not match K");
  }
  if (!(state.noise_var > 0.0) || !std::isfinite(state.noise_var)) {
    return kNegInf;
  }
  if (!std::isfinite(state.intercept)) return kNegInf;

  const auto& grid = data.grid();
  auto p = static_cast<double>(grid.size());
  double s2 = state.noise_var;
  double lp = -std::log(s2);  // improper noise-variance prior
  lp += -0.5 * std::log(2.0 * std::numbers::pi * hp.v0 * s2) -
        state.intercept * state.intercept / (2.0 * hp.v0 * s2);

  std::vector<std::size_t> lo(K), hi(K);
  for (std::size_t k = 0; k < K; ++k) {
    auto idx = grid.index_of(state.centers[k]);
    if (!idx) return kNegInf;
    lp += -std::log(p);  // uniform center over grid points
    auto lengths = admissible_half_lengths(grid, *idx);
    auto pos = find_admissible(lengths, state.half_lengths[k], grid.tolerance());
    if (!pos) return kNegInf;
    // Discrete length prior up to one global constant. A per-center
    // normalizer would make the density depend on the center even at a
    // fixed realized design, which the center conditional does not.
    lp += length_log_weight(state.half_lengths[k], hp.a, hp.b);
    lo[k] = lengths[*pos].lo;
    hi[k] = lengths[*pos].hi;
  }

  Eigen::MatrixXd X = design_matrix(data, lo, hi);
  Eigen::MatrixXd R = ridge_gram(X, hp.v);
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (llt.info() != Eigen::Success) return kNegInf;
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < R.rows(); ++i) {
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  }
  auto n = static_cast<double>(data.n());
  Eigen::Map<const Eigen::VectorXd> w(state.weights.data(),
                                      static_cast<Eigen::Index>(K));
  double quad = w.dot(R * w);
  double kd = static_cast<double>(K);
  lp += -0.5 * kd * std::log(2.0 * std::numbers::pi) -
        0.5 * kd * std::log(n * s2) + 0.5 * logdet - quad / (2.0 * n * s2);
  return std::isfinite(lp) ? lp : kNegInf;
}

double log_likelihood(const ParamState& state, const FunctionalDataset& data) {
  std::size_t K = state.centers.size();
  if (state.half_lengths.size() != K || state.weights.size() != K) {
    throw ConfigError("log_likelihood: inconsistent state dimensions");
  }
  if (!(state.noise_var > 0.0) || !std::isfinite(state.noise_var)) {
    return kNegInf;
  }
  const auto& grid = data.grid();
  Domain domain = grid.span();
  Eigen::Index n = data.n();
  Eigen::VectorXd fitted = Eigen::VectorXd::Constant(n, state.intercept);
  for (std::size_t k = 0; k < K; ++k) {
    ClosedInterval iv =
        realize_interval({state.centers[k], state.half_lengths[k]}, domain);
    double len = iv.length();
    if (len == 0.0) {
      if (state.weights[k] != 0.0) return kNegInf;
      continue;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      fitted(i) += state.weights[k] * data.curve_integral(i, iv) / len;
    }
  }
  double sse = (data.outcomes() - fitted).squaredNorm();
  auto nd = static_cast<double>(n);
  double ll = -0.5 * nd * std::log(2.0 * std::numbers::pi * state.noise_var) -
              sse / (2.0 * state.noise_var);
  return std::isfinite(ll) ? ll : kNegInf;
}

std::vector<double> prior_alpha(const Hyperparameters& hp,
                                const TimeGrid& grid, int draws, Rng& rng) {
  if (hp.K < 1) throw ConfigError("prior_alpha: K must be positive");
  if (!(hp.a > 0.0) || !(hp.b > 0.0)) {
    throw ConfigError("prior_alpha: a and b must be positive");
  }
  if (draws < 1) throw ConfigError("prior_alpha: draws must be positive");

  std::size_t p = grid.size();
  std::vector<std::vector<AdmissibleLength>> lengths(p);
  std::vector<std::vector<double>> probs(p);
  for (std::size_t c = 0; c < p; ++c) {
    lengths[c] = admissible_half_lengths(grid, c);
    std::vector<double> logw(lengths[c].size());
    for (std::size_t i = 0; i < logw.size(); ++i) {
      logw[i] = length_log_weight(lengths[c][i].value, hp.a, hp.b);
    }
    probs[c] = normalized_from_log(logw);
  }

  std::vector<double> alpha(p, 0.0);
  std::vector<char> covered(p, 0);
  for (int d = 0; d < draws; ++d) {
    std::fill(covered.begin(), covered.end(), 0);
    for (int k = 0; k < hp.K; ++k) {
      auto c = static_cast<std::size_t>(rng.uniform_below(p));
      std::size_t i = draw_categorical(rng, probs[c]);
      const auto& al = lengths[c][i];
      for (std::size_t j = al.lo; j < al.hi; ++j) covered[j] = 1;
      if (al.hi == p - 1) covered[p - 1] = 1;
    }
    for (std::size_t j = 0; j < p; ++j) {
      alpha[j] += covered[j];
    }
  }
  for (double& a : alpha) a /= static_cast<double>(draws);
  return alpha;
}

std::vector<double> normalized_from_log(std::span<const double> logw) {
  double m = kNegInf;
  for (double x : logw) {
    if (std::isfinite(x)) m = std::max(m, x);
  }
  if (m == kNegInf) return {};
  std::vector<double> out(logw.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    if (std::isfinite(logw[i])) {
      out[i] = std::exp(logw[i] - m);
      total += out[i];
    }
  }
  for (double& x : out) x /= total;
  return out;
}

std::size_t draw_categorical(Rng& rng, std::span<const double> probs) {
  if (probs.empty()) {
    throw NumericError("draw_categorical: empty probability vector");
  }
  double u = rng.uniform01();
  double cum = 0.0;
  std::size_t last_positive = probs.size() - 1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) {
      last_positive = i;
      cum += probs[i];
      if (u < cum) return i;
    }
  }
  return last_positive;
}

}  // namespace bliss
