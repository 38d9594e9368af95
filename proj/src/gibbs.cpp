#include "bliss/gibbs.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "bliss/errors.hpp"

namespace bliss {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sample_variance(const Eigen::VectorXd& y) {
  double m = y.mean();
  return (y.array() - m).square().sum() / static_cast<double>(y.size() - 1);
}

// log det and quadratic form of the SPD ridge matrix via one Cholesky.
struct RidgeSummary {
  double logdet = 0.0;
  double quad = 0.0;
  bool ok = false;
};

RidgeSummary summarize_ridge(const Eigen::MatrixXd& ridge,
                             const Eigen::VectorXd& w) {
  RidgeSummary out;
  Eigen::LLT<Eigen::MatrixXd> llt(ridge);
  if (llt.info() != Eigen::Success) return out;
  for (Eigen::Index i = 0; i < ridge.rows(); ++i) {
    out.logdet += 2.0 * std::log(llt.matrixL()(i, i));
  }
  out.quad = w.dot(ridge * w);
  out.ok = true;
  return out;
}

}  // namespace

void validate(const GibbsConfig& cfg) {
  if (cfg.iterations < 1) {
    throw ConfigError("gibbs: iterations must be positive");
  }
  if (cfg.burn_in < 0 || cfg.burn_in >= cfg.iterations) {
    throw ConfigError("gibbs: burn-in must lie in [0, iterations)");
  }
  if (cfg.thin < 1) throw ConfigError("gibbs: thin must be positive");
  if (retained_draws(cfg) < 1) {
    throw ConfigError("gibbs: configuration retains no draws");
  }
}

std::int64_t retained_draws(const GibbsConfig& cfg) {
  return (cfg.iterations - cfg.burn_in) / cfg.thin;
}

GibbsSampler::GibbsSampler(const FunctionalDataset& data,
                           const Hyperparameters& hp)
    : data_(data), hp_(hp) {
  validate(hp_, data_.grid());
  std::size_t p = data_.grid().size();
  admissible_.resize(p);
  length_log_prior_.resize(p);
  for (std::size_t c = 0; c < p; ++c) {
    admissible_[c] = admissible_half_lengths(data_.grid(), c);
    auto& logw = length_log_prior_[c];
    logw.resize(admissible_[c].size());
    for (std::size_t i = 0; i < logw.size(); ++i) {
      double len = admissible_[c][i].value;
      logw[i] = (hp_.a - 1.0) * std::log(len) - hp_.b * len;
    }
  }
}

void GibbsSampler::init(Rng& rng) {
  std::size_t p = data_.grid().size();
  auto K = static_cast<std::size_t>(hp_.K);
  ParamState s;
  s.centers.resize(K);
  s.half_lengths.resize(K);
  s.weights.assign(K, 0.0);
  s.lo.resize(K);
  s.hi.resize(K);
  center_idx_.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    auto c = static_cast<std::size_t>(rng.uniform_below(p));
    const auto& shortest = admissible_[c].front();
    center_idx_[k] = c;
    s.centers[k] = data_.grid()[c];
    s.half_lengths[k] = shortest.value;
    s.lo[k] = shortest.lo;
    s.hi[k] = shortest.hi;
  }
  s.intercept = data_.outcomes().mean();
  s.noise_var = sample_variance(data_.outcomes());
  if (!(s.noise_var > 0.0)) {
    throw DataError("gibbs: outcomes are constant; noise variance start is zero");
  }
  state_ = std::move(s);
  refresh_design();
}

void GibbsSampler::set_state(const ParamState& state) {
  ParamState s = state;
  realize_state(s, data_.grid());
  if (s.centers.size() != static_cast<std::size_t>(hp_.K)) {
    throw ConfigError("gibbs: state dimension does not match K");
  }
  if (!(s.noise_var > 0.0)) {
    throw ConfigError("gibbs: noise variance must be positive");
  }
  center_idx_.resize(s.centers.size());
  for (std::size_t k = 0; k < s.centers.size(); ++k) {
    center_idx_[k] = *data_.grid().index_of(s.centers[k]);
  }
  state_ = std::move(s);
  refresh_design();
}

Eigen::VectorXd GibbsSampler::interval_column(std::size_t lo,
                                              std::size_t hi) const {
  const auto& grid = data_.grid();
  double len = grid[hi] - grid[lo];
  Eigen::VectorXd col(data_.n());
  for (Eigen::Index i = 0; i < data_.n(); ++i) {
    col(i) = data_.curve_integral(i, lo, hi) / len;
  }
  return col;
}

void GibbsSampler::refresh_design() {
  auto K = static_cast<Eigen::Index>(state_.centers.size());
  design_.resize(data_.n(), K);
  for (Eigen::Index k = 0; k < K; ++k) {
    design_.col(k) = interval_column(state_.lo[static_cast<std::size_t>(k)],
                                     state_.hi[static_cast<std::size_t>(k)]);
  }
}

void GibbsSampler::intercept_weights_conditional(
    Eigen::VectorXd& mean, Eigen::MatrixXd& precision) const {
  Eigen::Index K = design_.cols();
  Eigen::Index n = data_.n();
  Eigen::MatrixXd ridge = ridge_gram(design_, hp_.v);
  precision.resize(K + 1, K + 1);
  precision(0, 0) =
      static_cast<double>(n) + 1.0 / hp_.v0;
  Eigen::VectorXd col_sums = design_.colwise().sum();
  precision.block(0, 1, 1, K) = col_sums.transpose();
  precision.block(1, 0, K, 1) = col_sums;
  precision.block(1, 1, K, K) =
      design_.transpose() * design_ + ridge / static_cast<double>(n);
  Eigen::VectorXd rhs(K + 1);
  rhs(0) = data_.outcomes().sum();
  rhs.tail(K) = design_.transpose() * data_.outcomes();
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericError("gibbs: intercept/weights precision is not positive definite");
  }
  mean = llt.solve(rhs);
}

void GibbsSampler::sample_intercept_and_weights(Rng& rng) {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
  intercept_weights_conditional(mean, precision);
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  Eigen::Index dim = mean.size();
  Eigen::VectorXd z(dim);
  for (Eigen::Index i = 0; i < dim; ++i) z(i) = rng.normal();
  // cov(L^-T z) = P^{-1}; scale by the current noise standard deviation
  Eigen::VectorXd delta = llt.matrixU().solve(z);
  Eigen::VectorXd draw = mean + std::sqrt(state_.noise_var) * delta;
  state_.intercept = draw(0);
  for (Eigen::Index k = 1; k < dim; ++k) {
    state_.weights[static_cast<std::size_t>(k - 1)] = draw(k);
  }
}

void GibbsSampler::noise_variance_conditional(double& shape,
                                              double& scale) const {
  auto n = static_cast<double>(data_.n());
  auto K = static_cast<double>(design_.cols());
  Eigen::Map<const Eigen::VectorXd> w(
      state_.weights.data(), static_cast<Eigen::Index>(state_.weights.size()));
  Eigen::VectorXd residual =
      data_.outcomes() -
      Eigen::VectorXd::Constant(data_.n(), state_.intercept) - design_ * w;
  double sse = residual.squaredNorm();
  Eigen::MatrixXd ridge = ridge_gram(design_, hp_.v);
  double quad = state_.intercept * state_.intercept / hp_.v0 +
                w.dot(ridge * w) / n;
  shape = 0.5 * (n + K + 1.0);
  scale = 0.5 * sse + 0.5 * quad;
}

void GibbsSampler::sample_noise_variance(Rng& rng) {
  double shape = 0.0, scale = 0.0;
  noise_variance_conditional(shape, scale);
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw NumericError("gibbs: degenerate noise-variance conditional");
  }
  state_.noise_var = rng.inv_gamma(shape, scale);
}

double GibbsSampler::candidate_log_weight(
    std::size_t k, const Eigen::VectorXd& column,
    const Eigen::VectorXd& base_residual) const {
  auto K = static_cast<Eigen::Index>(state_.weights.size());
  auto n = static_cast<double>(data_.n());
  double wk = state_.weights[k];
  double sse = (base_residual - column * wk).squaredNorm();

  // Gram of the design with column k replaced by the candidate column.
  Eigen::MatrixXd gram = design_.transpose() * design_;
  auto ki = static_cast<Eigen::Index>(k);
  for (Eigen::Index j = 0; j < K; ++j) {
    double g = column.dot(design_.col(j));
    gram(ki, j) = g;
    gram(j, ki) = g;
  }
  gram(ki, ki) = column.squaredNorm();

  Eigen::MatrixXd ridge;
  if (gram.isZero(0.0)) {
    ridge = Eigen::MatrixXd::Identity(K, K);
  } else {
    double lambda = largest_eigenvalue(gram);
    if (!(lambda > 0.0)) {
      ridge = Eigen::MatrixXd::Identity(K, K);
    } else {
      ridge = gram + hp_.v * lambda * Eigen::MatrixXd::Identity(K, K);
    }
  }
  Eigen::Map<const Eigen::VectorXd> w(state_.weights.data(), K);
  RidgeSummary rs = summarize_ridge(ridge, w);
  if (!rs.ok) return kNegInf;

  double s2 = state_.noise_var;
  auto kd = static_cast<double>(K);
  return -sse / (2.0 * s2) - 0.5 * kd * std::log(n * s2) + 0.5 * rs.logdet -
         rs.quad / (2.0 * n * s2);
}

std::vector<double> GibbsSampler::center_log_weights(
    std::size_t k, std::vector<Candidate>& cands) const {
  std::size_t p = data_.grid().size();
  Eigen::Map<const Eigen::VectorXd> w(
      state_.weights.data(), static_cast<Eigen::Index>(state_.weights.size()));
  Eigen::VectorXd base_residual =
      data_.outcomes() -
      Eigen::VectorXd::Constant(data_.n(), state_.intercept) - design_ * w +
      design_.col(static_cast<Eigen::Index>(k)) * state_.weights[k];

  cands.resize(p);
  std::vector<double> logw(p);
  for (std::size_t c = 0; c < p; ++c) {
    const auto& nearest = nearest_admissible(admissible_[c], state_.half_lengths[k]);
    cands[c] = {nearest.value, nearest.lo, nearest.hi};
    Eigen::VectorXd column = interval_column(nearest.lo, nearest.hi);
    logw[c] = candidate_log_weight(k, column, base_residual);
  }
  return logw;
}

std::vector<double> GibbsSampler::half_length_log_weights(
    std::size_t k) const {
  std::size_t c = center_idx_[k];
  const auto& lengths = admissible_[c];
  Eigen::Map<const Eigen::VectorXd> w(
      state_.weights.data(), static_cast<Eigen::Index>(state_.weights.size()));
  Eigen::VectorXd base_residual =
      data_.outcomes() -
      Eigen::VectorXd::Constant(data_.n(), state_.intercept) - design_ * w +
      design_.col(static_cast<Eigen::Index>(k)) * state_.weights[k];

  std::vector<double> logw(lengths.size());
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    Eigen::VectorXd column = interval_column(lengths[i].lo, lengths[i].hi);
    logw[i] = candidate_log_weight(k, column, base_residual) +
              length_log_prior_[c][i];
  }
  return logw;
}

std::vector<double> GibbsSampler::center_distribution(std::size_t k) const {
  std::vector<Candidate> cands;
  return normalized_from_log(center_log_weights(k, cands));
}

std::vector<double> GibbsSampler::half_length_distribution(
    std::size_t k) const {
  return normalized_from_log(half_length_log_weights(k));
}

void GibbsSampler::apply_interval(std::size_t k, std::size_t center_idx,
                                  const Candidate& cand) {
  center_idx_[k] = center_idx;
  state_.centers[k] = data_.grid()[center_idx];
  state_.half_lengths[k] = cand.half_length;
  state_.lo[k] = cand.lo;
  state_.hi[k] = cand.hi;
  design_.col(static_cast<Eigen::Index>(k)) =
      interval_column(cand.lo, cand.hi);
}

void GibbsSampler::sample_center(std::size_t k, Rng& rng) {
  std::vector<Candidate> cands;
  std::vector<double> probs = normalized_from_log(center_log_weights(k, cands));
  if (probs.empty()) {
    ++degenerate_steps_;  // no finite weight; keep the current center
    return;
  }
  std::size_t c = draw_categorical(rng, probs);
  apply_interval(k, c, cands[c]);
}

void GibbsSampler::sample_half_length(std::size_t k, Rng& rng) {
  std::vector<double> probs = normalized_from_log(half_length_log_weights(k));
  if (probs.empty()) {
    ++degenerate_steps_;  // no finite weight; keep the current half-length
    return;
  }
  std::size_t i = draw_categorical(rng, probs);
  const auto& al = admissible_[center_idx_[k]][i];
  apply_interval(k, center_idx_[k], {al.value, al.lo, al.hi});
}

void GibbsSampler::sweep(Rng& rng) {
  sample_intercept_and_weights(rng);
  sample_noise_variance(rng);
  for (std::size_t k = 0; k < state_.centers.size(); ++k) {
    sample_center(k, rng);
  }
  for (std::size_t k = 0; k < state_.centers.size(); ++k) {
    sample_half_length(k, rng);
  }
}

namespace {

Chain run_gibbs_impl(const FunctionalDataset& data, const Hyperparameters& hp,
                     const GibbsConfig& cfg, const ParamState* start) {
  validate(cfg);
  GibbsSampler sampler(data, hp);
  Rng rng(cfg.seed);
  if (start != nullptr) {
    sampler.set_state(*start);
  } else {
    sampler.init(rng);
  }
  Chain chain{Rng::kAlgorithm, cfg,      hp, data.fingerprint(),
              data.grid(),     {},       0};
  chain.states.reserve(static_cast<std::size_t>(retained_draws(cfg)));
  for (std::int64_t s = 1; s <= cfg.iterations; ++s) {
    try {
      sampler.sweep(rng);
    } catch (const NumericError& err) {
      throw NumericError("gibbs: iteration " + std::to_string(s) + ": " +
                         err.what());
    }
    if (s > cfg.burn_in && (s - cfg.burn_in) % cfg.thin == 0) {
      chain.states.push_back(sampler.state());
    }
  }
  chain.degenerate_steps = sampler.degenerate_steps();
  return chain;
}

}  // namespace

Chain run_gibbs(const FunctionalDataset& data, const Hyperparameters& hp,
                const GibbsConfig& cfg) {
  return run_gibbs_impl(data, hp, cfg, nullptr);
}

Chain run_gibbs_from(const FunctionalDataset& data, const Hyperparameters& hp,
                     const GibbsConfig& cfg, const ParamState& start) {
  return run_gibbs_impl(data, hp, cfg, &start);
}

}  // namespace bliss
