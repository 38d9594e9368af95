#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "bliss/core.hpp"
#include "bliss/errors.hpp"
#include "bliss/gibbs.hpp"
#include "bliss/model.hpp"
#include "bliss/rng.hpp"

using namespace bliss;

namespace {

FunctionalDataset random_dataset(const TimeGrid& grid, int n,
                                 std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd curves(n, static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index i = 0; i < curves.rows(); ++i)
    for (Eigen::Index j = 0; j < curves.cols(); ++j)
      curves(i, j) = rng.normal();
  Eigen::VectorXd y(n);
  // Outcomes carry a real signal from one interval so conditionals are
  // informative: y = 0.5 + 2 * mean(x over [t1, t3]) + noise.
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> row(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j)
      row[j] = curves(i, static_cast<Eigen::Index>(j));
    const double mean = partial_mean(grid, row, {grid[1], grid[3]});
    y(i) = 0.5 + 2.0 * mean + 0.5 * rng.normal();
  }
  return FunctionalDataset(grid, curves, y);
}

// Interval-mean design column recomputed through the public quadrature.
Eigen::VectorXd oracle_column(const FunctionalDataset& data, std::size_t lo,
                              std::size_t hi) {
  const auto& grid = data.grid();
  Eigen::VectorXd col(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    std::vector<double> row(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j)
      row[j] = data.curves()(i, static_cast<Eigen::Index>(j));
    col(i) = partial_mean(grid, row, {grid[lo], grid[hi]});
  }
  return col;
}

Eigen::MatrixXd oracle_design(const FunctionalDataset& data,
                              const ParamState& state) {
  Eigen::MatrixXd X(data.n(),
                    static_cast<Eigen::Index>(state.lo.size()));
  for (std::size_t k = 0; k < state.lo.size(); ++k)
    X.col(static_cast<Eigen::Index>(k)) =
        oracle_column(data, state.lo[k], state.hi[k]);
  return X;
}

Eigen::MatrixXd oracle_ridge(const Eigen::MatrixXd& design, double v) {
  const Eigen::MatrixXd G = design.transpose() * design;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const double lambda = es.eigenvalues().maxCoeff();
  if (!(lambda > 0.0))
    return Eigen::MatrixXd::Identity(G.rows(), G.cols());
  return G + v * lambda * Eigen::MatrixXd::Identity(G.rows(), G.cols());
}

// Shared candidate log weight: Gaussian misfit at the current weights plus
// the normalized weight prior under the candidate design.
double oracle_candidate_log_weight(const FunctionalDataset& data,
                                   const Hyperparameters& hp,
                                   const ParamState& state, std::size_t k,
                                   std::size_t lo, std::size_t hi) {
  const auto n = static_cast<double>(data.n());
  const auto K = state.weights.size();
  Eigen::MatrixXd X = oracle_design(data, state);
  X.col(static_cast<Eigen::Index>(k)) = oracle_column(data, lo, hi);
  Eigen::Map<const Eigen::VectorXd> w(state.weights.data(),
                                      static_cast<Eigen::Index>(K));
  const Eigen::VectorXd residual =
      data.outcomes() -
      Eigen::VectorXd::Constant(data.n(), state.intercept) - X * w;
  const double sse = residual.squaredNorm();
  const Eigen::MatrixXd R = oracle_ridge(X, hp.v);
  const double logdet = std::log(R.determinant());
  const double s2 = state.noise_var;
  return -sse / (2.0 * s2) -
         0.5 * static_cast<double>(K) * std::log(n * s2) + 0.5 * logdet -
         w.dot(R * w) / (2.0 * n * s2);
}

std::size_t oracle_nearest(const std::vector<AdmissibleLength>& lengths,
                           double target) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < lengths.size(); ++i) {
    const double cur = std::abs(lengths[i].value - target);
    const double old = std::abs(lengths[best].value - target);
    if (cur < old) best = i;
  }
  return best;  // ascending values: the first minimum is the smaller one
}

std::vector<double> softmax(std::vector<double> logw) {
  double m = -std::numeric_limits<double>::infinity();
  for (const double x : logw) m = std::max(m, x);
  double total = 0.0;
  for (double& x : logw) {
    x = std::exp(x - m);
    total += x;
  }
  for (double& x : logw) x /= total;
  return logw;
}

ParamState admissible_state(const FunctionalDataset& data, Rng& rng, int K) {
  const auto& grid = data.grid();
  ParamState state;
  for (int k = 0; k < K; ++k) {
    const auto c = static_cast<std::size_t>(rng.uniform_below(grid.size()));
    const auto lengths = admissible_half_lengths(grid, c);
    const auto& pick = lengths[rng.uniform_below(lengths.size())];
    state.centers.push_back(grid[c]);
    state.half_lengths.push_back(pick.value);
    state.weights.push_back(rng.normal());
  }
  state.intercept = rng.normal();
  state.noise_var = 0.4 + rng.uniform01();
  realize_state(state, grid);
  return state;
}

}  // namespace

TEST_CASE("gibbs configuration validation") {
  GibbsConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  CHECK(retained_draws(cfg) == 5000);

  cfg = GibbsConfig{0, 0, 1, 0};
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = GibbsConfig{10, 10, 1, 0};
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = GibbsConfig{10, -1, 1, 0};
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = GibbsConfig{10, 0, 0, 0};
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = GibbsConfig{10, 9, 2, 0};  // floor(1 / 2) = 0 draws
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = GibbsConfig{10, 2, 3, 0};
  CHECK_NOTHROW(validate(cfg));
  CHECK(retained_draws(cfg) == 2);
}

TEST_CASE("run_gibbs is deterministic and carries its metadata") {
  const TimeGrid grid({0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 1.0});
  const FunctionalDataset data = random_dataset(grid, 10, 21);
  const Hyperparameters hp = default_hyperparameters(data, 2);
  GibbsConfig cfg{300, 100, 2, 77};

  const Chain one = run_gibbs(data, hp, cfg);
  const Chain two = run_gibbs(data, hp, cfg);
  CHECK(one.rng_algorithm == "splitmix64");
  CHECK(one.dataset_fingerprint == data.fingerprint());
  CHECK(one.grid.points() == grid.points());
  CHECK(one.degenerate_steps == 0);
  REQUIRE(one.states.size() ==
          static_cast<std::size_t>(retained_draws(cfg)));
  REQUIRE(two.states.size() == one.states.size());
  for (std::size_t s = 0; s < one.states.size(); ++s) {
    const ParamState& a = one.states[s];
    const ParamState& b = two.states[s];
    CHECK(a.centers == b.centers);
    CHECK(a.half_lengths == b.half_lengths);
    CHECK(a.weights == b.weights);
    CHECK(a.intercept == b.intercept);
    CHECK(a.noise_var == b.noise_var);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    CHECK(a.noise_var > 0.0);
    // Retained states stay on the discretization.
    for (std::size_t k = 0; k < a.centers.size(); ++k) {
      const auto idx = grid.index_of(a.centers[k]);
      REQUIRE(idx.has_value());
      const auto lengths = admissible_half_lengths(grid, *idx);
      CHECK(find_admissible(lengths, a.half_lengths[k], grid.tolerance())
                .has_value());
    }
  }

  // A different seed gives a different trajectory.
  GibbsConfig other = cfg;
  other.seed = 78;
  const Chain three = run_gibbs(data, hp, other);
  bool any_diff = false;
  for (std::size_t s = 0; s < three.states.size() && !any_diff; ++s)
    any_diff = three.states[s].intercept != one.states[s].intercept;
  CHECK(any_diff);
}

TEST_CASE("run_gibbs_from starts at the supplied state") {
  const TimeGrid grid({0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  const FunctionalDataset data = random_dataset(grid, 8, 3);
  const Hyperparameters hp = default_hyperparameters(data, 1);
  Rng rng(5);
  const ParamState start = admissible_state(data, rng, 1);

  GibbsConfig cfg{50, 0, 1, 9};
  const Chain a = run_gibbs_from(data, hp, cfg, start);
  const Chain b = run_gibbs_from(data, hp, cfg, start);
  REQUIRE(a.states.size() == 50);
  for (std::size_t s = 0; s < a.states.size(); ++s)
    CHECK(a.states[s].intercept == b.states[s].intercept);

  // Same seed, random init: a different first sweep output.
  const Chain c = run_gibbs(data, hp, cfg);
  bool differs = false;
  for (std::size_t s = 0; s < c.states.size() && !differs; ++s)
    differs = c.states[s].intercept != a.states[s].intercept;
  CHECK(differs);

  ParamState bad = start;
  bad.centers[0] = 0.3;  // off the grid
  CHECK_THROWS_AS(run_gibbs_from(data, hp, cfg, bad), ConfigError);
}

TEST_CASE("sampler initialization follows the documented start") {
  const TimeGrid grid({0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  const FunctionalDataset data = random_dataset(grid, 9, 13);
  const Hyperparameters hp = default_hyperparameters(data, 3);
  GibbsSampler sampler(data, hp);
  Rng rng(1);
  sampler.init(rng);
  const ParamState& s = sampler.state();
  REQUIRE(s.centers.size() == 3);
  CHECK(s.intercept == doctest::Approx(data.outcomes().mean()));
  const double ybar = data.outcomes().mean();
  const double var =
      (data.outcomes().array() - ybar).square().sum() /
      static_cast<double>(data.n() - 1);
  CHECK(s.noise_var == doctest::Approx(var));
  for (std::size_t k = 0; k < s.centers.size(); ++k) {
    CHECK(s.weights[k] == 0.0);
    const auto idx = grid.index_of(s.centers[k]);
    REQUIRE(idx.has_value());
    const auto lengths = admissible_half_lengths(grid, *idx);
    CHECK(s.half_lengths[k] == doctest::Approx(lengths.front().value));
  }

  // Constant outcomes cannot seed the noise variance.
  Eigen::MatrixXd curves = data.curves();
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(data.n(), 2.0);
  const FunctionalDataset degenerate(grid, curves, flat);
  GibbsSampler bad(degenerate, hp);
  Rng rng2(2);
  CHECK_THROWS_AS(bad.init(rng2), DataError);

  ParamState wrong;
  wrong.centers = {0.2};
  wrong.half_lengths = {0.2};
  wrong.weights = {0.0};
  wrong.noise_var = 1.0;
  CHECK_THROWS_AS(sampler.set_state(wrong), ConfigError);  // K mismatch
}

TEST_CASE("intercept and weight conditional matches the closed form") {
  const TimeGrid grid({0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  const FunctionalDataset data = random_dataset(grid, 12, 31);
  Hyperparameters hp = default_hyperparameters(data, 2);
  GibbsSampler sampler(data, hp);
  Rng rng(6);
  const ParamState state = admissible_state(data, rng, 2);
  sampler.set_state(state);

  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
  sampler.intercept_weights_conditional(mean, precision);

  const auto n = static_cast<double>(data.n());
  const Eigen::MatrixXd X = oracle_design(data, state);
  const Eigen::MatrixXd R = oracle_ridge(X, hp.v);
  Eigen::MatrixXd P(3, 3);
  P(0, 0) = n + 1.0 / hp.v0;
  P.block(0, 1, 1, 2) = X.colwise().sum();
  P.block(1, 0, 2, 1) = X.colwise().sum().transpose();
  P.block(1, 1, 2, 2) = X.transpose() * X + R / n;
  Eigen::VectorXd rhs(3);
  rhs(0) = data.outcomes().sum();
  rhs.tail(2) = X.transpose() * data.outcomes();
  const Eigen::VectorXd want = P.ldlt().solve(rhs);

  CHECK((precision - P).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((mean - want).cwiseAbs().maxCoeff() < 1e-9);

  // Monte Carlo agreement of the joint Gaussian draw.
  const int draws = 40000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(3, 3);
  Rng mc(7);
  for (int d = 0; d < draws; ++d) {
    sampler.set_state(state);
    sampler.sample_intercept_and_weights(mc);
    Eigen::VectorXd theta(3);
    theta(0) = sampler.state().intercept;
    theta(1) = sampler.state().weights[0];
    theta(2) = sampler.state().weights[1];
    sum += theta;
    sumsq += theta * theta.transpose();
  }
  const Eigen::VectorXd avg = sum / draws;
  const Eigen::MatrixXd cov =
      sumsq / draws - avg * avg.transpose();
  const Eigen::MatrixXd want_cov = state.noise_var * P.inverse();
  for (int i = 0; i < 3; ++i) {
    const double se = std::sqrt(want_cov(i, i) / draws);
    CHECK(std::abs(avg(i) - want(i)) < 4.0 * se);
    for (int j = 0; j < 3; ++j) {
      const double se_cov =
          std::sqrt((want_cov(i, i) * want_cov(j, j) +
                     want_cov(i, j) * want_cov(i, j)) /
                    draws);
      CHECK(std::abs(cov(i, j) - want_cov(i, j)) < 5.0 * se_cov);
    }
  }
}

TEST_CASE("noise variance conditional matches the closed form") {
  const TimeGrid grid({0.0, 0.25, 0.5, 0.75, 1.0});
  const FunctionalDataset data = random_dataset(grid, 10, 41);
  Hyperparameters hp = default_hyperparameters(data, 2);
  GibbsSampler sampler(data, hp);
  Rng rng(8);
  const ParamState state = admissible_state(data, rng, 2);
  sampler.set_state(state);

  double shape = 0.0, scale = 0.0;
  sampler.noise_variance_conditional(shape, scale);

  const auto n = static_cast<double>(data.n());
  CHECK(shape == doctest::Approx((n + 2.0 + 1.0) / 2.0));

  const Eigen::MatrixXd X = oracle_design(data, state);
  Eigen::Map<const Eigen::VectorXd> w(state.weights.data(), 2);
  const Eigen::VectorXd residual =
      data.outcomes() -
      Eigen::VectorXd::Constant(data.n(), state.intercept) - X * w;
  const Eigen::MatrixXd R = oracle_ridge(X, hp.v);
  const double want_scale =
      0.5 * residual.squaredNorm() +
      0.5 * (state.intercept * state.intercept / hp.v0 +
             w.dot(R * w) / n);
  CHECK(scale == doctest::Approx(want_scale).epsilon(1e-10));

  // Monte Carlo inverse-gamma moment check.
  const int draws = 50000;
  double sum = 0.0;
  Rng mc(9);
  for (int d = 0; d < draws; ++d) {
    sampler.set_state(state);
    sampler.sample_noise_variance(mc);
    sum += sampler.state().noise_var;
  }
  const double true_mean = scale / (shape - 1.0);
  const double true_var =
      scale * scale / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0));
  CHECK(std::abs(sum / draws - true_mean) <
        4.0 * std::sqrt(true_var / draws));
}

TEST_CASE("center conditional matches exhaustive enumeration") {
  const TimeGrid grid({0.0, 0.25, 0.5, 0.75, 1.0});
  const FunctionalDataset data = random_dataset(grid, 7, 51);
  Hyperparameters hp = default_hyperparameters(data, 2);
  GibbsSampler sampler(data, hp);

  Rng rng(10);
  for (int rep = 0; rep < 10; ++rep) {
    const ParamState state = admissible_state(data, rng, 2);
    sampler.set_state(state);
    for (std::size_t k = 0; k < 2; ++k) {
      const std::vector<double> got = sampler.center_distribution(k);
      REQUIRE(got.size() == grid.size());

      // The candidate at center c carries the current half-length clipped
      // to the nearest admissible value; the weight has no length-prior
      // factor.
      std::vector<double> logw(grid.size());
      for (std::size_t c = 0; c < grid.size(); ++c) {
        const auto lengths = admissible_half_lengths(grid, c);
        const auto& near =
            lengths[oracle_nearest(lengths, state.half_lengths[k])];
        logw[c] = oracle_candidate_log_weight(data, hp, state, k, near.lo,
                                              near.hi);
      }
      const std::vector<double> want = softmax(std::move(logw));
      double total = 0.0;
      for (std::size_t c = 0; c < got.size(); ++c) {
        total += got[c];
        CHECK(got[c] == doctest::Approx(want[c]).epsilon(1e-9));
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("half-length conditional matches exhaustive enumeration") {
  const TimeGrid grid({0.0, 0.25, 0.5, 0.75, 1.0});
  const FunctionalDataset data = random_dataset(grid, 7, 61);
  Hyperparameters hp = default_hyperparameters(data, 2);
  hp.a = 0.4;  // exercise a non-default length prior
  GibbsSampler sampler(data, hp);

  Rng rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const ParamState state = admissible_state(data, rng, 2);
    sampler.set_state(state);
    for (std::size_t k = 0; k < 2; ++k) {
      const std::vector<double> got = sampler.half_length_distribution(k);
      const auto c = *grid.index_of(state.centers[k]);
      const auto lengths = admissible_half_lengths(grid, c);
      REQUIRE(got.size() == lengths.size());

      // Candidate weight times the unnormalized gamma length prior.
      std::vector<double> logw(lengths.size());
      for (std::size_t i = 0; i < lengths.size(); ++i) {
        logw[i] = oracle_candidate_log_weight(data, hp, state, k,
                                              lengths[i].lo, lengths[i].hi) +
                  (hp.a - 1.0) * std::log(lengths[i].value) -
                  hp.b * lengths[i].value;
      }
      const std::vector<double> want = softmax(std::move(logw));
      for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("conditionals are exchangeable across interval slots") {
  const TimeGrid grid({0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  const FunctionalDataset data = random_dataset(grid, 9, 71);
  const Hyperparameters hp = default_hyperparameters(data, 2);
  GibbsSampler sampler(data, hp);

  Rng rng(12);
  const ParamState state = admissible_state(data, rng, 2);
  ParamState swapped = state;
  std::swap(swapped.centers[0], swapped.centers[1]);
  std::swap(swapped.half_lengths[0], swapped.half_lengths[1]);
  std::swap(swapped.weights[0], swapped.weights[1]);
  realize_state(swapped, data.grid());

  sampler.set_state(state);
  const auto center0 = sampler.center_distribution(0);
  const auto length1 = sampler.half_length_distribution(1);
  double shape = 0.0, scale = 0.0;
  sampler.noise_variance_conditional(shape, scale);

  sampler.set_state(swapped);
  const auto center1 = sampler.center_distribution(1);
  const auto length0 = sampler.half_length_distribution(0);
  double shape2 = 0.0, scale2 = 0.0;
  sampler.noise_variance_conditional(shape2, scale2);

  REQUIRE(center0.size() == center1.size());
  for (std::size_t c = 0; c < center0.size(); ++c)
    CHECK(center0[c] == doctest::Approx(center1[c]).epsilon(1e-12));
  REQUIRE(length1.size() == length0.size());
  for (std::size_t i = 0; i < length1.size(); ++i)
    CHECK(length1[i] == doctest::Approx(length0[i]).epsilon(1e-12));
  CHECK(shape == shape2);
  CHECK(scale == doctest::Approx(scale2).epsilon(1e-12));
}

TEST_CASE("sampled intervals stay admissible through sweeps") {
  const TimeGrid grid({0.0, 0.1, 0.3, 0.6, 0.8, 1.0});
  const FunctionalDataset data = random_dataset(grid, 10, 81);
  const Hyperparameters hp = default_hyperparameters(data, 2);
  GibbsSampler sampler(data, hp);
  Rng rng(13);
  sampler.init(rng);
  for (int sweep = 0; sweep < 200; ++sweep) {
    sampler.sweep(rng);
    const ParamState& s = sampler.state();
    for (std::size_t k = 0; k < s.centers.size(); ++k) {
      const auto idx = grid.index_of(s.centers[k]);
      REQUIRE(idx.has_value());
      const auto& lengths = sampler.admissible_at(*idx);
      const auto pos =
          find_admissible(lengths, s.half_lengths[k], grid.tolerance());
      REQUIRE(pos.has_value());
      CHECK(s.lo[k] == lengths[*pos].lo);
      CHECK(s.hi[k] == lengths[*pos].hi);
      CHECK(s.noise_var > 0.0);
    }
  }
  CHECK(sampler.degenerate_steps() == 0);
}

namespace {

Hyperparameters nig_hyper(const TimeGrid& grid) {
  Hyperparameters hp;
  hp.K = 1;
  hp.a = 0.5;
  hp.b = 1.0;
  hp.v = 5.0;
  hp.v0 = 25.0;
  hp.gamma = 0.5;
  hp.K0 = 1;
  hp.eps = grid.min_step();
  return hp;
}

// With one interval the (center, length) posterior is available exactly:
// integrating the intercept, weight, and noise variance out of the
// conjugate model leaves p(c, l | y) proportional to
// |M|^{-1/2} (y' M^{-1} y)^{-n/2} l^{a-1} e^{-b l} with
// M = I + Xt V Xt', Xt = [1, xbar], V = diag(v0, n / ridge).
// Returned log weights are indexed [center][admissible position].
std::vector<std::vector<double>> nig_cell_log_weights(
    const FunctionalDataset& data, const Hyperparameters& hp) {
  const auto& grid = data.grid();
  const auto n = static_cast<double>(data.n());
  std::vector<std::vector<double>> logw(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const auto lengths = admissible_half_lengths(grid, c);
    for (std::size_t i = 0; i < lengths.size(); ++i) {
      const Eigen::VectorXd col = oracle_column(data, lengths[i].lo,
                                                lengths[i].hi);
      const double g = col.squaredNorm();
      const double ridge = g > 0.0 ? g * (1.0 + hp.v) : 1.0;
      Eigen::MatrixXd Xt(data.n(), 2);
      Xt.col(0).setOnes();
      Xt.col(1) = col;
      Eigen::MatrixXd V = Eigen::MatrixXd::Zero(2, 2);
      V(0, 0) = hp.v0;
      V(1, 1) = n / ridge;
      Eigen::MatrixXd M =
          Eigen::MatrixXd::Identity(data.n(), data.n()) +
          Xt * V * Xt.transpose();
      Eigen::LLT<Eigen::MatrixXd> llt(M);
      REQUIRE(llt.info() == Eigen::Success);
      double logdet = 0.0;
      for (Eigen::Index d = 0; d < M.rows(); ++d)
        logdet += 2.0 * std::log(llt.matrixL()(d, d));
      const double S = data.outcomes().dot(llt.solve(data.outcomes()));
      logw[c].push_back(-0.5 * logdet - 0.5 * n * std::log(S) +
                        (hp.a - 1.0) * std::log(lengths[i].value) -
                        hp.b * lengths[i].value);
    }
  }
  return logw;
}

}  // namespace

TEST_CASE("fixed-center conditionals preserve the exact cell posterior") {
  const TimeGrid grid({0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  const FunctionalDataset data = random_dataset(grid, 12, 91);
  const Hyperparameters hp = nig_hyper(grid);
  const auto logw = nig_cell_log_weights(data, hp);

  // Cycling the intercept/weight, noise variance, and half-length draws
  // with the center held fixed is a Gibbs sampler on the restricted space,
  // so half-length frequencies must match the cell posterior renormalized
  // over the admissible set at that center. Centers 0 and 5 sit on the
  // boundary where the admissible set reaches farthest; 2 is interior.
  for (const std::size_t c0 : {std::size_t{0}, std::size_t{2},
                               std::size_t{5}}) {
    CAPTURE(c0);
    const std::vector<double> want = softmax(logw[c0]);
    GibbsSampler sampler(data, hp);
    Rng rng(29 + c0);
    sampler.init(rng);
    ParamState s = sampler.state();
    const auto& lens = sampler.admissible_at(c0);
    s.centers[0] = grid[c0];
    s.half_lengths[0] = lens[0].value;
    s.lo[0] = lens[0].lo;
    s.hi[0] = lens[0].hi;
    sampler.set_state(s);

    const std::int64_t iterations = 200000;
    const std::int64_t burn = 2000;
    const std::int64_t thin = 2;
    std::vector<std::int64_t> counts(lens.size(), 0);
    std::int64_t kept = 0;
    for (std::int64_t it = 0; it < iterations; ++it) {
      sampler.sample_intercept_and_weights(rng);
      sampler.sample_noise_variance(rng);
      sampler.sample_half_length(0, rng);
      if (it >= burn && (it - burn) % thin == 0) {
        const auto pos = find_admissible(
            lens, sampler.state().half_lengths[0], grid.tolerance());
        REQUIRE(pos.has_value());
        ++counts[*pos];
        ++kept;
      }
    }

    const auto N = static_cast<double>(kept);
    double tv = 0.0;
    for (std::size_t i = 0; i < lens.size(); ++i) {
      const double freq = static_cast<double>(counts[i]) / N;
      tv += 0.5 * std::abs(freq - want[i]);
      // Thinned draws still correlate; allow a small autocorrelation
      // factor on top of the binomial standard error.
      const double se = std::sqrt(2.0 * want[i] * (1.0 - want[i]) / N);
      CHECK(std::abs(freq - want[i]) < 6.0 * se + 5e-4);
    }
    CHECK(tv < 0.01);
  }
}

TEST_CASE("full sweeps track the cell posterior despite length clipping") {
  const TimeGrid grid({0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  const FunctionalDataset data = random_dataset(grid, 12, 91);
  const Hyperparameters hp = nig_hyper(grid);
  const auto logw = nig_cell_log_weights(data, hp);
  std::vector<double> flat;
  std::vector<std::pair<std::size_t, std::size_t>> cell_ids;
  for (std::size_t c = 0; c < grid.size(); ++c)
    for (std::size_t i = 0; i < logw[c].size(); ++i) {
      flat.push_back(logw[c][i]);
      cell_ids.emplace_back(c, i);
    }
  const std::vector<double> want = softmax(std::move(flat));

  GibbsConfig cfg;
  cfg.iterations = 202000;
  cfg.burn_in = 2000;
  cfg.thin = 2;
  cfg.seed = 17;
  const Chain chain = run_gibbs(data, hp, cfg);
  REQUIRE(chain.states.size() == 100000);

  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> counts;
  for (const ParamState& s : chain.states) {
    const auto c = *grid.index_of(s.centers[0]);
    const auto lengths = admissible_half_lengths(grid, c);
    const auto pos =
        find_admissible(lengths, s.half_lengths[0], grid.tolerance());
    REQUIRE(pos.has_value());
    ++counts[{c, *pos}];
  }

  // The center draw carries the current half-length along, clipping it to
  // the nearest admissible value at each candidate center. The clip is not
  // reversible (a long length kept at a boundary center maps to a shorter
  // one at an interior center but not back), so the sweep kernel is only
  // approximately stationary for the cell posterior; the fixed-center test
  // above covers the exact part. On this geometry the distortion stays
  // small and concentrates at boundary centers with long half-lengths
  // (total variation near 0.08), while a genuinely wrong conditional, such
  // as a dropped prior term, pushes it past 0.3. The loose bounds below
  // pin the implementation without absorbing such bugs.
  const auto N = static_cast<double>(chain.states.size());
  double tv = 0.0;
  for (std::size_t cell = 0; cell < cell_ids.size(); ++cell) {
    const auto it = counts.find(cell_ids[cell]);
    const double freq =
        it == counts.end() ? 0.0 : static_cast<double>(it->second) / N;
    tv += 0.5 * std::abs(freq - want[cell]);
    CHECK(std::abs(freq - want[cell]) < 0.05);
  }
  CHECK(tv < 0.12);
}
