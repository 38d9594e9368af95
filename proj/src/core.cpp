#include "bliss/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "bliss/errors.hpp"
#include "bliss/rng.hpp"

namespace bliss {

namespace {

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(),
                     [](double x) { return std::isfinite(x); });
}

// Integral of the piecewise-linear interpolant from the first grid point up
// to t, given per-point values and prefix integrals. Endpoints within grid
// tolerance of a grid point snap to it, which keeps this path bitwise equal
// to plain prefix differences for grid-aligned intervals.
template <typename Value, typename Prefix>
double prefix_at(const TimeGrid& grid, Value&& value, Prefix&& prefix,
                 double t) {
  if (auto idx = grid.index_of(t)) return prefix(*idx);
  std::size_t j = grid.segment_of(t);
  double dt = t - grid[j];
  double seg = grid[j + 1] - grid[j];
  double vt = value(j) + (value(j + 1) - value(j)) * (dt / seg);
  return prefix(j) + dt * (value(j) + vt) * 0.5;
}

template <typename Value, typename Prefix>
double integral_over_impl(const TimeGrid& grid, Value&& value, Prefix&& prefix,
                          const ClosedInterval& iv) {
  double lo = std::max(iv.lo, grid.front());
  double hi = std::min(iv.hi, grid.back());
  if (!(lo < hi)) return 0.0;
  return prefix_at(grid, value, prefix, hi) -
         prefix_at(grid, value, prefix, lo);
}

}  // namespace

ClosedInterval realize_interval(const Interval& iv, const Domain& domain) {
  if (!(iv.half_length >= 0.0)) {
    throw ConfigError("realize_interval: half-length must be nonnegative");
  }
  if (!domain.contains(iv.center)) {
    throw ConfigError("realize_interval: center outside the domain");
  }
  return {std::max(iv.center - iv.half_length, domain.lo),
          std::min(iv.center + iv.half_length, domain.hi)};
}

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw ConfigError("TimeGrid: at least two points required");
  }
  if (!all_finite(points_)) {
    throw DataError("TimeGrid: non-finite grid point");
  }
  min_step_ = points_[1] - points_[0];
  for (std::size_t j = 0; j + 1 < points_.size(); ++j) {
    double step = points_[j + 1] - points_[j];
    if (!(step > 0.0)) {
      throw DataError("TimeGrid: points must be strictly increasing");
    }
    min_step_ = std::min(min_step_, step);
  }
  tol_ = 1e-9 * std::max({1.0, std::abs(points_.front()),
                          std::abs(points_.back())});
}

std::optional<std::size_t> TimeGrid::index_of(double t) const {
  auto it = std::lower_bound(points_.begin(), points_.end(), t);
  if (it != points_.end() && std::abs(*it - t) <= tol_) {
    return static_cast<std::size_t>(it - points_.begin());
  }
  if (it != points_.begin() && std::abs(*(it - 1) - t) <= tol_) {
    return static_cast<std::size_t>(it - points_.begin()) - 1;
  }
  return std::nullopt;
}

std::size_t TimeGrid::segment_of(double t) const {
  if (t < points_.front() - tol_ || t > points_.back() + tol_) {
    throw ConfigError("segment_of: point outside the grid span");
  }
  if (t <= points_.front()) return 0;
  if (t >= points_.back()) return points_.size() - 2;
  auto it = std::upper_bound(points_.begin(), points_.end(), t);
  return static_cast<std::size_t>(it - points_.begin()) - 1;
}

IntervalSet::IntervalSet(std::vector<ClosedInterval> intervals) {
  for (const auto& iv : intervals) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
      throw ConfigError("IntervalSet: invalid interval");
    }
  }
  std::sort(intervals.begin(), intervals.end(),
            [](const ClosedInterval& a, const ClosedInterval& b) {
              return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
            });
  for (const auto& iv : intervals) {
    if (!intervals_.empty() && iv.lo <= intervals_.back().hi) {
      intervals_.back().hi = std::max(intervals_.back().hi, iv.hi);
    } else {
      intervals_.push_back(iv);
    }
  }
}

double IntervalSet::measure() const {
  double total = 0.0;
  for (const auto& iv : intervals_) total += iv.length();
  return total;
}

bool IntervalSet::contains(double t) const {
  for (const auto& iv : intervals_) {
    if (iv.contains(t)) return true;
    if (iv.lo > t) break;
  }
  return false;
}

double measure_intersection(const IntervalSet& a, const IntervalSet& b) {
  const auto& as = a.intervals();
  const auto& bs = b.intervals();
  double total = 0.0;
  std::size_t i = 0, j = 0;
  while (i < as.size() && j < bs.size()) {
    double lo = std::max(as[i].lo, bs[j].lo);
    double hi = std::min(as[i].hi, bs[j].hi);
    if (hi > lo) total += hi - lo;
    if (as[i].hi < bs[j].hi) {
      ++i;
    } else {
      ++j;
    }
  }
  return total;
}

double measure_difference(const IntervalSet& a, const IntervalSet& b) {
  return a.measure() - measure_intersection(a, b);
}

double measure_symmetric_difference(const IntervalSet& a,
                                    const IntervalSet& b) {
  return a.measure() + b.measure() - 2.0 * measure_intersection(a, b);
}

StepFunction make_step_function(Domain domain, std::vector<Interval> intervals,
                                std::vector<double> coefficients) {
  if (intervals.empty()) {
    throw ConfigError("StepFunction: at least one interval required");
  }
  if (intervals.size() != coefficients.size()) {
    throw ConfigError("StepFunction: intervals and coefficients differ in size");
  }
  if (!(domain.length() > 0.0)) {
    throw ConfigError("StepFunction: domain must have positive length");
  }
  if (!all_finite(coefficients)) {
    throw ConfigError("StepFunction: non-finite coefficient");
  }
  for (const auto& iv : intervals) {
    realize_interval(iv, domain);  // validates center and half-length
  }
  return {domain, std::move(intervals), std::move(coefficients)};
}

double eval_step_function(const StepFunction& f, double t) {
  if (!f.domain.contains(t)) {
    throw DataError("eval_step_function: point outside the domain");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < f.intervals.size(); ++k) {
    ClosedInterval iv = realize_interval(f.intervals[k], f.domain);
    if (!iv.contains(t)) continue;
    if (iv.length() == 0.0) {
      if (f.coefficients[k] != 0.0) {
        throw NumericError("eval_step_function: degenerate interval with nonzero coefficient");
      }
      continue;
    }
    total += f.coefficients[k] / iv.length();
  }
  return total;
}

IntervalSet support_of(const StepFunction& f) {
  std::vector<ClosedInterval> parts;
  for (std::size_t k = 0; k < f.intervals.size(); ++k) {
    if (f.coefficients[k] == 0.0) continue;
    ClosedInterval iv = realize_interval(f.intervals[k], f.domain);
    if (iv.length() > 0.0) parts.push_back(iv);
  }
  return IntervalSet(std::move(parts));
}

DisjointStepFunction make_disjoint_step_function(
    std::vector<DisjointPiece> pieces) {
  std::sort(pieces.begin(), pieces.end(),
            [](const DisjointPiece& a, const DisjointPiece& b) {
              return a.interval.lo < b.interval.lo;
            });
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const auto& iv = pieces[k].interval;
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) ||
        !std::isfinite(pieces[k].value)) {
      throw ConfigError("DisjointStepFunction: non-finite piece");
    }
    if (!(iv.length() > 0.0)) {
      throw ConfigError("DisjointStepFunction: piece must have positive length");
    }
    if (k > 0 && !(iv.lo > pieces[k - 1].interval.hi)) {
      throw ConfigError("DisjointStepFunction: pieces must be pairwise disjoint");
    }
  }
  return {std::move(pieces)};
}

double eval_disjoint(const DisjointStepFunction& f, double t) {
  for (const auto& piece : f.pieces) {
    if (piece.interval.contains(t)) return piece.value;
    if (piece.interval.lo > t) break;
  }
  return 0.0;
}

IntervalSet support_of(const DisjointStepFunction& f) {
  std::vector<ClosedInterval> parts;
  for (const auto& piece : f.pieces) {
    if (piece.value != 0.0) parts.push_back(piece.interval);
  }
  return IntervalSet(std::move(parts));
}

std::vector<double> trapezoid_weights(const TimeGrid& grid) {
  std::size_t p = grid.size();
  std::vector<double> w(p, 0.0);
  w[0] = 0.5 * (grid[1] - grid[0]);
  for (std::size_t j = 1; j + 1 < p; ++j) {
    w[j] = 0.5 * (grid[j + 1] - grid[j - 1]);
  }
  w[p - 1] = 0.5 * (grid[p - 1] - grid[p - 2]);
  return w;
}

double integrate(const TimeGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) {
    throw ConfigError("integrate: values and grid differ in size");
  }
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
    total += (grid[j + 1] - grid[j]) * (values[j] + values[j + 1]) * 0.5;
  }
  return total;
}

double integral_over(const TimeGrid& grid, std::span<const double> values,
                     const ClosedInterval& iv) {
  if (values.size() != grid.size()) {
    throw ConfigError("integral_over: values and grid differ in size");
  }
  std::vector<double> prefix(grid.size(), 0.0);
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
    prefix[j + 1] = prefix[j] +
        (grid[j + 1] - grid[j]) * (values[j] + values[j + 1]) * 0.5;
  }
  return integral_over_impl(
      grid, [&](std::size_t j) { return values[j]; },
      [&](std::size_t j) { return prefix[j]; }, iv);
}

double partial_mean(const TimeGrid& grid, std::span<const double> values,
                    const ClosedInterval& iv) {
  if (!(iv.length() > 0.0)) {
    throw NumericError("partial_mean: degenerate interval");
  }
  if (iv.hi <= grid.front() || iv.lo >= grid.back()) {
    throw NumericError("partial_mean: interval misses the grid span");
  }
  return integral_over(grid, values, iv) / iv.length();
}

double integrate_product(const StepFunction& f, const TimeGrid& grid,
                         std::span<const double> x) {
  if (x.size() != grid.size()) {
    throw ConfigError("integrate_product: curve and grid differ in size");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < f.intervals.size(); ++k) {
    ClosedInterval iv = realize_interval(f.intervals[k], f.domain);
    if (iv.length() == 0.0) {
      if (f.coefficients[k] != 0.0) {
        throw NumericError("integrate_product: degenerate interval with nonzero coefficient");
      }
      continue;
    }
    total += f.coefficients[k] * integral_over(grid, x, iv) / iv.length();
  }
  return total;
}

std::vector<AdmissibleLength> admissible_half_lengths(const TimeGrid& grid,
                                                      std::size_t center_idx) {
  std::size_t p = grid.size();
  if (center_idx >= p) {
    throw ConfigError("admissible_half_lengths: center index out of range");
  }
  double tc = grid[center_idx];
  double tol = grid.tolerance();
  std::vector<AdmissibleLength> out;
  for (std::size_t j = 0; j < p; ++j) {
    if (j == center_idx) continue;
    double len = std::abs(grid[j] - tc);
    double left = tc - len;
    double right = tc + len;
    std::size_t lo, hi;
    if (left <= grid.front() + tol) {
      lo = 0;
    } else if (auto idx = grid.index_of(left)) {
      lo = *idx;
    } else {
      continue;
    }
    if (right >= grid.back() - tol) {
      hi = p - 1;
    } else if (auto idx = grid.index_of(right)) {
      hi = *idx;
    } else {
      continue;
    }
    if (lo >= hi) continue;
    out.push_back({len, lo, hi});
  }
  std::sort(out.begin(), out.end(),
            [](const AdmissibleLength& a, const AdmissibleLength& b) {
              return a.value < b.value;
            });
  std::vector<AdmissibleLength> dedup;
  for (const auto& al : out) {
    if (!dedup.empty() && std::abs(al.value - dedup.back().value) <= tol) {
      continue;
    }
    dedup.push_back(al);
  }
  return dedup;
}

const AdmissibleLength& nearest_admissible(
    const std::vector<AdmissibleLength>& lengths, double target) {
  if (lengths.empty()) {
    throw NumericError("nearest_admissible: empty candidate set");
  }
  std::size_t best = 0;
  double best_gap = std::abs(lengths[0].value - target);
  for (std::size_t i = 1; i < lengths.size(); ++i) {
    double gap = std::abs(lengths[i].value - target);
    if (gap < best_gap) {  // ties keep the earlier (smaller) value
      best = i;
      best_gap = gap;
    }
  }
  return lengths[best];
}

std::optional<std::size_t> find_admissible(
    const std::vector<AdmissibleLength>& lengths, double value, double tol) {
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (std::abs(lengths[i].value - value) <= tol) return i;
  }
  return std::nullopt;
}

FunctionalDataset::FunctionalDataset(TimeGrid grid, Eigen::MatrixXd curves,
                                     Eigen::VectorXd outcomes)
    : grid_(std::move(grid)),
      curves_(std::move(curves)),
      outcomes_(std::move(outcomes)) {
  Eigen::Index n = curves_.rows();
  auto p = static_cast<Eigen::Index>(grid_.size());
  if (n < 2) {
    throw DataError("FunctionalDataset: at least two curves required");
  }
  if (curves_.cols() != p) {
    throw DataError("FunctionalDataset: curve columns do not match the grid");
  }
  if (outcomes_.size() != n) {
    throw DataError("FunctionalDataset: outcomes do not match the curve count");
  }
  if (!curves_.allFinite() || !outcomes_.allFinite()) {
    throw DataError("FunctionalDataset: non-finite entry");
  }
  prefix_.resize(n, p);
  prefix_.col(0).setZero();
  for (Eigen::Index j = 0; j + 1 < p; ++j) {
    double step = grid_[static_cast<std::size_t>(j + 1)] -
                  grid_[static_cast<std::size_t>(j)];
    prefix_.col(j + 1) = prefix_.col(j) +
        step * 0.5 * (curves_.col(j) + curves_.col(j + 1));
  }
}

double FunctionalDataset::curve_integral(Eigen::Index i,
                                         const ClosedInterval& iv) const {
  return integral_over_impl(
      grid_,
      [&](std::size_t j) { return curves_(i, static_cast<Eigen::Index>(j)); },
      [&](std::size_t j) { return prefix_(i, static_cast<Eigen::Index>(j)); },
      iv);
}

double FunctionalDataset::curve_integral(Eigen::Index i, std::size_t lo,
                                         std::size_t hi) const {
  return prefix_(i, static_cast<Eigen::Index>(hi)) -
         prefix_(i, static_cast<Eigen::Index>(lo));
}

std::uint64_t FunctionalDataset::fingerprint() const {
  std::vector<double> buffer;
  buffer.reserve(2 + grid_.size() + static_cast<std::size_t>(curves_.size()) +
                 static_cast<std::size_t>(outcomes_.size()));
  buffer.push_back(static_cast<double>(curves_.rows()));
  buffer.push_back(static_cast<double>(curves_.cols()));
  buffer.insert(buffer.end(), grid_.points().begin(), grid_.points().end());
  for (Eigen::Index i = 0; i < curves_.rows(); ++i) {
    for (Eigen::Index j = 0; j < curves_.cols(); ++j) {
      buffer.push_back(curves_(i, j));
    }
  }
  for (Eigen::Index i = 0; i < outcomes_.size(); ++i) {
    buffer.push_back(outcomes_(i));
  }
  return fnv1a64(buffer.data(), buffer.size() * sizeof(double));
}

}  // namespace bliss
