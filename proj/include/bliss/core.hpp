#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace bliss {

// Closed observation window for coefficient functions.
struct Domain {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  bool contains(double t) const { return t >= lo && t <= hi; }
};

// Closed interval [lo, hi]; lo == hi is a valid degenerate interval.
struct ClosedInterval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double t) const { return t >= lo && t <= hi; }
};

// Interval parametrized by center and half-length, before clipping.
struct Interval {
  double center = 0.0;
  double half_length = 0.0;
};

// [center - half_length, center + half_length] clipped to the domain.
// The center must lie in the domain and the half-length must be nonnegative.
ClosedInterval realize_interval(const Interval& iv, const Domain& domain);

// Strictly increasing observation times t_1 < ... < t_p, p >= 2.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> points);

  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t j) const { return points_[j]; }
  const std::vector<double>& points() const { return points_; }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }
  Domain span() const { return {points_.front(), points_.back()}; }
  double min_step() const { return min_step_; }
  // Number of cells [t_j, t_{j+1}].
  std::size_t cells() const { return points_.size() - 1; }

  // Index of the grid point equal to t up to a small absolute tolerance.
  std::optional<std::size_t> index_of(double t) const;
  // Index j with t in [t_j, t_{j+1}]; t must lie in the span.
  std::size_t segment_of(double t) const;

  double tolerance() const { return tol_; }

 private:
  std::vector<double> points_;
  double min_step_ = 0.0;
  double tol_ = 0.0;
};

// Finite union of closed intervals, kept sorted and merged (touching
// intervals coalesce). Supports the measure arithmetic used by the
// support-recovery losses.
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(std::vector<ClosedInterval> intervals);

  const std::vector<ClosedInterval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  double measure() const;
  bool contains(double t) const;

 private:
  std::vector<ClosedInterval> intervals_;
};

// Lebesgue measure of the intersection of two interval unions.
double measure_intersection(const IntervalSet& a, const IntervalSet& b);
// |a \ b| and |a delta b|, derived from the intersection measure.
double measure_difference(const IntervalSet& a, const IntervalSet& b);
double measure_symmetric_difference(const IntervalSet& a, const IntervalSet& b);

// Sum of interval-normalized indicators: beta(t) = sum_k c_k / |I_k| on the
// realized interval I_k. Intervals may overlap; contributions add.
struct StepFunction {
  Domain domain;
  std::vector<Interval> intervals;     // at least one
  std::vector<double> coefficients;    // same length as intervals
};

// Validates shapes and center/half-length preconditions.
StepFunction make_step_function(Domain domain, std::vector<Interval> intervals,
                                std::vector<double> coefficients);

// Pointwise value at t (closed-interval membership). Throws if t is outside
// the domain, or if a degenerate realized interval carrying a nonzero
// coefficient contains t.
double eval_step_function(const StepFunction& f, double t);

// Union of realized intervals with nonzero coefficients.
IntervalSet support_of(const StepFunction& f);

// Piecewise-constant function with raw (unnormalized) piece values, zero
// elsewhere. Pieces are sorted and pairwise disjoint with positive length.
struct DisjointPiece {
  ClosedInterval interval;
  double value = 0.0;
};

struct DisjointStepFunction {
  std::vector<DisjointPiece> pieces;  // possibly empty: the zero function
};

// Sorts by left endpoint and validates disjointness and positive lengths.
DisjointStepFunction make_disjoint_step_function(std::vector<DisjointPiece> pieces);

double eval_disjoint(const DisjointStepFunction& f, double t);

// Union of pieces with nonzero values.
IntervalSet support_of(const DisjointStepFunction& f);

// Quadrature on a grid: rules below integrate the piecewise-linear
// interpolant of the sampled values, so they are exact for linear data.
std::vector<double> trapezoid_weights(const TimeGrid& grid);
double integrate(const TimeGrid& grid, std::span<const double> values);

// Integral of the interpolant over iv intersected with the grid span
// (values are treated as zero outside the span).
double integral_over(const TimeGrid& grid, std::span<const double> values,
                     const ClosedInterval& iv);

// integral_over(iv) / |iv|. Throws on a degenerate interval and when iv
// misses the grid span entirely.
double partial_mean(const TimeGrid& grid, std::span<const double> values,
                    const ClosedInterval& iv);

// Integral of f(t) * x(t) over the domain: sum of c_k times the partial mean
// of x on the realized interval I_k. Throws if a nonzero coefficient sits on
// a degenerate interval.
double integrate_product(const StepFunction& f, const TimeGrid& grid,
                         std::span<const double> x);

// One admissible half-length at a given center: the realized interval
// endpoints land exactly on grid points.
struct AdmissibleLength {
  double value = 0.0;   // half-length
  std::size_t lo = 0;   // realized left grid index
  std::size_t hi = 0;   // realized right grid index, hi > lo
};

// Half-lengths |t_j - t_c| whose unclipped endpoints each land on a grid
// point or fall past the span (clipping them to t_1 or t_p). Sorted
// ascending, distinct values. Every center admits at least one entry, and
// every realized interval contains at least two grid points.
std::vector<AdmissibleLength> admissible_half_lengths(const TimeGrid& grid,
                                                      std::size_t center_idx);

// Entry with value closest to target; ties resolve to the smaller value.
const AdmissibleLength& nearest_admissible(
    const std::vector<AdmissibleLength>& lengths, double target);

// Entry matching value within tol, if any.
std::optional<std::size_t> find_admissible(
    const std::vector<AdmissibleLength>& lengths, double value, double tol);

// Functional sample: n curves observed on a common grid plus scalar
// outcomes. Stores prefix integrals so partial means over grid-aligned
// intervals cost O(1) per curve.
class FunctionalDataset {
 public:
  FunctionalDataset(TimeGrid grid, Eigen::MatrixXd curves,
                    Eigen::VectorXd outcomes);

  const TimeGrid& grid() const { return grid_; }
  const Eigen::MatrixXd& curves() const { return curves_; }
  const Eigen::VectorXd& outcomes() const { return outcomes_; }
  Eigen::Index n() const { return curves_.rows(); }

  // Integral of curve i's interpolant over iv clipped to the span.
  double curve_integral(Eigen::Index i, const ClosedInterval& iv) const;
  // Grid-aligned fast path over [t_lo, t_hi]; bitwise-equal to the general
  // overload at grid-aligned endpoints.
  double curve_integral(Eigen::Index i, std::size_t lo, std::size_t hi) const;

  // Content hash of dimensions, grid, curves, and outcomes.
  std::uint64_t fingerprint() const;

 private:
  TimeGrid grid_;
  Eigen::MatrixXd curves_;   // n x p
  Eigen::MatrixXd prefix_;   // n x p, prefix(i, j) = integral of curve i up to t_j
  Eigen::VectorXd outcomes_; // n
};

}  // namespace bliss
